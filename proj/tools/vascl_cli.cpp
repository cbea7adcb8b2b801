// Command-line front end; links only the public C API.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vascl.h"

namespace {

int fail(vascl_status status) {
    std::fprintf(stderr, "error: %s\n", vascl_last_error());
    return static_cast<int>(status);
}

struct CheckpointHandle {
    vascl_checkpoint* ptr = nullptr;
    ~CheckpointHandle() { vascl_checkpoint_close(ptr); }
};

struct DatasetHandle {
    vascl_dataset* ptr = nullptr;
    ~DatasetHandle() { vascl_dataset_close(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vascl: contrastive training with virtual adversarial augmentation"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* train = app.add_subcommand("train", "run a training job from a JSON config");
    train->add_option("--config", config_path, "experiment config (JSON)")->required();
    train->add_option("--out", out_dir, "output directory")->required();

    std::string ckpt_path, data_path, tasks = "purity", pairs_path, eval_out;
    std::uint64_t seed = 0;
    auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint on an embedding file");
    evalc->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
    evalc->add_option("--data", data_path, "embedding file (text or VEMB)")->required();
    evalc->add_option("--tasks", tasks, "comma-separated: spearman,clustering,probe,purity,triples");
    evalc->add_option("--pairs", pairs_path, "scored pairs file for the spearman task");
    evalc->add_option("--seed", seed, "evaluation seed");
    evalc->add_option("--out", eval_out, "write the metrics record here instead of stdout");

    std::string ckpt_a, ckpt_b, analyze_out;
    auto* analyze = app.add_subcommand("analyze", "compare two checkpoints side by side");
    analyze->add_option("--a", ckpt_a, "first checkpoint")->required();
    analyze->add_option("--b", ckpt_b, "second checkpoint")->required();
    analyze->add_option("--data", data_path, "embedding file")->required();
    analyze->add_option("--seed", seed, "analysis seed");
    analyze->add_option("--out", analyze_out, "output prefix (writes <out>.json and <out>.csv)");

    CLI11_PARSE(app, argc, argv);

    if (const char* env_seed = std::getenv("VASCL_SEED")) {
        if (!evalc->count("--seed") && !analyze->count("--seed")) {
            seed = std::strtoull(env_seed, nullptr, 10);
        }
    }

    if (train->parsed()) {
        const vascl_status status = vascl_train(config_path.c_str(), out_dir.c_str());
        if (status != VASCL_OK) return fail(status);
        std::printf("training complete: %s\n", out_dir.c_str());
        return 0;
    }

    if (evalc->parsed()) {
        CheckpointHandle ckpt;
        DatasetHandle data;
        vascl_status status = vascl_checkpoint_open(ckpt_path.c_str(), &ckpt.ptr);
        if (status != VASCL_OK) return fail(status);
        status = vascl_dataset_open(data_path.c_str(), &data.ptr);
        if (status != VASCL_OK) return fail(status);
        char* json = nullptr;
        status = vascl_eval(ckpt.ptr, data.ptr, tasks.c_str(),
                            pairs_path.empty() ? nullptr : pairs_path.c_str(), seed, &json);
        if (status != VASCL_OK) return fail(status);
        if (eval_out.empty()) {
            std::printf("%s\n", json);
        } else {
            std::ofstream out(eval_out);
            out << json << "\n";
        }
        vascl_string_free(json);
        return 0;
    }

    // analyze
    CheckpointHandle a, b;
    DatasetHandle data;
    vascl_status status = vascl_checkpoint_open(ckpt_a.c_str(), &a.ptr);
    if (status != VASCL_OK) return fail(status);
    status = vascl_checkpoint_open(ckpt_b.c_str(), &b.ptr);
    if (status != VASCL_OK) return fail(status);
    status = vascl_dataset_open(data_path.c_str(), &data.ptr);
    if (status != VASCL_OK) return fail(status);
    char* json = nullptr;
    char* csv = nullptr;
    status = vascl_analyze(a.ptr, b.ptr, data.ptr, seed, &json, &csv);
    if (status != VASCL_OK) return fail(status);
    if (analyze_out.empty()) {
        std::printf("%s\n%s", json, csv);
    } else {
        std::ofstream(analyze_out + ".json") << json << "\n";
        std::ofstream(analyze_out + ".csv") << csv;
    }
    vascl_string_free(json);
    vascl_string_free(csv);
    return 0;
}
