#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "vascl.h"

using nlohmann::json;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("vascl_capi_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << contents;
}

const char* kTinyConfig = R"({
  "seed": 3,
  "data": {"kind": "mixture", "components": 3, "dim": 6, "n": 90, "scale": 6.0, "std": 1.0},
  "model": {"encoder_layers": [6], "dropout": 0.1, "head_out": 6},
  "loss": {"k": 3, "delta": 1.0},
  "schedule": {"epochs": 1, "batch_size": 16, "eval_every": 4, "max_steps": 6},
  "eval": {"kmeans_runs": 2, "probe_splits": 2, "probe_shots": 4, "num_pairs": 40,
           "purity_k": [1, 5]}
})";

}  // namespace

TEST_CASE("version and clean error state") {
    CHECK(vascl_version() != nullptr);
    CHECK(std::strlen(vascl_version()) > 0);
    CHECK(std::string(vascl_last_error()).empty());
}

TEST_CASE("full train -> open -> eval -> analyze round trip through the C API") {
    TempDir tmp;
    write_file(tmp.sub("config.json"), kTinyConfig);
    const std::string out_dir = tmp.sub("run");
    REQUIRE(vascl_train(tmp.sub("config.json").c_str(), out_dir.c_str()) == VASCL_OK);
    CHECK(std::filesystem::exists(out_dir + "/best.ckpt"));
    CHECK(std::filesystem::exists(out_dir + "/final.ckpt"));
    CHECK(std::filesystem::exists(out_dir + "/metrics.jsonl"));

    vascl_checkpoint* ckpt = nullptr;
    REQUIRE(vascl_checkpoint_open((out_dir + "/final.ckpt").c_str(), &ckpt) == VASCL_OK);
    REQUIRE(ckpt != nullptr);

    // labeled dataset in text format for eval
    std::string text;
    for (int i = 0; i < 60; ++i) {
        const int label = i % 3;
        text += std::to_string(i) + " " + std::to_string(label);
        for (int j = 0; j < 6; ++j)
            text += " " + std::to_string((j == label ? 5.0 : 0.0) + 0.01 * i);
        text += "\n";
    }
    write_file(tmp.sub("data.txt"), text);
    vascl_dataset* data = nullptr;
    REQUIRE(vascl_dataset_open(tmp.sub("data.txt").c_str(), &data) == VASCL_OK);
    CHECK(vascl_dataset_size(data) == 60);
    CHECK(vascl_dataset_dim(data) == 6);
    CHECK(vascl_dataset_has_labels(data) == 1);

    char* out_json = nullptr;
    REQUIRE(vascl_eval(ckpt, data, "purity,clustering", nullptr, 7, &out_json) == VASCL_OK);
    REQUIRE(out_json != nullptr);
    const json rec = json::parse(out_json);
    CHECK(rec.contains("purity"));
    CHECK(rec.contains("clustering"));
    vascl_string_free(out_json);

    char* report_json = nullptr;
    char* report_csv = nullptr;
    REQUIRE(vascl_analyze(ckpt, ckpt, data, 7, &report_json, &report_csv) == VASCL_OK);
    REQUIRE(report_json != nullptr);
    REQUIRE(report_csv != nullptr);
    const json report = json::parse(report_json);
    CHECK(report.at("a") == report.at("b"));
    CHECK(std::string(report_csv).find("metric,a,b") == 0);
    vascl_string_free(report_json);
    vascl_string_free(report_csv);

    vascl_dataset_close(data);
    vascl_checkpoint_close(ckpt);
}

TEST_CASE("error codes map the exception taxonomy") {
    TempDir tmp;

    // config error: invalid JSON
    write_file(tmp.sub("bad.json"), "{nope");
    CHECK(vascl_train(tmp.sub("bad.json").c_str(), tmp.sub("out").c_str()) == VASCL_ERR_CONFIG);
    CHECK(std::strlen(vascl_last_error()) > 0);

    // config error: unknown key
    write_file(tmp.sub("unknown.json"), "{\"bogus\": 1}");
    CHECK(vascl_train(tmp.sub("unknown.json").c_str(), tmp.sub("out2").c_str()) ==
          VASCL_ERR_CONFIG);

    // data error: missing checkpoint / malformed dataset
    vascl_checkpoint* ckpt = nullptr;
    CHECK(vascl_checkpoint_open(tmp.sub("missing.ckpt").c_str(), &ckpt) == VASCL_ERR_DATA);
    CHECK(ckpt == nullptr);
    write_file(tmp.sub("garbage.bin"), "not a dataset at all");
    vascl_dataset* data = nullptr;
    CHECK(vascl_dataset_open(tmp.sub("garbage.bin").c_str(), &data) == VASCL_ERR_DATA);
    CHECK(data == nullptr);

    // null arguments are config errors, not crashes
    CHECK(vascl_train(nullptr, "out") == VASCL_ERR_CONFIG);
    CHECK(vascl_checkpoint_open(nullptr, &ckpt) == VASCL_ERR_CONFIG);
    CHECK(vascl_eval(nullptr, nullptr, "purity", nullptr, 0, nullptr) == VASCL_ERR_CONFIG);
}

TEST_CASE("eval task/data mismatch surfaces as a data error with message") {
    TempDir tmp;
    write_file(tmp.sub("config.json"), kTinyConfig);
    REQUIRE(vascl_train(tmp.sub("config.json").c_str(), tmp.sub("run").c_str()) == VASCL_OK);
    vascl_checkpoint* ckpt = nullptr;
    REQUIRE(vascl_checkpoint_open(tmp.sub("run/final.ckpt").c_str(), &ckpt) == VASCL_OK);

    // unlabeled dataset
    std::string text;
    for (int i = 0; i < 10; ++i) {
        text += std::to_string(i);
        for (int j = 0; j < 6; ++j) text += " " + std::to_string(0.1 * (i + j));
        text += "\n";
    }
    write_file(tmp.sub("unlabeled.txt"), text);
    vascl_dataset* data = nullptr;
    REQUIRE(vascl_dataset_open(tmp.sub("unlabeled.txt").c_str(), &data) == VASCL_OK);
    CHECK(vascl_dataset_has_labels(data) == 0);

    char* out_json = nullptr;
    CHECK(vascl_eval(ckpt, data, "clustering", nullptr, 1, &out_json) == VASCL_ERR_DATA);
    CHECK(out_json == nullptr);
    CHECK(std::string(vascl_last_error()).find("label") != std::string::npos);

    // spearman without pairs
    CHECK(vascl_eval(ckpt, data, "spearman", nullptr, 1, &out_json) == VASCL_ERR_DATA);

    vascl_dataset_close(data);
    vascl_checkpoint_close(ckpt);
}
