#include "vascl.h"

#include <cstring>
#include <string>

#include "vascl/data.hpp"
#include "vascl/errors.hpp"
#include "vascl/experiment.hpp"
#include "vascl/model.hpp"

struct vascl_checkpoint {
    vascl::ModelParams params;
};

struct vascl_dataset {
    vascl::Dataset data;
};

namespace {

thread_local std::string g_last_error;

vascl_status set_error(vascl_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

template <typename Fn>
vascl_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return VASCL_OK;
    } catch (const vascl::ConfigError& e) {
        return set_error(VASCL_ERR_CONFIG, e.what());
    } catch (const vascl::DataError& e) {
        return set_error(VASCL_ERR_DATA, e.what());
    } catch (const vascl::NumericError& e) {
        return set_error(VASCL_ERR_NUMERIC, e.what());
    } catch (const std::exception& e) {
        return set_error(VASCL_ERR_NUMERIC, e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::vector<std::string> split_tasks(const char* tasks) {
    std::vector<std::string> out;
    if (tasks == nullptr) return out;
    std::string current;
    for (const char* p = tasks;; ++p) {
        if (*p == ',' || *p == '\0') {
            if (!current.empty()) out.push_back(current);
            current.clear();
            if (*p == '\0') break;
        } else if (*p != ' ') {
            current += *p;
        }
    }
    return out;
}

}  // namespace

extern "C" {

const char* vascl_version(void) { return "0.1.0"; }

const char* vascl_last_error(void) { return g_last_error.c_str(); }

vascl_status vascl_train(const char* config_path, const char* out_dir) {
    if (config_path == nullptr || out_dir == nullptr) {
        return set_error(VASCL_ERR_CONFIG, "vascl_train: null argument");
    }
    return guarded([&] {
        const vascl::ExperimentConfig config = vascl::ExperimentConfig::from_file(config_path);
        vascl::run_training(config, out_dir);
    });
}

vascl_status vascl_checkpoint_open(const char* path, vascl_checkpoint** out) {
    if (path == nullptr || out == nullptr) {
        return set_error(VASCL_ERR_CONFIG, "vascl_checkpoint_open: null argument");
    }
    return guarded([&] { *out = new vascl_checkpoint{vascl::load_checkpoint(path)}; });
}

void vascl_checkpoint_close(vascl_checkpoint* ckpt) { delete ckpt; }

vascl_status vascl_dataset_open(const char* path, vascl_dataset** out) {
    if (path == nullptr || out == nullptr) {
        return set_error(VASCL_ERR_CONFIG, "vascl_dataset_open: null argument");
    }
    return guarded([&] { *out = new vascl_dataset{vascl::load_embeddings(path)}; });
}

void vascl_dataset_close(vascl_dataset* dataset) { delete dataset; }

int64_t vascl_dataset_size(const vascl_dataset* dataset) {
    return dataset == nullptr ? -1 : static_cast<int64_t>(dataset->data.size());
}

int64_t vascl_dataset_dim(const vascl_dataset* dataset) {
    return dataset == nullptr ? -1 : static_cast<int64_t>(dataset->data.dim());
}

int vascl_dataset_has_labels(const vascl_dataset* dataset) {
    return dataset != nullptr && dataset->data.has_labels() ? 1 : 0;
}

vascl_status vascl_eval(const vascl_checkpoint* ckpt, const vascl_dataset* dataset,
                        const char* tasks, const char* pairs_path, uint64_t seed,
                        char** out_json) {
    if (ckpt == nullptr || dataset == nullptr || tasks == nullptr || out_json == nullptr) {
        return set_error(VASCL_ERR_CONFIG, "vascl_eval: null argument");
    }
    return guarded([&] {
        const std::vector<std::string> task_list = split_tasks(tasks);
        if (task_list.empty()) throw vascl::ConfigError("vascl_eval: empty task list");
        std::vector<vascl::ScoredPair> pairs;
        if (pairs_path != nullptr) pairs = vascl::load_pairs_file(pairs_path);
        vascl::EvalOptions options;
        const nlohmann::json record = vascl::run_eval(
            ckpt->params, dataset->data, task_list, options, seed, pairs.empty() ? nullptr : &pairs);
        *out_json = dup_string(record.dump(2));
    });
}

vascl_status vascl_analyze(const vascl_checkpoint* a, const vascl_checkpoint* b,
                           const vascl_dataset* dataset, uint64_t seed, char** out_json,
                           char** out_csv) {
    if (a == nullptr || b == nullptr || dataset == nullptr) {
        return set_error(VASCL_ERR_CONFIG, "vascl_analyze: null argument");
    }
    return guarded([&] {
        vascl::EvalOptions options;
        const nlohmann::json report = vascl::run_analyze(a->params, b->params, dataset->data,
                                                         options, seed);
        if (out_json != nullptr) *out_json = dup_string(report.dump(2));
        if (out_csv != nullptr) *out_csv = dup_string(vascl::render_analyze_csv(report));
    });
}

void vascl_string_free(char* s) { delete[] s; }

}  // extern "C"
