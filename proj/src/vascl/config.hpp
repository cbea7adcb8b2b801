#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "evaluation.hpp"
#include "objective.hpp"

namespace vascl {

// Appendix-style virtual augmentation strength presets.
inline constexpr std::array<double, 2> kDeltaPresets{15.0, 30.0};

struct DataConfig {
    enum class Kind { Mixture, File };
    Kind kind = Kind::Mixture;
    // mixture
    std::size_t components = 4;
    std::size_t dim = 20;
    std::size_t n = 2000;
    double scale = 10.0;
    double std_dev = 1.0;
    // file
    std::string path;
};

struct ModelConfig {
    std::vector<std::size_t> encoder_layers = {20, 20};  // empty = identity encoder
    std::string activation = "tanh";
    double dropout = 0.1;
    std::size_t head_layers = 2;   // must be 2
    std::size_t head_hidden = 0;   // 0 = use embed dim d
    std::size_t head_out = 128;
};

struct OptimConfig {
    double lr_head = 5e-4;
    double lr_encoder = 5e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct ScheduleConfig {
    std::size_t epochs = 5;
    std::size_t batch_size = 128;
    std::size_t eval_every = 500;
    std::size_t max_steps = 0;  // 0 = no cap
};

struct EvalOptions {
    double holdout_fraction = 0.2;
    std::string validation_metric = "purity10";  // or "spearman"
    std::size_t kmeans_runs = 10;
    std::size_t probe_splits = 5;
    std::size_t probe_shots = 16;
    std::string distance = "cosine";  // or "euclidean"
    std::vector<std::size_t> purity_k = {1, 5, 10, 20};
    std::size_t num_pairs = 1000;  // synthetic graded pairs for spearman
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    bool seed_explicit = false;
    std::string mode = "vascl";  // or "dropout-only-baseline"
    DataConfig data;
    ModelConfig model;
    LossConfig loss;
    OptimConfig optim;
    ScheduleConfig schedule;
    EvalOptions eval;

    // Strict parse: unknown keys anywhere are ConfigErrors.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);
    nlohmann::json to_json() const;  // canonical (sorted keys) serialization
    std::string hash() const;       // FNV-1a 64 over the canonical serialization
    void validate() const;
};

DistanceKind distance_from_string(const std::string& name);

}  // namespace vascl
