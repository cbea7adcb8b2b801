#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "data.hpp"
#include "model.hpp"

namespace vascl {

struct TrainResult {
    std::string best_checkpoint;
    std::string final_checkpoint;
    std::string metrics_path;
    double best_metric = 0.0;
    std::size_t steps = 0;
};

// Full training run: builds the data source, trains per the schedule with
// periodic held-out evaluation, writes metrics.jsonl plus best/final
// checkpoints and a copy of the resolved config into out_dir.
TrainResult run_training(const ExperimentConfig& config, const std::string& out_dir);

// Frozen-snapshot evaluation. tasks is a subset of
// {spearman, clustering, probe, purity, triples}; pairs may be null when the
// spearman task is not requested. Dropout is off; e-vectors are evaluated.
nlohmann::json run_eval(const ModelParams& params, const Dataset& dataset,
                        const std::vector<std::string>& tasks, const EvalOptions& options,
                        std::uint64_t seed, const std::vector<ScoredPair>* pairs = nullptr);

// Side-by-side representation-space comparison of two checkpoints.
nlohmann::json run_analyze(const ModelParams& a, const ModelParams& b, const Dataset& dataset,
                           const EvalOptions& options, std::uint64_t seed);
std::string render_analyze_csv(const nlohmann::json& report);

// Sidecar pairs file for spearman on ingested data: one "a b gold" per line.
std::vector<ScoredPair> load_pairs_file(const std::string& path);

}  // namespace vascl
