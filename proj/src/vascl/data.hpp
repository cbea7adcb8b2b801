#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace vascl {

struct ScoredPair {
    std::size_t a = 0;
    std::size_t b = 0;
    double gold = 0.0;  // in [0, 5]
};

struct Dataset {
    Matrix x;  // N x d_in
    std::vector<int> labels;  // empty when unlabeled
    std::vector<std::size_t> ids;
    std::vector<ScoredPair> pairs;  // optional STS-style annotations

    bool has_labels() const { return !labels.empty(); }
    std::size_t size() const { return x.rows(); }
    std::size_t dim() const { return x.cols(); }
};

struct MixtureComponent {
    std::vector<double> mean;
    double std_dev = 1.0;
    double weight = 1.0;
};

struct MixtureSpec {
    std::vector<MixtureComponent> components;
    std::size_t dim = 0;
    std::size_t n = 0;

    void validate() const;  // weights sum to 1 (within 1e-9), std > 0, dims consistent
};

// Equidistant-mean helper: C components at scale * one-hot directions.
MixtureSpec make_blob_spec(std::size_t c, std::size_t dim, std::size_t n, double scale,
                           double std_dev);

Dataset generate_mixture(const MixtureSpec& spec, std::uint64_t seed);

// Gold score 5 * exp(-component_distance / bandwidth), bandwidth = median
// inter-component mean distance; same-component pairs of identical points
// score 5, maximally distant components approach 0.
std::vector<ScoredPair> generate_graded_pairs(const Dataset& dataset, const MixtureSpec& spec,
                                              std::size_t num_pairs, std::uint64_t seed);

// Text format: one record per line: id [label] v1 ... vd. Binary format:
// magic "VEMB", version u16, N u64, d u32, flags u8 (bit0 labels), then
// little-endian float32 row-major, then i32 labels if flagged.
Dataset load_embeddings(const std::string& path);
void save_embeddings_text(const Dataset& dataset, const std::string& path);
void save_embeddings_binary(const Dataset& dataset, const std::string& path);

// Shuffled minibatch index sequence for one epoch; deterministic given seed.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed, bool drop_last = true);

}  // namespace vascl
