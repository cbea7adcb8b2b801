#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace vascl {

struct LabeledEmbeddings {
    Matrix x;                 // N x d
    std::vector<int> labels;  // values in [0, C)
};

enum class DistanceKind { Cosine, Euclidean };

// Spearman rank correlation with average (fractional) ranks for ties.
// Throws NumericError when either input is constant (rho undefined).
double spearman(const std::vector<double>& pred, const std::vector<double>& gold);

struct KMeansResult {
    std::vector<int> assignments;
    Matrix centroids;  // C x d
    double inertia = 0.0;
    std::size_t iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding; best of `restarts` runs by
// inertia. An emptied cluster is re-seeded at the point farthest from its
// centroid. Deterministic given the seed.
KMeansResult kmeans(const Matrix& x, std::size_t c, std::uint64_t seed, std::size_t max_iters = 100,
                    std::size_t restarts = 1);

// Clustering accuracy under the best one-to-one cluster-to-class matching
// (Hungarian algorithm on the contingency table, zero-padded to square).
double hungarian_accuracy(const std::vector<int>& pred_labels, const std::vector<int>& true_labels);

// Maximum-total-weight one-to-one assignment value for a nonneg count table.
double hungarian_match_value(const std::vector<std::vector<double>>& counts);

struct ProbeConfig {
    std::size_t iterations = 1000;
    std::size_t eval_every = 100;
    double learning_rate = 1e-4;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

// Trains one affine layer with softmax cross-entropy on frozen embeddings;
// returns test accuracy at the best-validation checkpoint.
double linear_probe(const LabeledEmbeddings& train, const LabeledEmbeddings& val,
                    const LabeledEmbeddings& test, const ProbeConfig& config);

struct PurityPoint {
    std::size_t k = 0;
    double true_positive_rate = 0.0;  // neighbors sharing the instance's class
    double mean_distance = 0.0;       // cosine distance 1 - sim (or euclidean)
};

std::vector<PurityPoint> neighborhood_purity(const Matrix& x, const std::vector<int>& labels,
                                             const std::vector<std::size_t>& k_list,
                                             DistanceKind distance = DistanceKind::Cosine);

struct DistanceStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::array<double, 11> deciles{};  // 0%, 10%, ..., 100%
};

struct TripleAnalysis {
    DistanceStats positive;  // dist(anchor, positive)
    DistanceStats negative;  // dist(anchor, negative)
    double win_rate = 0.0;   // fraction with dist(a,p) < dist(a,n)
    double tie_rate = 0.0;
};

// Rows of the three matrices are aligned (anchor_i, positive_i, negative_i).
TripleAnalysis triple_distance_analysis(const Matrix& anchors, const Matrix& positives,
                                        const Matrix& negatives,
                                        DistanceKind distance = DistanceKind::Cosine);

}  // namespace vascl
