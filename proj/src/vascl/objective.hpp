#pragma once

#include <cstddef>
#include <vector>

#include "matrix.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "tape.hpp"

namespace vascl {

struct LossConfig {
    double tau = 0.05;          // softmax temperature
    std::size_t k = 16;         // neighborhood size (clamped to M-1 per batch)
    double delta = 15.0;        // L2 radius of the perturbation ball
    std::size_t inner_steps = 1;
    double init_std = 1.0;      // Gaussian init scale for the perturbation
    bool stop_gradient_through_delta = true;

    void validate() const;
};

// Ordered top-K cosine neighborhoods over encoder outputs. For each i,
// neighbors[i] holds K in-batch indices (never i itself) sorted by
// descending similarity, ties broken toward the lower index.
struct NeighborhoodIndex {
    std::vector<std::vector<std::size_t>> neighbors;
    std::vector<std::vector<double>> similarities;

    std::size_t batch_size() const { return neighbors.size(); }
    std::size_t k() const { return neighbors.empty() ? 0 : neighbors[0].size(); }
};

// Exact top-K by cosine similarity on e-vectors. K > M-1 is clamped with a
// warning on stderr.
NeighborhoodIndex build_neighborhood(const Matrix& e, std::size_t k);

struct PerturbationResult {
    Matrix delta;    // M x d, every row inside the radius ball
    Matrix e_star;   // E + delta
    std::vector<double> inner_loss_init;
    std::vector<double> inner_loss_final;
    bool zero_gradient = false;  // some instance had an identically-zero inner gradient
};

// Inner maximization of the neighborhood loss: Gaussian init projected onto
// the ball, then normalized-gradient ascent steps through the head with the
// anchor and neighbor projections held constant, each step followed by
// projection. All instances are solved in one batched tape.
PerturbationResult virtual_augment(const Matrix& e, const NeighborhoodIndex& neighborhood,
                                   const ModelParams& params, const LossConfig& config, Rng& rng);

// --- tape builders (differentiable) ---

// In-batch instance discrimination: mean over the 2M directed terms; for
// each anchor the positive is its other view and the negatives are the
// 2M-2 remaining view embeddings.
Var instance_disc_loss_var(Tape& tape, Var z1, Var z2, double tau);

// Single-instance directed term: positive (z_delta, z_anchor), negatives
// z_neighbors (K x p).
Var neighborhood_loss_var(Tape& tape, Var z_delta, Var z_anchor, Var z_neighbors, double tau);

// Mean over the 2M directed augmented-neighborhood terms; per instance the
// positive pair is (z_i, z_i*) and the negatives are {z_k, z_k*} over N(i).
Var augmented_neighborhood_loss_var(Tape& tape, Var z, Var z_star,
                                    const NeighborhoodIndex& neighborhood, double tau);

// --- value-only conveniences ---

double instance_disc_loss(const Matrix& z1, const Matrix& z2, double tau);
double neighborhood_loss(const Matrix& z_delta, const Matrix& z_anchor,
                         const Matrix& z_neighbors, double tau);
// Sum of the two directed terms for instance i.
double augmented_neighborhood_loss(std::size_t i, const Matrix& z, const Matrix& z_star,
                                   const NeighborhoodIndex& neighborhood, double tau);

struct VasclLossResult {
    double total = 0.0;
    double instance_part = 0.0;   // mean of the 2M instance-discrimination terms
    double augmented_part = 0.0;  // mean of the 2M augmented-neighborhood terms
    std::vector<Matrix> param_grads;  // canonical parameter order
};

// Full combined objective on one batch: builds the training tape
// (forward twice, perturb, both loss parts) and returns value + parameter
// gradients. Baseline mode (augmented=false) keeps only the Eq.-1-style part.
VasclLossResult vascl_loss(ModelParams& params, const Matrix& inputs, const LossConfig& config,
                           Rng& rng_view1, Rng& rng_view2, Rng& rng_perturb, bool augmented);

}  // namespace vascl
