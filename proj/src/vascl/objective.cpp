#include "objective.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "errors.hpp"

namespace vascl {

void LossConfig::validate() const {
    if (tau <= 0.0) throw ConfigError("loss: tau must be > 0");
    if (k < 1) throw ConfigError("loss: k must be >= 1");
    if (delta <= 0.0) throw ConfigError("loss: delta must be > 0");
    if (inner_steps < 1) throw ConfigError("loss: inner_steps must be >= 1");
    if (init_std <= 0.0) throw ConfigError("loss: init_std must be > 0");
}

namespace {

Matrix normalized_rows(const Matrix& m, double eps = 1e-12) {
    Matrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double nrm = row_norm(m, i);
        if (nrm <= eps) {
            throw NumericError("degenerate (near-zero) row " + std::to_string(i));
        }
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) /= nrm;
    }
    return out;
}

void project_rows_to_ball(Matrix& m, double radius) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double nrm = row_norm(m, i);
        if (nrm > radius) {
            const double s = radius / nrm;
            for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) *= s;
        }
    }
}

}  // namespace

NeighborhoodIndex build_neighborhood(const Matrix& e, std::size_t k) {
    const std::size_t m = e.rows();
    if (m < 2) throw NumericError("build_neighborhood: need at least 2 instances");
    if (k < 1) throw ConfigError("build_neighborhood: k must be >= 1");
    if (k > m - 1) {
        std::fprintf(stderr, "warning: K=%zu exceeds M-1=%zu, clamping\n", k, m - 1);
        k = m - 1;
    }
    const Matrix en = normalized_rows(e);
    const Matrix sims = matmul_nt(en, en);

    NeighborhoodIndex index;
    index.neighbors.resize(m);
    index.similarities.resize(m);
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) {
        order.clear();
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) order.push_back(j);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (sims(i, a) != sims(i, b)) return sims(i, a) > sims(i, b);
            return a < b;
        });
        order.resize(k);
        index.neighbors[i] = order;
        index.similarities[i].reserve(k);
        for (std::size_t j : order) index.similarities[i].push_back(sims(i, j));
    }
    return index;
}

Var instance_disc_loss_var(Tape& tape, Var z1, Var z2, double tau) {
    if (tau <= 0.0) throw ConfigError("instance_disc_loss: tau must be > 0");
    const std::size_t m = tape.value(z1).rows();
    if (m < 2) throw NumericError("instance_disc_loss: batch must have M >= 2");
    if (!tape.value(z1).same_shape(tape.value(z2))) {
        throw NumericError("instance_disc_loss: view shape mismatch");
    }
    Var un = tape.row_normalize(tape.concat_rows(z1, z2));
    // row i anchors z_i with positive z_i'; row M+i anchors z_i' with
    // positive z_i; negatives are everything else in both views.
    std::vector<std::vector<std::size_t>> index(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        auto fill = [&](std::vector<std::size_t>& row, std::size_t positive) {
            row.push_back(positive);
            for (std::size_t j = 0; j < 2 * m; ++j)
                if (j != i && j != m + i) row.push_back(j);
        };
        fill(index[i], m + i);
        fill(index[m + i], i);
    }
    Var t = tape.scale(tape.gather_dot(un, un, std::move(index)), 1.0 / tau);
    return tape.mean_all(tape.sub(tape.logsumexp_rows(t), tape.column(t, 0)));
}

Var neighborhood_loss_var(Tape& tape, Var z_delta, Var z_anchor, Var z_neighbors, double tau) {
    if (tau <= 0.0) throw ConfigError("neighborhood_loss: tau must be > 0");
    const std::size_t k = tape.value(z_neighbors).rows();
    if (k == 0) throw NumericError("neighborhood_loss: empty neighbor set");
    Var a = tape.row_normalize(z_delta);
    Var b = tape.row_normalize(tape.concat_rows(z_anchor, z_neighbors));
    std::vector<std::size_t> cols(k + 1);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    Var t = tape.scale(tape.gather_dot(a, b, {cols}), 1.0 / tau);
    return tape.mean_all(tape.sub(tape.logsumexp_rows(t), tape.column(t, 0)));
}

Var augmented_neighborhood_loss_var(Tape& tape, Var z, Var z_star,
                                    const NeighborhoodIndex& neighborhood, double tau) {
    if (tau <= 0.0) throw ConfigError("augmented_neighborhood_loss: tau must be > 0");
    const std::size_t m = tape.value(z).rows();
    if (!tape.value(z).same_shape(tape.value(z_star))) {
        throw NumericError("augmented_neighborhood_loss: Z/Z* misaligned");
    }
    if (neighborhood.batch_size() != m) {
        throw NumericError("augmented_neighborhood_loss: neighborhood batch mismatch");
    }
    Var un = tape.row_normalize(tape.concat_rows(z, z_star));
    // row i: anchor z_i, positive z_i*; row M+i: anchor z_i*, positive z_i;
    // negatives for both are the 2K vectors {z_k, z_k*} over N(i).
    std::vector<std::vector<std::size_t>> index(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        auto fill = [&](std::vector<std::size_t>& row, std::size_t positive) {
            row.push_back(positive);
            for (std::size_t nb : neighborhood.neighbors[i]) {
                row.push_back(nb);
                row.push_back(m + nb);
            }
        };
        fill(index[i], m + i);
        fill(index[m + i], i);
    }
    Var t = tape.scale(tape.gather_dot(un, un, std::move(index)), 1.0 / tau);
    return tape.mean_all(tape.sub(tape.logsumexp_rows(t), tape.column(t, 0)));
}

double instance_disc_loss(const Matrix& z1, const Matrix& z2, double tau) {
    Tape tape;
    return tape.value(instance_disc_loss_var(tape, tape.leaf(z1, false), tape.leaf(z2, false), tau))(0, 0);
}

double neighborhood_loss(const Matrix& z_delta, const Matrix& z_anchor, const Matrix& z_neighbors,
                         double tau) {
    Tape tape;
    return tape.value(neighborhood_loss_var(tape, tape.leaf(z_delta, false),
                                            tape.leaf(z_anchor, false),
                                            tape.leaf(z_neighbors, false), tau))(0, 0);
}

double augmented_neighborhood_loss(std::size_t i, const Matrix& z, const Matrix& z_star,
                                   const NeighborhoodIndex& neighborhood, double tau) {
    if (i >= z.rows()) throw NumericError("augmented_neighborhood_loss: index out of range");
    if (!z.same_shape(z_star)) throw NumericError("augmented_neighborhood_loss: Z/Z* misaligned");
    const auto& nbrs = neighborhood.neighbors.at(i);
    Matrix negatives(2 * nbrs.size(), z.cols());
    for (std::size_t n = 0; n < nbrs.size(); ++n) {
        for (std::size_t c = 0; c < z.cols(); ++c) {
            negatives(2 * n, c) = z(nbrs[n], c);
            negatives(2 * n + 1, c) = z_star(nbrs[n], c);
        }
    }
    return neighborhood_loss(z.row(i), z_star.row(i), negatives, tau) +
           neighborhood_loss(z_star.row(i), z.row(i), negatives, tau);
}

namespace {

// One forward/backward of the batched inner loss; returns per-instance
// losses and, when grad_out is non-null, the gradient wrt delta.
std::vector<double> inner_loss_pass(const Matrix& e, const Matrix& delta,
                                    const Matrix& candidates_normalized,
                                    const std::vector<std::vector<std::size_t>>& index,
                                    const ModelParams& params, double tau, Matrix* grad_out) {
    Tape tape;
    ModelGraph graph(tape, params, false);
    Var dvar = tape.leaf(delta, grad_out != nullptr);
    Var e_star = tape.add(tape.leaf(e, false), dvar);
    Var zsn = tape.row_normalize(graph.project(e_star));
    Var t = tape.scale(tape.gather_dot(zsn, tape.leaf(candidates_normalized, false), index),
                       1.0 / tau);
    Var rows = tape.sub(tape.logsumexp_rows(t), tape.column(t, 0));
    if (grad_out != nullptr) {
        tape.backward(tape.sum_all(rows));
        *grad_out = tape.adjoint(dvar);
    }
    return tape.value(rows).values();
}

}  // namespace

PerturbationResult virtual_augment(const Matrix& e, const NeighborhoodIndex& neighborhood,
                                   const ModelParams& params, const LossConfig& config, Rng& rng) {
    config.validate();
    const std::size_t m = e.rows();
    if (neighborhood.batch_size() != m) {
        throw NumericError("virtual_augment: neighborhood batch mismatch");
    }
    // the inner loop treats the anchor and neighbor projections as constants
    const Matrix candidates = normalized_rows(project_eval(params, e));
    std::vector<std::vector<std::size_t>> index(m);
    for (std::size_t i = 0; i < m; ++i) {
        index[i].push_back(i);
        for (std::size_t nb : neighborhood.neighbors[i]) index[i].push_back(nb);
    }

    PerturbationResult result;
    result.delta = sample_gaussian(m, e.cols(), config.init_std, rng);
    project_rows_to_ball(result.delta, config.delta);

    const double step_size =
        config.inner_steps == 1 ? config.delta : config.delta / static_cast<double>(config.inner_steps);
    for (std::size_t step = 0; step < config.inner_steps; ++step) {
        Matrix grad;
        const std::vector<double> losses =
            inner_loss_pass(e, result.delta, candidates, index, params, config.tau, &grad);
        if (step == 0) result.inner_loss_init = losses;
        for (std::size_t i = 0; i < m; ++i) {
            const double gn = row_norm(grad, i);
            if (gn <= 1e-30) {
                result.zero_gradient = true;
                continue;
            }
            for (std::size_t j = 0; j < e.cols(); ++j) {
                result.delta(i, j) += step_size * grad(i, j) / gn;  // ascent
            }
        }
        project_rows_to_ball(result.delta, config.delta);
    }
    result.inner_loss_final =
        inner_loss_pass(e, result.delta, candidates, index, params, config.tau, nullptr);
    result.e_star = add(e, result.delta);
    return result;
}

VasclLossResult vascl_loss(ModelParams& params, const Matrix& inputs, const LossConfig& config,
                           Rng& rng_view1, Rng& rng_view2, Rng& rng_perturb, bool augmented) {
    config.validate();
    Tape tape;
    ModelGraph graph(tape, params, true);
    TwoViewForward views = forward_twice(tape, graph, params, inputs, rng_view1, rng_view2);

    Var inst = instance_disc_loss_var(tape, views.z1, views.z2, config.tau);
    Var total = inst;
    VasclLossResult result;
    if (augmented) {
        const Matrix& e = tape.value(views.e1);
        const NeighborhoodIndex nbr = build_neighborhood(e, config.k);
        const PerturbationResult pert = virtual_augment(e, nbr, params, config, rng_perturb);
        Var dvar = tape.leaf(pert.delta, !config.stop_gradient_through_delta);
        Var z_star = graph.project(tape.add(views.e1, dvar));
        Var aug = augmented_neighborhood_loss_var(tape, views.z1, z_star, nbr, config.tau);
        result.augmented_part = tape.value(aug)(0, 0);
        total = tape.add(inst, aug);
    }
    result.instance_part = tape.value(inst)(0, 0);
    result.total = tape.value(total)(0, 0);
    tape.backward(total);
    for (Var p : graph.param_vars()) result.param_grads.push_back(tape.adjoint(p));
    return result;
}

}  // namespace vascl
