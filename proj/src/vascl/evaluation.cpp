#include "evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "adam.hpp"
#include "errors.hpp"
#include "tape.hpp"

namespace vascl {

namespace {

std::vector<double> fractional_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw NumericError("spearman: constant input, correlation undefined");
    }
    return sab / std::sqrt(saa * sbb);
}

double squared_distance(const Matrix& x, std::size_t i, const Matrix& c, std::size_t j) {
    double s = 0.0;
    for (std::size_t d = 0; d < x.cols(); ++d) {
        const double diff = x(i, d) - c(j, d);
        s += diff * diff;
    }
    return s;
}

KMeansResult kmeans_single(const Matrix& x, std::size_t c, Rng& rng, std::size_t max_iters) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();

    // k-means++ seeding
    Matrix centroids(c, d);
    std::vector<double> min_dist(n, std::numeric_limits<double>::max());
    std::size_t first = rng.index(n);
    for (std::size_t j = 0; j < d; ++j) centroids(0, j) = x(first, j);
    for (std::size_t k = 1; k < c; ++k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            min_dist[i] = std::min(min_dist[i], squared_distance(x, i, centroids, k - 1));
            total += min_dist[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                r -= min_dist[i];
                if (r <= 0.0) {
                    pick = i;
                    break;
                }
                pick = i;
            }
        } else {
            pick = rng.index(n);
        }
        for (std::size_t j = 0; j < d; ++j) centroids(k, j) = x(pick, j);
    }

    KMeansResult result;
    result.assignments.assign(n, 0);
    std::vector<std::size_t> counts(c);
    double prev_inertia = std::numeric_limits<double>::max();
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        // assign
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            int best_k = 0;
            for (std::size_t k = 0; k < c; ++k) {
                const double dist = squared_distance(x, i, centroids, k);
                if (dist < best) {
                    best = dist;
                    best_k = static_cast<int>(k);
                }
            }
            result.assignments[i] = best_k;
            inertia += best;
        }
        result.inertia = inertia;
        result.iterations = iter + 1;
        // update
        Matrix next(c, d);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(result.assignments[i]);
            ++counts[k];
            for (std::size_t j = 0; j < d; ++j) next(k, j) += x(i, j);
        }
        for (std::size_t k = 0; k < c; ++k) {
            if (counts[k] == 0) {
                // re-seed an emptied cluster at the farthest point
                std::size_t far = 0;
                double far_dist = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const auto ki = static_cast<std::size_t>(result.assignments[i]);
                    const double dist = squared_distance(x, i, centroids, ki);
                    if (dist > far_dist) {
                        far_dist = dist;
                        far = i;
                    }
                }
                for (std::size_t j = 0; j < d; ++j) next(k, j) = x(far, j);
            } else {
                for (std::size_t j = 0; j < d; ++j) next(k, j) /= static_cast<double>(counts[k]);
            }
        }
        centroids = std::move(next);
        if (std::abs(prev_inertia - inertia) <= 1e-12 * std::max(1.0, inertia)) break;
        prev_inertia = inertia;
    }
    result.centroids = std::move(centroids);
    return result;
}

}  // namespace

double spearman(const std::vector<double>& pred, const std::vector<double>& gold) {
    if (pred.size() != gold.size()) throw NumericError("spearman: length mismatch");
    if (pred.size() < 3) throw NumericError("spearman: need at least 3 pairs");
    for (double v : pred)
        if (!std::isfinite(v)) throw NumericError("spearman: non-finite prediction");
    for (double v : gold)
        if (!std::isfinite(v)) throw NumericError("spearman: non-finite gold score");
    return pearson(fractional_ranks(pred), fractional_ranks(gold));
}

KMeansResult kmeans(const Matrix& x, std::size_t c, std::uint64_t seed, std::size_t max_iters,
                    std::size_t restarts) {
    if (c < 1) throw ConfigError("kmeans: need C >= 1");
    if (x.rows() < c) throw NumericError("kmeans: need N >= C");
    if (restarts < 1) restarts = 1;
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::max();
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng rng = Rng::substream(seed, r);
        KMeansResult run = kmeans_single(x, c, rng, max_iters);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    return best;
}

double hungarian_match_value(const std::vector<std::vector<double>>& counts) {
    std::size_t rows = counts.size();
    std::size_t cols = 0;
    for (const auto& r : counts) cols = std::max(cols, r.size());
    const std::size_t n = std::max(rows, cols);
    if (n == 0) return 0.0;
    // minimize negated counts on a zero-padded square matrix
    std::vector<std::vector<double>> cost(n + 1, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < counts[i].size(); ++j) cost[i + 1][j + 1] = -counts[i][j];

    // Hungarian algorithm with potentials, O(n^3)
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::max());
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double best_delta = std::numeric_limits<double>::max();
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0][j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < best_delta) {
                    best_delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += best_delta;
                    v[j] -= best_delta;
                } else {
                    minv[j] -= best_delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (std::size_t j = 1; j <= n; ++j) total += -cost[match[j]][j];
    return total;
}

double hungarian_accuracy(const std::vector<int>& pred_labels, const std::vector<int>& true_labels) {
    if (pred_labels.size() != true_labels.size()) {
        throw NumericError("hungarian_accuracy: length mismatch");
    }
    if (pred_labels.empty()) throw NumericError("hungarian_accuracy: empty input");
    int max_pred = 0, max_true = 0;
    for (int v : pred_labels) {
        if (v < 0) throw NumericError("hungarian_accuracy: negative label");
        max_pred = std::max(max_pred, v);
    }
    for (int v : true_labels) {
        if (v < 0) throw NumericError("hungarian_accuracy: negative label");
        max_true = std::max(max_true, v);
    }
    std::vector<std::vector<double>> counts(static_cast<std::size_t>(max_pred) + 1,
                                            std::vector<double>(static_cast<std::size_t>(max_true) + 1, 0.0));
    for (std::size_t i = 0; i < pred_labels.size(); ++i) {
        counts[static_cast<std::size_t>(pred_labels[i])][static_cast<std::size_t>(true_labels[i])] +=
            1.0;
    }
    return hungarian_match_value(counts) / static_cast<double>(pred_labels.size());
}

namespace {

int num_classes(const std::vector<int>& labels) {
    int c = 0;
    for (int v : labels) c = std::max(c, v + 1);
    return c;
}

Matrix one_hot(const std::vector<int>& labels, std::size_t c) {
    Matrix out(labels.size(), c);
    for (std::size_t i = 0; i < labels.size(); ++i) out(i, static_cast<std::size_t>(labels[i])) = 1.0;
    return out;
}

double accuracy_of(const Matrix& w, const Matrix& b, const LabeledEmbeddings& data) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.x.rows(); ++i) {
        double best = -std::numeric_limits<double>::max();
        int best_c = 0;
        for (std::size_t c = 0; c < w.cols(); ++c) {
            double logit = b(0, c);
            for (std::size_t j = 0; j < data.x.cols(); ++j) logit += data.x(i, j) * w(j, c);
            if (logit > best) {
                best = logit;
                best_c = static_cast<int>(c);
            }
        }
        if (best_c == data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.x.rows());
}

}  // namespace

double linear_probe(const LabeledEmbeddings& train, const LabeledEmbeddings& val,
                    const LabeledEmbeddings& test, const ProbeConfig& config) {
    if (train.x.cols() != val.x.cols() || train.x.cols() != test.x.cols()) {
        throw DataError("linear_probe: dimension mismatch across splits");
    }
    const int c_train = num_classes(train.labels);
    for (int v : test.labels) {
        if (v >= c_train) {
            throw DataError("linear_probe: class " + std::to_string(v) + " absent from train split");
        }
    }
    const auto c = static_cast<std::size_t>(c_train);
    const std::size_t d = train.x.cols();
    const std::size_t n = train.x.rows();

    Matrix w(d, c);
    Matrix b(1, c);
    AdamState adam;
    adam.register_param(w, config.learning_rate);
    adam.register_param(b, config.learning_rate);
    std::vector<Matrix*> params = {&w, &b};

    Rng rng = Rng::substream(config.seed, 0x11ea);
    double best_val = -1.0;
    double best_test = 0.0;
    for (std::size_t iter = 1; iter <= config.iterations; ++iter) {
        const std::size_t bs = std::min(config.batch_size, n);
        Matrix xb(bs, d);
        std::vector<int> yb(bs);
        for (std::size_t i = 0; i < bs; ++i) {
            const std::size_t pick = rng.index(n);
            for (std::size_t j = 0; j < d; ++j) xb(i, j) = train.x(pick, j);
            yb[i] = train.labels[pick];
        }
        Tape tape;
        Var wv = tape.leaf(w, true);
        Var bv = tape.leaf(b, true);
        Var logits = tape.affine(tape.leaf(xb, false), wv, bv);
        Var lse = tape.mean_all(tape.logsumexp_rows(logits));
        Var picked = tape.scale(tape.sum_all(tape.mask(logits, one_hot(yb, c))),
                                1.0 / static_cast<double>(bs));
        Var loss = tape.sub(lse, picked);
        tape.backward(loss);
        std::vector<Matrix> grads = {tape.adjoint(wv), tape.adjoint(bv)};
        adam.step(params, grads);

        if (iter % config.eval_every == 0 || iter == config.iterations) {
            const double val_acc = accuracy_of(w, b, val);
            if (val_acc > best_val) {
                best_val = val_acc;
                best_test = accuracy_of(w, b, test);
            }
        }
    }
    return best_test;
}

std::vector<PurityPoint> neighborhood_purity(const Matrix& x, const std::vector<int>& labels,
                                             const std::vector<std::size_t>& k_list,
                                             DistanceKind distance) {
    const std::size_t n = x.rows();
    if (labels.size() != n) throw NumericError("neighborhood_purity: label count mismatch");
    std::size_t max_k = 0;
    for (std::size_t k : k_list) {
        if (k >= n) throw NumericError("neighborhood_purity: K must be < N");
        max_k = std::max(max_k, k);
    }
    // pairwise distances once, then per-K prefixes of the sorted neighbor lists
    Matrix dist(n, n);
    if (distance == DistanceKind::Cosine) {
        Matrix xn = x;
        for (std::size_t i = 0; i < n; ++i) {
            const double nrm = row_norm(x, i);
            if (nrm <= 1e-12) throw NumericError("neighborhood_purity: degenerate row");
            for (std::size_t j = 0; j < x.cols(); ++j) xn(i, j) /= nrm;
        }
        const Matrix sims = matmul_nt(xn, xn);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) dist(i, j) = 1.0 - sims(i, j);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) dist(i, j) = std::sqrt(squared_distance(x, i, x, j));
    }
    std::vector<std::vector<std::size_t>> sorted(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& order = sorted[i];
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(max_k),
                          order.end(), [&](std::size_t a, std::size_t b) {
                              if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
                              return a < b;
                          });
        order.resize(max_k);
    }
    std::vector<PurityPoint> out;
    for (std::size_t k : k_list) {
        PurityPoint point;
        point.k = k;
        double hits = 0.0, dsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                const std::size_t nb = sorted[i][j];
                if (labels[nb] == labels[i]) hits += 1.0;
                dsum += dist(i, nb);
            }
        }
        const double total = static_cast<double>(n) * static_cast<double>(k);
        point.true_positive_rate = hits / total;
        point.mean_distance = dsum / total;
        out.push_back(point);
    }
    return out;
}

namespace {

DistanceStats stats_of(std::vector<double> values) {
    DistanceStats s;
    const double n = static_cast<double>(values.size());
    for (double v : values) s.mean += v;
    s.mean /= n;
    for (double v : values) s.stddev += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(s.stddev / n);
    std::sort(values.begin(), values.end());
    for (std::size_t q = 0; q <= 10; ++q) {
        const double pos = static_cast<double>(q) / 10.0 * (n - 1.0);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        s.deciles[q] = values[lo] * (1.0 - frac) + values[hi] * frac;
    }
    return s;
}

double pair_distance(const Matrix& a, std::size_t i, const Matrix& b, DistanceKind kind) {
    if (kind == DistanceKind::Cosine) {
        return 1.0 - cosine_sim(a.row(i), b.row(i));
    }
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double diff = a(i, j) - b(i, j);
        s += diff * diff;
    }
    return std::sqrt(s);
}

}  // namespace

TripleAnalysis triple_distance_analysis(const Matrix& anchors, const Matrix& positives,
                                        const Matrix& negatives, DistanceKind distance) {
    if (!anchors.same_shape(positives) || !anchors.same_shape(negatives)) {
        throw NumericError("triple_distance_analysis: shape mismatch");
    }
    if (anchors.rows() == 0) throw NumericError("triple_distance_analysis: empty input");
    const std::size_t n = anchors.rows();
    std::vector<double> pos_dist(n), neg_dist(n);
    std::size_t wins = 0, ties = 0;
    for (std::size_t i = 0; i < n; ++i) {
        pos_dist[i] = pair_distance(anchors, i, positives, distance);
        neg_dist[i] = pair_distance(anchors, i, negatives, distance);
        if (pos_dist[i] < neg_dist[i]) ++wins;
        else if (pos_dist[i] == neg_dist[i]) ++ties;
    }
    TripleAnalysis out;
    out.positive = stats_of(pos_dist);
    out.negative = stats_of(neg_dist);
    out.win_rate = static_cast<double>(wins) / static_cast<double>(n);
    out.tie_rate = static_cast<double>(ties) / static_cast<double>(n);
    return out;
}

}  // namespace vascl
