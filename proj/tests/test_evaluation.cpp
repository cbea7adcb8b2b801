#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "vascl/evaluation.hpp"
#include "vascl/rng.hpp"

using namespace vascl;

namespace {

// definition oracle: rho = pearson correlation of fractional ranks
std::vector<double> fractional_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const std::vector<double> ra = fractional_ranks(a);
    const std::vector<double> rb = fractional_ranks(b);
    const std::size_t n = ra.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return num / std::sqrt(da * db);
}

// all C! cluster->class bijections for small C
double brute_force_accuracy(const std::vector<int>& pred, const std::vector<int>& truth, int c) {
    std::vector<int> perm(c);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    do {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (perm[pred[i]] == truth[i]) ++correct;
        best = std::max(best, correct);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(pred.size());
}

Matrix blobs(std::size_t per_class, std::size_t c, std::size_t d, double spread, double noise,
             Rng& rng, std::vector<int>* labels) {
    Matrix x(per_class * c, d);
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t r = k * per_class + i;
            for (std::size_t j = 0; j < d; ++j)
                x(r, j) = (j == k % d ? spread : 0.0) + noise * rng.gaussian();
            if (labels) labels->push_back(static_cast<int>(k));
        }
    return x;
}

}  // namespace

TEST_CASE("spearman: perfect and inverted orderings") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spearman({1, 2, 3, 4}, {40, 30, 20, 10}) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("spearman: tie case (1,2,2,4) vs (1,3,2,4) by hand") {
    // average ranks: x -> (1, 2.5, 2.5, 4), y -> (1, 3, 2, 4); pearson of the
    // rank vectors is 4.5 / sqrt(4.5 * 5)
    const double expected = 4.5 / std::sqrt(22.5);
    CHECK(std::abs(spearman({1, 2, 2, 4}, {1, 3, 2, 4}) - expected) <= 1e-9);
}

TEST_CASE("spearman: matches the fractional-rank oracle on random data with ties") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.index(40);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng.index(8));  // small support forces ties
            b[i] = static_cast<double>(rng.index(8));
        }
        bool const_a = std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; });
        bool const_b = std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; });
        if (const_a || const_b) continue;
        CHECK(std::abs(spearman(a, b) - spearman_oracle(a, b)) <= 1e-9);
    }
}

TEST_CASE("spearman is invariant under strictly monotone transforms") {
    Rng rng(12);
    std::vector<double> a(20), b(20), a_exp(20), b_cub(20);
    for (std::size_t i = 0; i < 20; ++i) {
        a[i] = rng.gaussian();
        b[i] = rng.gaussian();
        a_exp[i] = std::exp(a[i]);
        b_cub[i] = b[i] * b[i] * b[i];
    }
    const double base = spearman(a, b);
    CHECK(spearman(a_exp, b) == doctest::Approx(base).epsilon(1e-12));
    CHECK(spearman(a, b_cub) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("spearman: rejects constant input and mismatched sizes") {
    CHECK_THROWS_AS(spearman({1, 1, 1}, {1, 2, 3}), NumericError);
    CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), NumericError);
}

TEST_CASE("kmeans recovers well-separated blobs") {
    Rng rng(21);
    std::vector<int> labels;
    const Matrix x = blobs(30, 3, 5, 10.0, 0.2, rng, &labels);
    const KMeansResult res = kmeans(x, 3, 7, 100, 3);
    CHECK(hungarian_accuracy(res.assignments, labels) == doctest::Approx(1.0));
}

TEST_CASE("kmeans is deterministic given the seed") {
    Rng rng(22);
    const Matrix x = sample_gaussian(60, 4, 1.0, rng);
    const KMeansResult a = kmeans(x, 4, 99, 100, 2);
    const KMeansResult b = kmeans(x, 4, 99, 100, 2);
    CHECK(a.assignments == b.assignments);
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("kmeans with one cluster puts the centroid at the mean") {
    Rng rng(23);
    const Matrix x = sample_gaussian(40, 3, 1.0, rng);
    const KMeansResult res = kmeans(x, 1, 5);
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 40; ++i) mean += x(i, j);
        mean /= 40.0;
        CHECK(res.centroids(0, j) == doctest::Approx(mean).epsilon(1e-9));
    }
}

TEST_CASE("hungarian_accuracy: the 3x3 hand case equals 2/3") {
    // contingency [[2,1,0],[0,2,1],[1,0,2]]: best matching is the diagonal
    std::vector<int> pred, truth;
    const int table[3][3] = {{2, 1, 0}, {0, 2, 1}, {1, 0, 2}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int n = 0; n < table[i][j]; ++n) {
                pred.push_back(i);
                truth.push_back(j);
            }
    CHECK(std::abs(hungarian_accuracy(pred, truth) - 2.0 / 3.0) <= 1e-9);
}

TEST_CASE("hungarian_accuracy matches permutation brute force") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const int c = 2 + static_cast<int>(rng.index(6));  // up to 7 clusters
        const std::size_t n = 10 + rng.index(40);
        std::vector<int> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = static_cast<int>(rng.index(static_cast<std::size_t>(c)));
            truth[i] = static_cast<int>(rng.index(static_cast<std::size_t>(c)));
        }
        CHECK(std::abs(hungarian_accuracy(pred, truth) - brute_force_accuracy(pred, truth, c)) <=
              1e-12);
    }
}

TEST_CASE("hungarian_accuracy is invariant to relabeling predictions") {
    Rng rng(32);
    const std::size_t n = 50;
    std::vector<int> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        pred[i] = static_cast<int>(rng.index(4));
        truth[i] = static_cast<int>(rng.index(4));
    }
    std::vector<int> relabeled(n);
    const int map[4] = {2, 0, 3, 1};
    for (std::size_t i = 0; i < n; ++i) relabeled[i] = map[pred[i]];
    CHECK(hungarian_accuracy(pred, truth) == doctest::Approx(hungarian_accuracy(relabeled, truth)));
}

TEST_CASE("hungarian_match_value: rectangular padding and identity table") {
    CHECK(hungarian_match_value({{5.0}}) == doctest::Approx(5.0));
    CHECK(hungarian_match_value({{2, 1, 0}, {0, 2, 1}, {1, 0, 2}}) == doctest::Approx(6.0));
    // more clusters than classes: zero-padded to square
    CHECK(hungarian_match_value({{3, 0}, {0, 4}, {2, 2}}) == doctest::Approx(7.0));
}

TEST_CASE("linear probe reaches 1.0 on linearly separable data and chance on noise") {
    Rng rng(41);
    auto split = [&](double spread) {
        std::vector<int> labels;
        const Matrix x = blobs(40, 3, 6, spread, 0.3, rng, &labels);
        return LabeledEmbeddings{x, labels};
    };
    const LabeledEmbeddings train = split(8.0), val = split(8.0), test = split(8.0);
    ProbeConfig cfg;
    cfg.seed = 3;
    CHECK(linear_probe(train, val, test, cfg) == doctest::Approx(1.0));

    // pure noise with labels independent of the features: near chance (1/3)
    auto noise_split = [&](std::uint64_t seed) {
        Rng r(seed);
        LabeledEmbeddings le;
        le.x = sample_gaussian(120, 6, 1.0, r);
        for (std::size_t i = 0; i < 120; ++i) le.labels.push_back(static_cast<int>(r.index(3)));
        return le;
    };
    ProbeConfig noise_cfg;
    noise_cfg.seed = 4;
    const double acc = linear_probe(noise_split(1), noise_split(2), noise_split(3), noise_cfg);
    CHECK(acc >= 0.15);
    CHECK(acc <= 0.55);
}

TEST_CASE("neighborhood purity: separated blobs are pure, shuffled labels are not") {
    Rng rng(51);
    std::vector<int> labels;
    const Matrix x = blobs(25, 4, 6, 10.0, 0.2, rng, &labels);
    const auto pts = neighborhood_purity(x, labels, {1, 5, 10});
    REQUIRE(pts.size() == 3);
    for (const PurityPoint& p : pts) CHECK(p.true_positive_rate == doctest::Approx(1.0));
    CHECK(pts[0].k == 1);
    CHECK(pts[2].k == 10);

    // random labels: purity near 1/C
    std::vector<int> shuffled = labels;
    Rng perm_rng(52);
    const std::vector<std::size_t> perm = perm_rng.permutation(shuffled.size());
    for (std::size_t i = 0; i < labels.size(); ++i) shuffled[i] = labels[perm[i]];
    const auto noisy = neighborhood_purity(x, shuffled, {10});
    CHECK(noisy[0].true_positive_rate <= 0.45);
}

TEST_CASE("neighborhood purity: mean distance grows with K") {
    Rng rng(53);
    std::vector<int> labels;
    const Matrix x = blobs(30, 2, 5, 6.0, 0.5, rng, &labels);
    const auto pts = neighborhood_purity(x, labels, {1, 5, 20});
    CHECK(pts[0].mean_distance <= pts[1].mean_distance);
    CHECK(pts[1].mean_distance <= pts[2].mean_distance);
}

TEST_CASE("triple analysis: identical positive and far negative wins everywhere") {
    Rng rng(61);
    const Matrix anchors = sample_gaussian(50, 4, 1.0, rng);
    Matrix negatives(50, 4);
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t j = 0; j < 4; ++j) negatives(i, j) = -anchors(i, j);
    const TripleAnalysis res = triple_distance_analysis(anchors, anchors, negatives);
    CHECK(res.win_rate == doctest::Approx(1.0));
    CHECK(res.tie_rate == doctest::Approx(0.0));
    CHECK(res.positive.mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(res.positive.deciles[10] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(res.negative.mean == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("triple analysis: exchangeable positive and negative gives win rate near 0.5") {
    Rng rng(62);
    const std::size_t n = 4000;
    const Matrix anchors = sample_gaussian(n, 5, 1.0, rng);
    const Matrix pos = sample_gaussian(n, 5, 1.0, rng);
    const Matrix neg = sample_gaussian(n, 5, 1.0, rng);
    const TripleAnalysis res = triple_distance_analysis(anchors, pos, neg);
    CHECK(res.win_rate >= 0.45);
    CHECK(res.win_rate <= 0.55);
    // swapping positive and negative flips the win rate (up to ties)
    const TripleAnalysis swapped = triple_distance_analysis(anchors, neg, pos);
    CHECK(res.win_rate + swapped.win_rate + res.tie_rate == doctest::Approx(1.0));
}

TEST_CASE("triple analysis: deciles are sorted and bracket the mean") {
    Rng rng(63);
    const Matrix a = sample_gaussian(200, 4, 1.0, rng);
    const Matrix p = sample_gaussian(200, 4, 1.0, rng);
    const Matrix n = sample_gaussian(200, 4, 1.0, rng);
    const TripleAnalysis res = triple_distance_analysis(a, p, n);
    for (std::size_t i = 0; i + 1 < res.positive.deciles.size(); ++i)
        CHECK(res.positive.deciles[i] <= res.positive.deciles[i + 1]);
    CHECK(res.positive.deciles[0] <= res.positive.mean);
    CHECK(res.positive.mean <= res.positive.deciles[10]);
}

TEST_CASE("euclidean distance kind changes the metric") {
    // two anchors: cosine ties (same direction) but euclidean separates
    const Matrix a(1, 2, {1.0, 0.0});
    const Matrix p(1, 2, {2.0, 0.0});
    const Matrix n(1, 2, {1.1, 0.0});
    const TripleAnalysis cos_res = triple_distance_analysis(a, p, n, DistanceKind::Cosine);
    CHECK(cos_res.tie_rate == doctest::Approx(1.0));
    const TripleAnalysis euc_res = triple_distance_analysis(a, p, n, DistanceKind::Euclidean);
    CHECK(euc_res.win_rate == doctest::Approx(0.0));
}
