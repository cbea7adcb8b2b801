#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "vascl/data.hpp"
#include "vascl/evaluation.hpp"

using namespace vascl;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("vascl_data_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& contents) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fwrite(contents.data(), 1, contents.size(), f);
    std::fclose(f);
}

}  // namespace

TEST_CASE("generate_mixture: C=1 with tiny std collapses to the mean") {
    MixtureSpec spec;
    spec.dim = 3;
    spec.n = 50;
    spec.components.push_back({{1.0, 2.0, 3.0}, 1e-12, 1.0});
    const Dataset d = generate_mixture(spec, 7);
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(d.x(i, j) == doctest::Approx(spec.components[0].mean[j]).epsilon(1e-6));
    CHECK(d.labels == std::vector<int>(50, 0));
}

TEST_CASE("generate_mixture: same seed gives identical datasets") {
    const MixtureSpec spec = make_blob_spec(3, 8, 200, 5.0, 1.0);
    const Dataset a = generate_mixture(spec, 42);
    const Dataset b = generate_mixture(spec, 42);
    CHECK(a.x.values() == b.x.values());
    CHECK(a.labels == b.labels);
    const Dataset c = generate_mixture(spec, 43);
    CHECK(a.x.values() != c.x.values());
}

TEST_CASE("generate_mixture: separable blobs are recovered by kmeans") {
    const MixtureSpec spec = make_blob_spec(4, 10, 400, 10.0, 0.5);
    const Dataset d = generate_mixture(spec, 5);
    const KMeansResult res = kmeans(d.x, 4, 11, 100, 3);
    CHECK(hungarian_accuracy(res.assignments, d.labels) >= 0.99);
}

TEST_CASE("generate_mixture: label proportions track the weights") {
    MixtureSpec spec;
    spec.dim = 2;
    spec.n = 10000;
    spec.components.push_back({{0.0, 0.0}, 1.0, 0.2});
    spec.components.push_back({{5.0, 0.0}, 1.0, 0.8});
    const Dataset d = generate_mixture(spec, 9);
    const double frac =
        static_cast<double>(std::count(d.labels.begin(), d.labels.end(), 0)) / 10000.0;
    // 3-sigma binomial bound around 0.2: sigma = sqrt(0.2*0.8/10000) = 0.004
    CHECK(std::abs(frac - 0.2) <= 3.0 * 0.004);
}

TEST_CASE("generate_mixture: invalid specs rejected") {
    MixtureSpec spec;
    spec.dim = 2;
    spec.n = 10;
    spec.components.push_back({{0.0, 0.0}, 1.0, 0.5});  // weights sum to 0.5
    CHECK_THROWS_AS(generate_mixture(spec, 1), ConfigError);
    spec.components.push_back({{1.0, 1.0}, -1.0, 0.5});  // bad std
    CHECK_THROWS_AS(generate_mixture(spec, 1), ConfigError);
}

TEST_CASE("graded pairs: extremes hit exactly 5.0 and 0.0") {
    const MixtureSpec spec = make_blob_spec(3, 4, 300, 8.0, 0.5);
    const Dataset d = generate_mixture(spec, 13);
    const std::vector<ScoredPair> pairs = generate_graded_pairs(d, spec, 500, 17);
    REQUIRE(!pairs.empty());
    double lo = 5.0, hi = 0.0;
    for (const ScoredPair& p : pairs) {
        CHECK(p.gold >= 0.0);
        CHECK(p.gold <= 5.0);
        CHECK(p.a < d.size());
        CHECK(p.b < d.size());
        lo = std::min(lo, p.gold);
        hi = std::max(hi, p.gold);
        if (d.labels[p.a] == d.labels[p.b]) {
            CHECK(p.gold >= 2.5);  // same component scores high
        }
    }
    // with one-hot blob means every distinct-component distance is maximal,
    // so cross-component pairs score exactly 0 and same-component pairs
    // (identical generating distribution) score exactly 5
    CHECK(lo == doctest::Approx(0.0));
    CHECK(hi == doctest::Approx(5.0));
}

TEST_CASE("graded pairs: gold correlates with input-space cosine on clean mixtures") {
    // means fan out at distinct angles so inter-component distance (and
    // hence gold) varies smoothly with input-space cosine
    MixtureSpec spec;
    spec.dim = 2;
    spec.n = 600;
    const double angles[4] = {0.0, 0.5, 1.0, 1.5};
    for (double a : angles)
        spec.components.push_back({{10.0 * std::cos(a), 10.0 * std::sin(a)}, 0.2, 0.25});
    const Dataset d = generate_mixture(spec, 19);
    const std::vector<ScoredPair> pairs = generate_graded_pairs(d, spec, 800, 23);
    std::vector<double> gold, cos;
    for (const ScoredPair& p : pairs) {
        gold.push_back(p.gold);
        cos.push_back(cosine_sim(d.x.row(p.a), d.x.row(p.b)));
    }
    CHECK(spearman(cos, gold) >= 0.9);
}

TEST_CASE("graded pairs: deterministic given seed") {
    const MixtureSpec spec = make_blob_spec(2, 3, 100, 6.0, 0.5);
    const Dataset d = generate_mixture(spec, 29);
    const auto a = generate_graded_pairs(d, spec, 50, 31);
    const auto b = generate_graded_pairs(d, spec, 50, 31);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].a == b[i].a);
        CHECK(a[i].b == b[i].b);
        CHECK(a[i].gold == b[i].gold);
    }
}

TEST_CASE("embeddings: text round-trip preserves values and labels") {
    TempDir tmp;
    const MixtureSpec spec = make_blob_spec(2, 5, 40, 4.0, 1.0);
    const Dataset d = generate_mixture(spec, 37);
    save_embeddings_text(d, tmp.file("e.txt"));
    const Dataset back = load_embeddings(tmp.file("e.txt"));
    REQUIRE(back.size() == d.size());
    REQUIRE(back.dim() == d.dim());
    CHECK(back.labels == d.labels);
    for (std::size_t i = 0; i < d.x.size(); ++i)
        CHECK(back.x.values()[i] == doctest::Approx(d.x.values()[i]).epsilon(1e-12));
}

TEST_CASE("embeddings: binary round-trip is exact at float32 precision") {
    TempDir tmp;
    const MixtureSpec spec = make_blob_spec(3, 7, 60, 4.0, 1.0);
    Dataset d = generate_mixture(spec, 41);
    // quantize to float32 so the round-trip is bitwise
    for (double& v : d.x.values()) v = static_cast<float>(v);
    save_embeddings_binary(d, tmp.file("e.bin"));
    const Dataset back = load_embeddings(tmp.file("e.bin"));
    REQUIRE(back.size() == d.size());
    REQUIRE(back.dim() == d.dim());
    CHECK(back.labels == d.labels);
    CHECK(back.x.values() == d.x.values());
}

TEST_CASE("embeddings: unlabeled binary round-trip") {
    TempDir tmp;
    Dataset d;
    d.x = Matrix(3, 2, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
    d.ids = {0, 1, 2};
    save_embeddings_binary(d, tmp.file("u.bin"));
    const Dataset back = load_embeddings(tmp.file("u.bin"));
    CHECK_FALSE(back.has_labels());
    CHECK(back.x.values() == d.x.values());
}

TEST_CASE("embeddings: text dimension mismatch names the record") {
    TempDir tmp;
    write_text(tmp.file("bad.txt"), "0 1 0.5 0.25 0.125\n1 0 0.5 0.25 0.125 0.0625\n");
    try {
        load_embeddings(tmp.file("bad.txt"));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("record 1") != std::string::npos);
    }
}

TEST_CASE("embeddings: empty file and non-finite values rejected") {
    TempDir tmp;
    write_text(tmp.file("empty.txt"), "");
    CHECK_THROWS_AS(load_embeddings(tmp.file("empty.txt")), DataError);
    write_text(tmp.file("nan.txt"), "0 1 0.5 nan\n");
    CHECK_THROWS_AS(load_embeddings(tmp.file("nan.txt")), DataError);
    CHECK_THROWS_AS(load_embeddings(tmp.file("missing.txt")), DataError);
}

TEST_CASE("embeddings: duplicate ids rejected") {
    TempDir tmp;
    write_text(tmp.file("dup.txt"), "3 0.5 0.25\n3 0.1 0.2\n");
    CHECK_THROWS_AS(load_embeddings(tmp.file("dup.txt")), DataError);
}

TEST_CASE("batches: sizes, partition, and determinism") {
    const auto b1 = batches(10, 3, 55, true);
    REQUIRE(b1.size() == 3);
    for (const auto& b : b1) CHECK(b.size() == 3);

    const auto b2 = batches(10, 3, 55, false);
    std::set<std::size_t> seen;
    for (const auto& b : b2)
        for (std::size_t i : b) seen.insert(i);
    CHECK(seen.size() == 10);
    CHECK(*seen.rbegin() == 9);

    const auto b3 = batches(10, 3, 55, true);
    CHECK(b1 == b3);
    const auto b4 = batches(10, 3, 56, true);
    CHECK(b1 != b4);
}

TEST_CASE("batches: batch size larger than N rejected") {
    CHECK_THROWS_AS(batches(5, 10, 1, true), DataError);
}
