#include <cstdio>
#include <filesystem>
#include <utility>

#include <doctest.h>

#include "vascl/adam.hpp"
#include "vascl/model.hpp"
#include "vascl/objective.hpp"

using namespace vascl;

namespace {

ModelParams small_model(std::uint64_t seed = 1, double dropout = 0.1) {
    Rng rng(seed);
    return ModelParams::init(4, {4, 4}, Activation::Tanh, dropout, 4, 3, rng);
}

}  // namespace

TEST_CASE("identity encoder with dropout off reproduces inputs") {
    Rng rng(2);
    ModelParams p = ModelParams::init(3, {}, Activation::Identity, 0.0, 3, 2, rng);
    const Matrix x = sample_gaussian(5, 3, 1.0, rng);
    const Matrix e = encode_eval(p, x);
    CHECK(e.values() == x.values());
}

TEST_CASE("eval-mode encode is deterministic") {
    Rng rng(3);
    ModelParams p = small_model();
    const Matrix x = sample_gaussian(6, 4, 1.0, rng);
    CHECK(encode_eval(p, x).values() == encode_eval(p, x).values());
}

TEST_CASE("different dropout streams give different encodings") {
    ModelParams p = small_model(5, 0.4);
    Rng data_rng(6);
    const Matrix x = sample_gaussian(8, 4, 2.0, data_rng);
    Tape tape;
    ModelGraph graph(tape, p, false);
    Rng r1 = Rng::substream(7, 1), r2 = Rng::substream(7, 2);
    const auto views = forward_twice(tape, graph, p, x, r1, r2);
    CHECK_FALSE(views.degenerate);
    CHECK(tape.value(views.e1).values() != tape.value(views.e2).values());
    CHECK(tape.value(views.z1).rows() == 8);
    CHECK(tape.value(views.z1).cols() == 3);
}

TEST_CASE("forward_twice with dropout 0 is degenerate: Z == Z'") {
    ModelParams p = small_model(5, 0.0);
    Rng data_rng(6);
    const Matrix x = sample_gaussian(4, 4, 1.0, data_rng);
    Tape tape;
    ModelGraph graph(tape, p, false);
    Rng r1(1), r2(2);
    const auto views = forward_twice(tape, graph, p, x, r1, r2);
    CHECK(views.degenerate);
    CHECK(tape.value(views.z1).values() == tape.value(views.z2).values());
}

TEST_CASE("forward_twice is reproducible given the same seed pair") {
    ModelParams p = small_model(5, 0.2);
    Rng data_rng(6);
    const Matrix x = sample_gaussian(4, 4, 1.0, data_rng);
    auto run = [&] {
        Tape tape;
        ModelGraph graph(tape, p, false);
        Rng r1 = Rng::substream(9, 1), r2 = Rng::substream(9, 2);
        const auto views = forward_twice(tape, graph, p, x, r1, r2);
        return std::pair{tape.value(views.z1).values(), tape.value(views.z2).values()};
    };
    CHECK(run() == run());
}

TEST_CASE("zero-weight head projects everything to zero") {
    ModelParams p = small_model();
    p.head.w1 = Matrix(4, 4);
    p.head.b1 = Matrix(1, 4);
    p.head.w2 = Matrix(4, 3);
    p.head.b2 = Matrix(1, 3);
    Rng rng(1);
    const Matrix z = project_eval(p, sample_gaussian(5, 4, 1.0, rng));
    for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("identity-like square head passes positive values through") {
    Rng rng(4);
    ModelParams p = ModelParams::init(2, {}, Activation::Identity, 0.0, 2, 2, rng);
    p.head.w1 = Matrix::identity(2);
    p.head.b1 = Matrix(1, 2);
    p.head.w2 = Matrix::identity(2);
    p.head.b2 = Matrix(1, 2);
    const Matrix e(2, 2, {1.0, 2.0, 0.5, 3.0});  // all positive: ReLU transparent
    CHECK(project_eval(p, e).values() == e.values());
}

TEST_CASE("default head shape is (d x d, d x 128)") {
    Rng rng(8);
    ModelParams p = ModelParams::init(20, {20}, Activation::Tanh, 0.1, 20, 128, rng);
    CHECK(p.head.w1.rows() == 20);
    CHECK(p.head.w1.cols() == 20);
    CHECK(p.head.w2.rows() == 20);
    CHECK(p.head.w2.cols() == 128);
    const Matrix z = project_eval(p, encode_eval(p, sample_gaussian(4, 20, 1.0, rng)));
    CHECK(z.rows() == 4);
    CHECK(z.cols() == 128);
    CHECK(z.all_finite());
}

TEST_CASE("dropout positives: same-instance views are closer than cross pairs after training") {
    // small end-to-end sanity run on separable data: after a few steps the
    // mean cosine between a pair of views of the same instance exceeds the
    // mean cosine across instances
    Rng rng(21);
    ModelParams p = ModelParams::init(6, {6}, Activation::Tanh, 0.2, 6, 4, rng);
    Matrix x = sample_gaussian(12, 6, 3.0, rng);
    LossConfig cfg;
    cfg.tau = 0.1;
    cfg.k = 2;
    AdamState adam;
    for (const Matrix* m : param_list(std::as_const(p))) adam.register_param(*m, 1e-2);
    for (int step = 0; step < 30; ++step) {
        Rng r1 = Rng::substream(100, 2 * step), r2 = Rng::substream(100, 2 * step + 1);
        Rng rp = Rng::substream(200, step);
        auto result = vascl_loss(p, x, cfg, r1, r2, rp, false);
        std::vector<Matrix*> params = param_list(p);
        adam.step(params, result.param_grads);
    }
    Tape tape;
    ModelGraph graph(tape, p, false);
    Rng r1 = Rng::substream(300, 1), r2 = Rng::substream(300, 2);
    const auto views = forward_twice(tape, graph, p, x, r1, r2);
    const Matrix& z1 = tape.value(views.z1);
    const Matrix& z2 = tape.value(views.z2);
    double same = 0.0, cross = 0.0;
    std::size_t cross_n = 0;
    for (std::size_t i = 0; i < z1.rows(); ++i) {
        same += cosine_sim(z1.row(i), z2.row(i));
        for (std::size_t j = 0; j < z1.rows(); ++j) {
            if (j == i) continue;
            cross += cosine_sim(z1.row(i), z2.row(j));
            ++cross_n;
        }
    }
    same /= static_cast<double>(z1.rows());
    cross /= static_cast<double>(cross_n);
    CHECK(same > cross);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    ModelParams p = small_model(31, 0.25);
    const std::string path = (std::filesystem::temp_directory_path() / "vascl_test.ckpt").string();
    save_checkpoint(p, path);
    const ModelParams q = load_checkpoint(path);
    CHECK(q.input_dim == p.input_dim);
    CHECK(q.embed_dim == p.embed_dim);
    CHECK(q.encoder.size() == p.encoder.size());
    for (std::size_t l = 0; l < p.encoder.size(); ++l) {
        CHECK(q.encoder[l].w.values() == p.encoder[l].w.values());
        CHECK(q.encoder[l].dropout == p.encoder[l].dropout);
        CHECK(q.encoder[l].act == p.encoder[l].act);
    }
    CHECK(q.head.w1.values() == p.head.w1.values());
    CHECK(q.head.w2.values() == p.head.w2.values());
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects garbage") {
    const std::string path = (std::filesystem::temp_directory_path() / "vascl_bad.ckpt").string();
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("not a checkpoint", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
    std::filesystem::remove(path);
}
