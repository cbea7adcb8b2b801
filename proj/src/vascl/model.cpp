#include "model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "errors.hpp"

namespace vascl {

Activation activation_from_string(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation: " + name);
}

std::string activation_to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
    }
    return "identity";
}

ModelParams ModelParams::init(std::size_t input_dim, const std::vector<std::size_t>& encoder_dims,
                              Activation act, double dropout, std::size_t head_hidden,
                              std::size_t head_out, Rng& rng) {
    if (input_dim == 0) throw ConfigError("model: input_dim must be positive");
    ModelParams p;
    p.input_dim = input_dim;
    std::size_t d = input_dim;
    for (std::size_t out : encoder_dims) {
        if (out == 0) throw ConfigError("model: encoder layer dim must be positive");
        AffineLayer layer;
        layer.w = sample_gaussian(d, out, 1.0 / std::sqrt(static_cast<double>(d)), rng);
        layer.b = Matrix(1, out);
        layer.act = act;
        layer.dropout = dropout;
        p.encoder.push_back(std::move(layer));
        d = out;
    }
    p.embed_dim = d;
    p.head_out = head_out;
    if (head_hidden == 0 || head_out == 0) throw ConfigError("model: head dims must be positive");
    p.head.w1 = sample_gaussian(d, head_hidden, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    p.head.b1 = Matrix(1, head_hidden);
    p.head.w2 = sample_gaussian(head_hidden, head_out, 1.0 / std::sqrt(static_cast<double>(head_hidden)), rng);
    p.head.b2 = Matrix(1, head_out);
    return p;
}

std::vector<Matrix*> param_list(ModelParams& params) {
    std::vector<Matrix*> list;
    for (AffineLayer& l : params.encoder) {
        list.push_back(&l.w);
        list.push_back(&l.b);
    }
    list.push_back(&params.head.w1);
    list.push_back(&params.head.b1);
    list.push_back(&params.head.w2);
    list.push_back(&params.head.b2);
    return list;
}

std::vector<const Matrix*> param_list(const ModelParams& params) {
    std::vector<const Matrix*> list;
    for (const AffineLayer& l : params.encoder) {
        list.push_back(&l.w);
        list.push_back(&l.b);
    }
    list.push_back(&params.head.w1);
    list.push_back(&params.head.b1);
    list.push_back(&params.head.w2);
    list.push_back(&params.head.b2);
    return list;
}

ModelGraph::ModelGraph(Tape& tape, const ModelParams& params, bool trainable)
    : tape_(tape), params_(params) {
    for (const Matrix* p : param_list(params)) {
        param_vars_.push_back(tape_.leaf(*p, trainable));
    }
}

Var ModelGraph::encode_var(Var x, const std::vector<Matrix>& masks) {
    if (!masks.empty() && masks.size() != params_.encoder.size()) {
        throw NumericError("encode: mask count does not match encoder depth");
    }
    for (std::size_t l = 0; l < params_.encoder.size(); ++l) {
        if (!masks.empty()) x = tape_.mask(x, masks[l]);
        x = tape_.affine(x, param_vars_[2 * l], param_vars_[2 * l + 1]);
        switch (params_.encoder[l].act) {
            case Activation::Identity: break;
            case Activation::Relu: x = tape_.relu(x); break;
            case Activation::Tanh: x = tape_.tanh(x); break;
        }
    }
    return x;
}

Var ModelGraph::encode(const Matrix& inputs, const std::vector<Matrix>& masks) {
    if (inputs.cols() != params_.input_dim) {
        throw NumericError("encode: input dim mismatch");
    }
    return encode_var(tape_.leaf(inputs, false), masks);
}

Var ModelGraph::project(Var e) {
    const std::size_t base = 2 * params_.encoder.size();
    Var h = tape_.affine(e, param_vars_[base], param_vars_[base + 1]);
    h = tape_.relu(h);
    return tape_.affine(h, param_vars_[base + 2], param_vars_[base + 3]);
}

std::vector<Matrix> make_dropout_masks(const ModelParams& params, std::size_t batch, Rng& rng) {
    std::vector<Matrix> masks;
    std::size_t d = params.input_dim;
    for (const AffineLayer& l : params.encoder) {
        masks.push_back(dropout_mask(batch, d, l.dropout, rng));
        d = l.w.cols();
    }
    return masks;
}

TwoViewForward forward_twice(Tape& tape, ModelGraph& graph, const ModelParams& params,
                             const Matrix& inputs, Rng& rng_view1, Rng& rng_view2) {
    bool any_dropout = false;
    for (const AffineLayer& l : params.encoder) any_dropout = any_dropout || l.dropout > 0.0;
    TwoViewForward out;
    out.degenerate = !any_dropout;
    if (out.degenerate) {
        std::fprintf(stderr,
                     "warning: forward_twice with dropout 0 — the two views coincide and the "
                     "positive pair is degenerate\n");
    }
    const std::vector<Matrix> masks1 = make_dropout_masks(params, inputs.rows(), rng_view1);
    const std::vector<Matrix> masks2 = make_dropout_masks(params, inputs.rows(), rng_view2);
    Var x = tape.leaf(inputs, false);
    out.e1 = graph.encode_var(x, masks1);
    out.e2 = graph.encode_var(x, masks2);
    out.z1 = graph.project(out.e1);
    out.z2 = graph.project(out.e2);
    return out;
}

Matrix encode_eval(const ModelParams& params, const Matrix& inputs) {
    if (inputs.cols() != params.input_dim) throw NumericError("encode_eval: input dim mismatch");
    Matrix x = inputs;
    for (const AffineLayer& l : params.encoder) {
        Matrix y = matmul(x, l.w);
        for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += l.b(0, j);
        switch (l.act) {
            case Activation::Identity: break;
            case Activation::Relu:
                for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
                break;
            case Activation::Tanh:
                for (double& v : y.values()) v = std::tanh(v);
                break;
        }
        x = std::move(y);
    }
    return x;
}

Matrix project_eval(const ModelParams& params, const Matrix& e) {
    Matrix h = matmul(e, params.head.w1);
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) += params.head.b1(0, j);
    for (double& v : h.values()) v = v > 0.0 ? v : 0.0;
    Matrix z = matmul(h, params.head.w2);
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += params.head.b2(0, j);
    return z;
}

namespace {

constexpr char kMagic[4] = {'V', 'S', 'C', 'L'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("checkpoint: truncated file");
    return v;
}

void write_matrix(std::ofstream& out, const Matrix& m) {
    write_pod<std::uint64_t>(out, m.rows());
    write_pod<std::uint64_t>(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix read_matrix(std::ifstream& in) {
    const auto rows = read_pod<std::uint64_t>(in);
    const auto cols = read_pod<std::uint64_t>(in);
    if (rows > (1u << 24) || cols > (1u << 24)) throw DataError("checkpoint: implausible shape");
    std::vector<double> data(rows * cols);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw DataError("checkpoint: truncated matrix payload");
    return Matrix(rows, cols, std::move(data));
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot open for writing: " + path);
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.encoder.size()));
    write_pod<std::uint64_t>(out, params.input_dim);
    write_pod<std::uint64_t>(out, params.embed_dim);
    write_pod<std::uint64_t>(out, params.head_out);
    for (const AffineLayer& l : params.encoder) {
        write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(l.act));
        write_pod<double>(out, l.dropout);
    }
    for (const Matrix* m : param_list(params)) write_matrix(out, *m);
    if (!out) throw DataError("checkpoint: write failure: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("checkpoint: bad magic (not a VSCL file): " + path);
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion) {
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto layers = read_pod<std::uint32_t>(in);
    ModelParams p;
    p.input_dim = read_pod<std::uint64_t>(in);
    p.embed_dim = read_pod<std::uint64_t>(in);
    p.head_out = read_pod<std::uint64_t>(in);
    p.encoder.resize(layers);
    for (AffineLayer& l : p.encoder) {
        const auto act = read_pod<std::uint8_t>(in);
        if (act > 2) throw DataError("checkpoint: invalid activation code");
        l.act = static_cast<Activation>(act);
        l.dropout = read_pod<double>(in);
        if (!(l.dropout >= 0.0 && l.dropout < 1.0)) {
            throw DataError("checkpoint: dropout out of range");
        }
    }
    for (AffineLayer& l : p.encoder) {
        l.w = read_matrix(in);
        l.b = read_matrix(in);
    }
    p.head.w1 = read_matrix(in);
    p.head.b1 = read_matrix(in);
    p.head.w2 = read_matrix(in);
    p.head.b2 = read_matrix(in);
    // shape consistency
    std::size_t d = p.input_dim;
    for (const AffineLayer& l : p.encoder) {
        if (l.w.rows() != d || l.b.cols() != l.w.cols() || l.b.rows() != 1) {
            throw DataError("checkpoint: inconsistent encoder shapes");
        }
        d = l.w.cols();
    }
    if (d != p.embed_dim || p.head.w1.rows() != d || p.head.w2.rows() != p.head.w1.cols() ||
        p.head.w2.cols() != p.head_out) {
        throw DataError("checkpoint: inconsistent head shapes");
    }
    return p;
}

}  // namespace vascl
