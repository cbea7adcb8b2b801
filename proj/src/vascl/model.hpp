#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"
#include "tape.hpp"

namespace vascl {

enum class Activation : std::uint8_t { Identity = 0, Relu = 1, Tanh = 2 };

Activation activation_from_string(const std::string& name);
std::string activation_to_string(Activation a);

struct AffineLayer {
    Matrix w;  // in x out
    Matrix b;  // 1 x out
    Activation act = Activation::Tanh;
    double dropout = 0.0;  // applied to the layer input
};

// Contrastive head: exactly two affine layers with ReLU between, shaped
// (d x d_hidden) then (d_hidden x out). The two-layer shape is structural;
// configs requesting another depth are rejected upstream.
struct HeadParams {
    Matrix w1, b1;
    Matrix w2, b2;
};

struct ModelParams {
    std::vector<AffineLayer> encoder;  // empty = identity encoder
    HeadParams head;
    std::size_t input_dim = 0;
    std::size_t embed_dim = 0;   // d, encoder output
    std::size_t head_out = 128;  // p

    static ModelParams init(std::size_t input_dim, const std::vector<std::size_t>& encoder_dims,
                            Activation act, double dropout, std::size_t head_hidden,
                            std::size_t head_out, Rng& rng);
};

// Canonical parameter order: per encoder layer (w, b), then head w1, b1, w2, b2.
std::vector<Matrix*> param_list(ModelParams& params);
std::vector<const Matrix*> param_list(const ModelParams& params);

// Binds a parameter set onto a tape as leaves, then builds forward graphs on
// it. One graph instance per tape.
class ModelGraph {
public:
    ModelGraph(Tape& tape, const ModelParams& params, bool trainable);

    // masks: one keep-mask per encoder layer (layer-input shape), or empty
    // for eval mode.
    Var encode(const Matrix& inputs, const std::vector<Matrix>& masks);
    Var encode_var(Var inputs, const std::vector<Matrix>& masks);
    Var project(Var e);

    const std::vector<Var>& param_vars() const { return param_vars_; }

private:
    Tape& tape_;
    const ModelParams& params_;
    std::vector<Var> param_vars_;
};

struct TwoViewForward {
    Var e1, e2;  // encoder outputs, M x d
    Var z1, z2;  // head outputs, M x p
    bool degenerate = false;  // dropout rate 0: the two views coincide
};

// Dropout masks for one encoder pass, one per layer, from a dedicated
// substream so the two views of forward_twice are independent.
std::vector<Matrix> make_dropout_masks(const ModelParams& params, std::size_t batch, Rng& rng);

// Encodes the same inputs twice with independent dropout masks and projects
// both views (the positive-pair construction).
TwoViewForward forward_twice(Tape& tape, ModelGraph& graph, const ModelParams& params,
                             const Matrix& inputs, Rng& rng_view1, Rng& rng_view2);

// Eval-mode forward: no tape, no dropout, pure function of (params, inputs).
Matrix encode_eval(const ModelParams& params, const Matrix& inputs);
Matrix project_eval(const ModelParams& params, const Matrix& e);

// Checkpoint container: magic "VSCL", version, layer descriptors, then
// row-major little-endian float64 payloads in canonical parameter order.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace vascl
