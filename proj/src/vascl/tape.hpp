#pragma once

#include <cstddef>
#include <vector>

#include "matrix.hpp"

namespace vascl {

// Handle into a Tape. Only valid for the tape that produced it.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over the small primitive set the objective needs.
// Values are computed eagerly on record; backward() runs the recorded list
// in reverse, so traversal is reverse-topological by construction. Leaves
// may be marked differentiable whether or not they are parameters (the
// perturbation delta is an input, not a weight).
class Tape {
public:
    Var leaf(Matrix value, bool requires_grad);

    // y = x * W + b, with b a 1 x out row broadcast over rows of x.
    Var affine(Var x, Var w, Var b);
    Var relu(Var x);
    Var tanh(Var x);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var x, double s);
    Var hadamard(Var a, Var b);
    // Elementwise multiply by a constant (dropout keep-mask).
    Var mask(Var x, Matrix m);
    // L2-normalize each row; throws NumericError on a near-zero row.
    Var row_normalize(Var x, double eps = 1e-12);
    Var concat_rows(Var a, Var b);
    // out(i, j) = dot(a_row_i, b_row_{index[i][j]}). The workhorse for
    // per-instance candidate similarity tables; index must be rectangular.
    Var gather_dot(Var a, Var b, std::vector<std::vector<std::size_t>> index);
    // Row-wise log-sum-exp with max subtraction; m x n -> m x 1.
    Var logsumexp_rows(Var x);
    Var column(Var x, std::size_t j);
    Var sum_all(Var x);
    Var mean_all(Var x);
    Var dot_all(Var a, Var b);  // flat dot product -> 1 x 1

    const Matrix& value(Var v) const;
    const Matrix& adjoint(Var v) const;

    // Seeds the output adjoint and accumulates adjoints for every node with
    // requires_grad reachability. Throws if the seed shape mismatches.
    void backward(Var output, const Matrix& seed);
    void backward(Var output);  // scalar output, seed 1.0

    std::size_t num_nodes() const { return nodes_.size(); }

private:
    enum class Op {
        Leaf,
        Affine,
        Relu,
        Tanh,
        Add,
        Sub,
        Scale,
        Mask,
        Hadamard,
        RowNormalize,
        ConcatRows,
        GatherDot,
        LogSumExpRows,
        Column,
        SumAll,
        MeanAll,
        DotAll,
    };

    struct Node {
        Op op;
        int in0 = -1, in1 = -1, in2 = -1;
        Matrix value;
        Matrix adjoint;
        bool requires_grad = false;
        double scalar = 0.0;                         // Scale factor / Column index
        Matrix aux;                                  // mask constant / saved softmax
        std::vector<std::vector<std::size_t>> index; // GatherDot
    };

    Var push(Node node);
    const Node& node(Var v) const;
    void backprop_node(Node& n);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace vascl
