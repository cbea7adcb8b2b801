#include "tape.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace vascl {

Var Tape::push(Node n) {
    if (!n.value.all_finite()) {
        throw NumericError("tape: non-finite value produced by op");
    }
    n.adjoint = Matrix(n.value.rows(), n.value.cols());
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
        throw NumericError("tape: invalid var handle");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
}

const Matrix& Tape::value(Var v) const { return node(v).value; }
const Matrix& Tape::adjoint(Var v) const { return node(v).adjoint; }

Var Tape::leaf(Matrix value, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

namespace {
bool either_grad(const bool a, const bool b) { return a || b; }
}  // namespace

Var Tape::affine(Var x, Var w, Var b) {
    const Node& nx = nodes_[x.id];
    const Node& nw = nodes_[w.id];
    const Node& nb = nodes_[b.id];
    if (nx.value.cols() != nw.value.rows() || nb.value.rows() != 1 ||
        nb.value.cols() != nw.value.cols()) {
        throw NumericError("affine: shape mismatch");
    }
    Matrix y = matmul(nx.value, nw.value);
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += nb.value(0, j);
    Node n;
    n.op = Op::Affine;
    n.in0 = x.id;
    n.in1 = w.id;
    n.in2 = b.id;
    n.requires_grad = nx.requires_grad || nw.requires_grad || nb.requires_grad;
    n.value = std::move(y);
    return push(std::move(n));
}

Var Tape::relu(Var x) {
    Node n;
    n.op = Op::Relu;
    n.in0 = x.id;
    n.requires_grad = nodes_[x.id].requires_grad;
    n.value = nodes_[x.id].value;
    for (double& v : n.value.values()) v = v > 0.0 ? v : 0.0;
    return push(std::move(n));
}

Var Tape::tanh(Var x) {
    Node n;
    n.op = Op::Tanh;
    n.in0 = x.id;
    n.requires_grad = nodes_[x.id].requires_grad;
    n.value = nodes_[x.id].value;
    for (double& v : n.value.values()) v = std::tanh(v);
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    Node n;
    n.op = Op::Add;
    n.in0 = a.id;
    n.in1 = b.id;
    n.requires_grad = either_grad(nodes_[a.id].requires_grad, nodes_[b.id].requires_grad);
    n.value = vascl::add(nodes_[a.id].value, nodes_[b.id].value);
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    Node n;
    n.op = Op::Sub;
    n.in0 = a.id;
    n.in1 = b.id;
    n.requires_grad = either_grad(nodes_[a.id].requires_grad, nodes_[b.id].requires_grad);
    n.value = vascl::sub(nodes_[a.id].value, nodes_[b.id].value);
    return push(std::move(n));
}

Var Tape::scale(Var x, double s) {
    Node n;
    n.op = Op::Scale;
    n.in0 = x.id;
    n.scalar = s;
    n.requires_grad = nodes_[x.id].requires_grad;
    n.value = vascl::scale(nodes_[x.id].value, s);
    return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
    Node n;
    n.op = Op::Hadamard;
    n.in0 = a.id;
    n.in1 = b.id;
    n.requires_grad = either_grad(nodes_[a.id].requires_grad, nodes_[b.id].requires_grad);
    n.value = vascl::hadamard(nodes_[a.id].value, nodes_[b.id].value);
    return push(std::move(n));
}

Var Tape::mask(Var x, Matrix m) {
    Node n;
    n.op = Op::Mask;
    n.in0 = x.id;
    n.requires_grad = nodes_[x.id].requires_grad;
    n.value = vascl::hadamard(nodes_[x.id].value, m);
    n.aux = std::move(m);
    return push(std::move(n));
}

Var Tape::row_normalize(Var x, double eps) {
    const Matrix& v = nodes_[x.id].value;
    Matrix y = v;
    Matrix norms(v.rows(), 1);
    for (std::size_t i = 0; i < v.rows(); ++i) {
        const double nrm = row_norm(v, i);
        if (nrm <= eps) {
            throw NumericError("row_normalize: degenerate row " + std::to_string(i));
        }
        norms(i, 0) = nrm;
        for (std::size_t j = 0; j < v.cols(); ++j) y(i, j) /= nrm;
    }
    Node n;
    n.op = Op::RowNormalize;
    n.in0 = x.id;
    n.requires_grad = nodes_[x.id].requires_grad;
    n.value = std::move(y);
    n.aux = std::move(norms);
    return push(std::move(n));
}

Var Tape::concat_rows(Var a, Var b) {
    const Matrix& va = nodes_[a.id].value;
    const Matrix& vb = nodes_[b.id].value;
    if (va.cols() != vb.cols()) throw NumericError("concat_rows: column mismatch");
    Matrix y(va.rows() + vb.rows(), va.cols());
    for (std::size_t i = 0; i < va.rows(); ++i)
        for (std::size_t j = 0; j < va.cols(); ++j) y(i, j) = va(i, j);
    for (std::size_t i = 0; i < vb.rows(); ++i)
        for (std::size_t j = 0; j < vb.cols(); ++j) y(va.rows() + i, j) = vb(i, j);
    Node n;
    n.op = Op::ConcatRows;
    n.in0 = a.id;
    n.in1 = b.id;
    n.requires_grad = either_grad(nodes_[a.id].requires_grad, nodes_[b.id].requires_grad);
    n.value = std::move(y);
    return push(std::move(n));
}

Var Tape::gather_dot(Var a, Var b, std::vector<std::vector<std::size_t>> index) {
    const Matrix& va = nodes_[a.id].value;
    const Matrix& vb = nodes_[b.id].value;
    if (va.cols() != vb.cols()) throw NumericError("gather_dot: dimension mismatch");
    if (index.size() != va.rows()) throw NumericError("gather_dot: index row count mismatch");
    const std::size_t width = index.empty() ? 0 : index[0].size();
    Matrix y(va.rows(), width);
    for (std::size_t i = 0; i < va.rows(); ++i) {
        if (index[i].size() != width) throw NumericError("gather_dot: ragged index");
        for (std::size_t j = 0; j < width; ++j) {
            const std::size_t k = index[i][j];
            if (k >= vb.rows()) throw NumericError("gather_dot: index out of range");
            double s = 0.0;
            for (std::size_t c = 0; c < va.cols(); ++c) s += va(i, c) * vb(k, c);
            y(i, j) = s;
        }
    }
    Node n;
    n.op = Op::GatherDot;
    n.in0 = a.id;
    n.in1 = b.id;
    n.requires_grad = either_grad(nodes_[a.id].requires_grad, nodes_[b.id].requires_grad);
    n.value = std::move(y);
    n.index = std::move(index);
    return push(std::move(n));
}

Var Tape::logsumexp_rows(Var x) {
    const Matrix& v = nodes_[x.id].value;
    if (v.cols() == 0) throw NumericError("logsumexp_rows: empty rows");
    Matrix y(v.rows(), 1);
    Matrix softmax(v.rows(), v.cols());
    for (std::size_t i = 0; i < v.rows(); ++i) {
        double mx = v(i, 0);
        for (std::size_t j = 1; j < v.cols(); ++j) mx = std::max(mx, v(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < v.cols(); ++j) {
            const double e = std::exp(v(i, j) - mx);
            softmax(i, j) = e;
            s += e;
        }
        y(i, 0) = mx + std::log(s);
        for (std::size_t j = 0; j < v.cols(); ++j) softmax(i, j) /= s;
    }
    Node n;
    n.op = Op::LogSumExpRows;
    n.in0 = x.id;
    n.requires_grad = nodes_[x.id].requires_grad;
    n.value = std::move(y);
    n.aux = std::move(softmax);
    return push(std::move(n));
}

Var Tape::column(Var x, std::size_t j) {
    const Matrix& v = nodes_[x.id].value;
    if (j >= v.cols()) throw NumericError("column: index out of range");
    Matrix y(v.rows(), 1);
    for (std::size_t i = 0; i < v.rows(); ++i) y(i, 0) = v(i, j);
    Node n;
    n.op = Op::Column;
    n.in0 = x.id;
    n.scalar = static_cast<double>(j);
    n.requires_grad = nodes_[x.id].requires_grad;
    n.value = std::move(y);
    return push(std::move(n));
}

Var Tape::sum_all(Var x) {
    Node n;
    n.op = Op::SumAll;
    n.in0 = x.id;
    n.requires_grad = nodes_[x.id].requires_grad;
    n.value = Matrix(1, 1, {vascl::sum(nodes_[x.id].value)});
    return push(std::move(n));
}

Var Tape::mean_all(Var x) {
    const Matrix& v = nodes_[x.id].value;
    if (v.empty()) throw NumericError("mean_all: empty input");
    Node n;
    n.op = Op::MeanAll;
    n.in0 = x.id;
    n.requires_grad = nodes_[x.id].requires_grad;
    n.value = Matrix(1, 1, {vascl::sum(v) / static_cast<double>(v.size())});
    return push(std::move(n));
}

Var Tape::dot_all(Var a, Var b) {
    Node n;
    n.op = Op::DotAll;
    n.in0 = a.id;
    n.in1 = b.id;
    n.requires_grad = either_grad(nodes_[a.id].requires_grad, nodes_[b.id].requires_grad);
    n.value = Matrix(1, 1, {vascl::dot(nodes_[a.id].value, nodes_[b.id].value)});
    return push(std::move(n));
}

void Tape::backward(Var output) { backward(output, Matrix(1, 1, {1.0})); }

void Tape::backward(Var output, const Matrix& seed) {
    const Node& out = node(output);
    if (!out.value.same_shape(seed)) {
        throw NumericError("backward: seed shape mismatch");
    }
    for (Node& n : nodes_) {
        n.adjoint = Matrix(n.value.rows(), n.value.cols());
    }
    nodes_[output.id].adjoint = seed;
    for (std::size_t k = nodes_.size(); k-- > 0;) {
        Node& n = nodes_[k];
        if (!n.requires_grad) continue;
        backprop_node(n);
    }
    backward_done_ = true;
}

void Tape::backprop_node(Node& n) {
    const Matrix& dy = n.adjoint;
    auto grad_of = [&](int id) -> Matrix& { return nodes_[id].adjoint; };
    auto val_of = [&](int id) -> const Matrix& { return nodes_[id].value; };
    auto wants = [&](int id) { return nodes_[id].requires_grad; };

    switch (n.op) {
        case Op::Leaf:
            break;
        case Op::Affine: {
            const Matrix& x = val_of(n.in0);
            const Matrix& w = val_of(n.in1);
            if (wants(n.in0)) {
                Matrix dx = matmul_nt(dy, w);  // dy * W^T
                grad_of(n.in0) = vascl::add(grad_of(n.in0), dx);
            }
            if (wants(n.in1)) {
                Matrix dw = matmul_tn(x, dy);  // x^T * dy
                grad_of(n.in1) = vascl::add(grad_of(n.in1), dw);
            }
            if (wants(n.in2)) {
                Matrix& db = grad_of(n.in2);
                for (std::size_t i = 0; i < dy.rows(); ++i)
                    for (std::size_t j = 0; j < dy.cols(); ++j) db(0, j) += dy(i, j);
            }
            break;
        }
        case Op::Relu: {
            if (!wants(n.in0)) break;
            const Matrix& x = val_of(n.in0);
            Matrix& dx = grad_of(n.in0);
            for (std::size_t i = 0; i < dy.size(); ++i)
                if (x.values()[i] > 0.0) dx.values()[i] += dy.values()[i];
            break;
        }
        case Op::Tanh: {
            if (!wants(n.in0)) break;
            Matrix& dx = grad_of(n.in0);
            for (std::size_t i = 0; i < dy.size(); ++i) {
                const double y = n.value.values()[i];
                dx.values()[i] += dy.values()[i] * (1.0 - y * y);
            }
            break;
        }
        case Op::Add: {
            if (wants(n.in0)) grad_of(n.in0) = vascl::add(grad_of(n.in0), dy);
            if (wants(n.in1)) grad_of(n.in1) = vascl::add(grad_of(n.in1), dy);
            break;
        }
        case Op::Sub: {
            if (wants(n.in0)) grad_of(n.in0) = vascl::add(grad_of(n.in0), dy);
            if (wants(n.in1)) grad_of(n.in1) = vascl::sub(grad_of(n.in1), dy);
            break;
        }
        case Op::Scale: {
            if (wants(n.in0)) grad_of(n.in0) = vascl::add(grad_of(n.in0), vascl::scale(dy, n.scalar));
            break;
        }
        case Op::Mask: {
            if (wants(n.in0)) grad_of(n.in0) = vascl::add(grad_of(n.in0), vascl::hadamard(dy, n.aux));
            break;
        }
        case Op::Hadamard: {
            if (wants(n.in0))
                grad_of(n.in0) = vascl::add(grad_of(n.in0), vascl::hadamard(dy, val_of(n.in1)));
            if (wants(n.in1))
                grad_of(n.in1) = vascl::add(grad_of(n.in1), vascl::hadamard(dy, val_of(n.in0)));
            break;
        }
        case Op::RowNormalize: {
            if (!wants(n.in0)) break;
            Matrix& dx = grad_of(n.in0);
            const Matrix& y = n.value;
            for (std::size_t i = 0; i < y.rows(); ++i) {
                const double nrm = n.aux(i, 0);
                double ydy = 0.0;
                for (std::size_t j = 0; j < y.cols(); ++j) ydy += y(i, j) * dy(i, j);
                for (std::size_t j = 0; j < y.cols(); ++j)
                    dx(i, j) += (dy(i, j) - y(i, j) * ydy) / nrm;
            }
            break;
        }
        case Op::ConcatRows: {
            const std::size_t ra = val_of(n.in0).rows();
            if (wants(n.in0)) {
                Matrix& da = grad_of(n.in0);
                for (std::size_t i = 0; i < ra; ++i)
                    for (std::size_t j = 0; j < dy.cols(); ++j) da(i, j) += dy(i, j);
            }
            if (wants(n.in1)) {
                Matrix& db = grad_of(n.in1);
                for (std::size_t i = 0; i < db.rows(); ++i)
                    for (std::size_t j = 0; j < dy.cols(); ++j) db(i, j) += dy(ra + i, j);
            }
            break;
        }
        case Op::GatherDot: {
            const Matrix& a = val_of(n.in0);
            const Matrix& b = val_of(n.in1);
            for (std::size_t i = 0; i < n.index.size(); ++i) {
                for (std::size_t j = 0; j < n.index[i].size(); ++j) {
                    const double g = dy(i, j);
                    if (g == 0.0) continue;
                    const std::size_t k = n.index[i][j];
                    if (wants(n.in0)) {
                        Matrix& da = grad_of(n.in0);
                        for (std::size_t c = 0; c < a.cols(); ++c) da(i, c) += g * b(k, c);
                    }
                    if (wants(n.in1)) {
                        Matrix& db = grad_of(n.in1);
                        for (std::size_t c = 0; c < a.cols(); ++c) db(k, c) += g * a(i, c);
                    }
                }
            }
            break;
        }
        case Op::LogSumExpRows: {
            if (!wants(n.in0)) break;
            Matrix& dx = grad_of(n.in0);
            const Matrix& sm = n.aux;
            for (std::size_t i = 0; i < sm.rows(); ++i)
                for (std::size_t j = 0; j < sm.cols(); ++j) dx(i, j) += dy(i, 0) * sm(i, j);
            break;
        }
        case Op::Column: {
            if (!wants(n.in0)) break;
            Matrix& dx = grad_of(n.in0);
            const std::size_t j = static_cast<std::size_t>(n.scalar);
            for (std::size_t i = 0; i < dy.rows(); ++i) dx(i, j) += dy(i, 0);
            break;
        }
        case Op::SumAll: {
            if (!wants(n.in0)) break;
            Matrix& dx = grad_of(n.in0);
            for (double& v : dx.values()) v += dy(0, 0);
            break;
        }
        case Op::MeanAll: {
            if (!wants(n.in0)) break;
            Matrix& dx = grad_of(n.in0);
            const double g = dy(0, 0) / static_cast<double>(dx.size());
            for (double& v : dx.values()) v += g;
            break;
        }
        case Op::DotAll: {
            if (wants(n.in0))
                grad_of(n.in0) = vascl::add(grad_of(n.in0), vascl::scale(val_of(n.in1), dy(0, 0)));
            if (wants(n.in1))
                grad_of(n.in1) = vascl::add(grad_of(n.in1), vascl::scale(val_of(n.in0), dy(0, 0)));
            break;
        }
    }
}

}  // namespace vascl
