#include "adam.hpp"

#include <cmath>
#include <string>

namespace vascl {

std::size_t AdamState::register_param(const Matrix& param, double lr) {
    m_.emplace_back(param.rows(), param.cols());
    v_.emplace_back(param.rows(), param.cols());
    lr_.push_back(lr);
    return lr_.size() - 1;
}

void AdamState::step(std::vector<Matrix*>& params, const std::vector<Matrix>& grads) {
    if (params.size() != lr_.size() || grads.size() != lr_.size()) {
        throw NumericError("adam: parameter count mismatch");
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& w = *params[p];
        const Matrix& g = grads[p];
        if (!w.same_shape(g) || !w.same_shape(m_[p])) {
            throw NumericError("adam: shape mismatch at parameter " + std::to_string(p));
        }
        if (!g.all_finite()) {
            throw NumericError("adam: non-finite gradient at parameter " + std::to_string(p));
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g.values()[i];
            double& mi = m_[p].values()[i];
            double& vi = v_[p].values()[i];
            mi = beta1_ * mi + (1.0 - beta1_) * gi;
            vi = beta2_ * vi + (1.0 - beta2_) * gi * gi;
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            w.values()[i] -= lr_[p] * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace vascl
