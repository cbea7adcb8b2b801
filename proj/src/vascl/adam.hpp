#pragma once

#include <cstdint>
#include <vector>

#include "matrix.hpp"

namespace vascl {

// Adam with bias correction and a learning rate per parameter (parameter
// groups are expressed by giving group members the same rate, e.g. head
// vs encoder rates).
class AdamState {
public:
    AdamState(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Registers one parameter; returns its slot index.
    std::size_t register_param(const Matrix& param, double lr);

    std::uint64_t step_count() const { return step_; }
    double learning_rate(std::size_t slot) const { return lr_[slot]; }

    // One Adam update over all registered parameters, in registration order.
    void step(std::vector<Matrix*>& params, const std::vector<Matrix>& grads);

private:
    double beta1_, beta2_, eps_;
    std::uint64_t step_ = 0;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    std::vector<double> lr_;
};

}  // namespace vascl
