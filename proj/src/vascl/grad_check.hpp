#pragma once

#include <functional>

#include "matrix.hpp"

namespace vascl {

struct GradCheckReport {
    double max_rel_error = 0.0;
    bool pass = false;
};

// Compares an analytic gradient against central finite differences at the
// given point, entry by entry. Relative error is |a-n| / max(|a|, |n|, 1e-8).
// Throws NumericError if the function evaluates to a non-finite value.
GradCheckReport grad_check(const std::function<double(const Matrix&)>& f,
                           const Matrix& analytic_grad, const Matrix& point, double step,
                           double tolerance);

}  // namespace vascl
