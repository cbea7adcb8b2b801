#include "grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace vascl {

GradCheckReport grad_check(const std::function<double(const Matrix&)>& f,
                           const Matrix& analytic_grad, const Matrix& point, double step,
                           double tolerance) {
    if (!analytic_grad.same_shape(point)) {
        throw NumericError("grad_check: gradient/point shape mismatch");
    }
    GradCheckReport report;
    Matrix probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double orig = probe.values()[i];
        probe.values()[i] = orig + step;
        const double fp = f(probe);
        probe.values()[i] = orig - step;
        const double fm = f(probe);
        probe.values()[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericError("grad_check: non-finite function value");
        }
        const double numeric = (fp - fm) / (2.0 * step);
        const double analytic = analytic_grad.values()[i];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        report.max_rel_error = std::max(report.max_rel_error, std::abs(analytic - numeric) / denom);
    }
    report.pass = report.max_rel_error <= tolerance;
    return report;
}

}  // namespace vascl
