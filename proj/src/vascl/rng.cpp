#include "rng.hpp"

#include <cmath>
#include <numbers>

namespace vascl {

std::uint64_t Rng::mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b | 1ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    // 53-bit mantissa from the top bits
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::next_u64() { return engine_(); }

std::size_t Rng::index(std::size_t n) {
    // rejection sampling for an unbiased bounded draw
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return static_cast<std::size_t>(v % n);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = index(i);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

Matrix sample_gaussian(std::size_t rows, std::size_t cols, double std_dev, Rng& rng) {
    if (std_dev <= 0.0) throw NumericError("sample_gaussian: std must be > 0");
    Matrix out(rows, cols);
    for (double& v : out.values()) v = std_dev * rng.gaussian();
    return out;
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw NumericError("dropout_mask: rate must be in [0, 1)");
    Matrix out(rows, cols, 1.0);
    if (rate == 0.0) return out;
    const double keep = 1.0 - rate;
    const double inv_keep = 1.0 / keep;
    for (double& v : out.values()) v = rng.uniform() < rate ? 0.0 : inv_keep;
    return out;
}

}  // namespace vascl
