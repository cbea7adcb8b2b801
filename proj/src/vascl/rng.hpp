#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "matrix.hpp"

namespace vascl {

// Deterministic RNG with named substreams. A run seed plus a stream id
// derives an independent mt19937_64 stream, so concurrent consumers
// (dropout views, k-means restarts, probe splits) never share state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed, 0x9e3779b97f4a7c15ull)) {}

    static Rng substream(std::uint64_t seed, std::uint64_t stream_id) {
        return Rng(mix(seed, mix(stream_id, 0xbf58476d1ce4e5b9ull)));
    }

    std::mt19937_64& engine() { return engine_; }

    double uniform();                 // [0, 1)
    double gaussian();                // standard normal, Box-Muller
    std::uint64_t next_u64();
    std::size_t index(std::size_t n); // uniform in [0, n)

    std::vector<std::size_t> permutation(std::size_t n);

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b);
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// i.i.d. zero-mean Gaussian entries with the given std (isotropic covariance).
Matrix sample_gaussian(std::size_t rows, std::size_t cols, double std_dev, Rng& rng);

// Inverted-dropout keep mask: entries are 0 with probability `rate`,
// 1/(1-rate) otherwise.
Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);

}  // namespace vascl
