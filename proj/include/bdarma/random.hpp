#pragma once

#include <cstdint>
#include <random>

namespace bdarma {

/// Seedable random source. Every stochastic routine takes one explicitly;
/// nothing in the library touches global RNG state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() {
        double u;
        do {
            u = std::generate_canonical<double, 53>(engine_);
        } while (u <= 0.0);
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return normal_(engine_); }

    /// Gamma(shape, 1) via Marsaglia-Tsang, returned on the log scale so that
    /// tiny shapes do not underflow.
    double log_gamma_variate(double shape);

    std::uint64_t next_u64() { return engine_(); }

    /// Independent stream derived from (master, index) with SplitMix64 mixing.
    static Rng derive(std::uint64_t master, std::uint64_t index);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

}  // namespace bdarma
