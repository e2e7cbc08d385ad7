#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace qmdn {

/// Deterministic random source. Variates are derived from mt19937_64 output
/// through explicit arithmetic rather than std distribution objects, whose
/// algorithms vary between standard libraries. A given seed therefore
/// reproduces the same stream across builds.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller. Two uniforms per call, no cached
    /// spare, so the stream position is predictable.
    double normal() {
        // u1 in (0, 1] so the log is finite
        double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

    /// Index drawn proportionally to the given non-negative weights.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0)
                throw std::invalid_argument("categorical: negative weight");
            total += w;
        }
        if (total <= 0.0)
            throw std::invalid_argument("categorical: weights sum to zero");
        double r = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (r < acc)
                return i;
        }
        return weights.size() - 1;
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace qmdn
