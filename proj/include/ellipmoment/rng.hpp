#pragma once

#include <cstdint>
#include <cmath>

#include "ellipmoment/common.hpp"

namespace ellipmoment {

/// Splittable counter-free generator: each (seed, stream) pair yields an
/// independent reproducible stream (splitmix64 underneath). Draw order within
/// a stream is fixed, so results do not depend on how work is partitioned
/// across workers as long as the stream plan is fixed.
class SplitRng {
public:
    SplitRng(std::uint64_t seed, std::uint64_t stream)
        : state_(mix(mix(seed ^ 0x9e3779b97f4a7c15ull) ^
                     mix(stream ^ 0xbf58476d1ce4e5b9ull))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    /// Uniform on (0, 1); never returns an exact endpoint.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; draws two uniforms per call pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang (with the shape<1 boost).
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Fixed partition plan for Monte Carlo loops: draws are grouped in chunks of
/// `chunk` and chunk k always uses stream index k. Workers may process chunks
/// in any order without changing the result.
struct PartitionPlan {
    std::size_t chunk = 65536;
};

}  // namespace ellipmoment
