#pragma once

// Deterministic random source.  mt19937_64 has a standard-specified
// sequence, and every variate below is built from its raw 64-bit draws
// with fixed arithmetic, so streams are reproducible across platforms
// for a given seed.  derive_seed gives decorrelated per-task seeds so
// replicate k of a simulation reads the same stream no matter how the
// replicates are scheduled.

#include <cmath>
#include <cstdint>
#include <random>

namespace logcave {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1); rejects the single zero value.
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    // Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double exponential() { return -std::log(uniform_open()); }

    // Marsaglia-Tsang for shape >= 1, boosted below 1.  Unit scale.
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = uniform_open();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Gamma(shape) scaled to variance 1 and shifted to mean 0.
    double centered_gamma(double shape) {
        return (gamma(shape) - shape) / std::sqrt(shape);
    }

    // Standard Laplace (density e^{-|x|}/2).
    double laplace() {
        double u = uniform_open();
        return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
    }

    // Student t with 2 degrees of freedom via its closed-form quantile.
    double t2() {
        double u = uniform_open();
        double s = 2.0 * u - 1.0;
        return s / std::sqrt((1.0 - s) * (1.0 + s));
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64 finalizer over master + golden-ratio steps; decorrelates
// consecutive indices.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace logcave
