#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace flowinvert {

// Domain error raised by estimators when the data contradicts the model
// (e.g. infeasible head-solve ratio, degenerate likelihood).
class ModelMismatchError : public std::runtime_error {
public:
    explicit ModelMismatchError(const std::string& what) : std::runtime_error(what) {}
};

// Raised on malformed inputs / out-of-range parameters.
class InvalidArgumentError : public std::invalid_argument {
public:
    explicit InvalidArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// Deterministic RNG wrapper. mt19937_64 is fully specified by the standard,
// so identical seeds give identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform double in (0, 1); never exactly zero.
    double uniform_open() {
        const double u = uniform();
        return u > 0.0 ? u : 0x1.0p-53;
    }

    // Uniform integer in [0, n); rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw InvalidArgumentError("Rng::below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace flowinvert
