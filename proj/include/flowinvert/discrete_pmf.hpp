#pragma once

#include <cstdint>
#include <vector>

#include "flowinvert/common.hpp"

namespace flowinvert {

// Concrete carrier for a distribution over integers: explicit probabilities
// on [support_start, support_start + probs.size()) plus the residual mass
// beyond the explicit support.
struct DiscretePmf {
    std::int64_t support_start = 0;
    std::vector<double> probs;
    double tail_mass = 0.0;

    std::int64_t support_end() const {
        return support_start + static_cast<std::int64_t>(probs.size());
    }

    double at(std::int64_t j) const {
        if (j < support_start || j >= support_end()) return 0.0;
        return probs[static_cast<std::size_t>(j - support_start)];
    }

    double explicit_sum() const {
        double s = 0.0;
        for (double p : probs) s += p;
        return s;
    }

    // Entries must be non-negative and sum (with tail_mass) to 1.
    void validate(double eps = 1e-12) const;
};

// Point mass at j.
DiscretePmf point_mass(std::int64_t j);

}  // namespace flowinvert
