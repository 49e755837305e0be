#include "flowinvert/discrete_pmf.hpp"

#include <cmath>
#include <string>

namespace flowinvert {

void DiscretePmf::validate(double eps) const {
    if (support_start < 0) throw InvalidArgumentError("DiscretePmf: support_start < 0");
    if (tail_mass < -eps) throw InvalidArgumentError("DiscretePmf: negative tail_mass");
    double sum = tail_mass;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw InvalidArgumentError("DiscretePmf: negative or non-finite entry");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > eps)
        throw InvalidArgumentError("DiscretePmf: mass sums to " + std::to_string(sum) +
                                   ", expected 1");
}

DiscretePmf point_mass(std::int64_t j) {
    DiscretePmf pmf;
    pmf.support_start = j;
    pmf.probs = {1.0};
    pmf.tail_mass = 0.0;
    return pmf;
}

}  // namespace flowinvert
