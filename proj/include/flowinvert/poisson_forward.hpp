#pragma once

#include <cstdint>
#include <span>

#include "flowinvert/discrete_pmf.hpp"

namespace flowinvert {

// Poisson mixture of a size distribution: probs[j] = sum_l pmf(l) Pois(p*l)_j.
// truncation_error bounds the mixture mass attributable to the input pmf's
// unenumerated tail (that mass ends up inside probs.tail_mass).
struct MixtureResult {
    DiscretePmf probs;          // support starts at 0
    double truncation_error = 0.0;
};

// Q_j for j = 0..j_max, evaluated in log space so that huge supports and tiny
// rates stay finite. Deterministic summation order (ascending l).
MixtureResult mixture_q(const DiscretePmf& v_pmf, double p, std::int64_t j_max);

// Model prediction for the observed sampled-flow pmf: (1/nu) * Q_j on j >= 1.
DiscretePmf forward_sampled_pmf(const DiscretePmf& v_pmf, double p, double nu,
                                std::int64_t j_max);

// S_j = sum_{l>=1} (1-r) r^l (pl)^j e^{-pl} / j!. Closed forms for j <= 2
// (with q = r e^{-p}), converging direct summation otherwise.
double geom_poisson_sum(double r, double p, std::int64_t j);

// Total variation distance. Tail masses are treated as occupying a shared
// overflow bucket, which keeps the result a metric on carriers.
double tv_distance(const DiscretePmf& d1, const DiscretePmf& d2);

// Right-hand side of the mean-count approximation bound under the
// permanent-flow reduction: p * sum_i v_i^2 / V with V = total_packets.
double lecam_bound(std::span<const std::int64_t> flow_sizes, std::int64_t total_packets,
                   double p);
// Per-flow version: p * v^2 / V.
double lecam_flow_bound(std::int64_t flow_size, std::int64_t total_packets, double p);

}  // namespace flowinvert
