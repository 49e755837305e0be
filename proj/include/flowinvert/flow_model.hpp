#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "flowinvert/common.hpp"
#include "flowinvert/discrete_pmf.hpp"

namespace flowinvert {

// One power-law piece of the size ccdf: P(v >= j) = scale_mass * (lo/j)^shape
// for j in [lo, hi). hi is +infinity for the last segment.
struct ParetoSegment {
    std::int64_t lo = 1;
    double hi = std::numeric_limits<double>::infinity();  // exclusive
    double shape = 1.0;
    double scale_mass = 1.0;  // ccdf value at lo

    bool unbounded() const { return !(hi < std::numeric_limits<double>::infinity()); }
    double ccdf_at(double j) const;
};

// Parametric flow-size law: geometric head on [1, b0) carrying head_mass,
// piecewise-Pareto tail on [b0, inf) carrying the rest. Immutable after
// construction; all evaluation methods are const and thread-safe.
class FlowSizeModel {
public:
    // segments: (lo, hi, shape) triples; scale masses are chained internally
    // so the ccdf is continuous and starts at 1 - head_mass at b0.
    // b0 == 1 means no head (head_mass must be 0). An empty segment list is
    // allowed only for a pure-head model (head_mass == 1), in which case the
    // geometric support is [1, b0).
    FlowSizeModel(double r, std::int64_t b0, double head_mass,
                  std::vector<ParetoSegment> segments);

    double r() const { return r_; }
    std::int64_t b0() const { return b0_; }
    double head_mass() const { return head_mass_; }
    const std::vector<ParetoSegment>& segments() const { return segments_; }

    // P(v = j), j >= 1.
    double pmf(std::int64_t j) const;
    // P(v >= j), j >= 1.
    double ccdf(std::int64_t j) const;

    // Explicit pmf on [1, cap] with analytic tail mass beyond.
    DiscretePmf to_pmf(std::int64_t cap = 1'000'000) const;

    // i.i.d. sizes via inverse-ccdf on a seeded generator.
    std::vector<std::int64_t> draw(std::int64_t count, std::uint64_t seed) const;

    std::string to_json() const;
    static FlowSizeModel from_json(const std::string& text);

private:
    double head_prefix_mass(std::int64_t j) const;  // P(v < j) for j <= b0
    std::int64_t invert_u(double u) const;

    double r_;
    std::int64_t b0_;
    double head_mass_;
    double head_norm_;  // sum_{j=1}^{b0-1} (1-r) r^j = r - r^b0
    std::vector<ParetoSegment> segments_;
};

// Convenience constructors for common shapes.
FlowSizeModel pure_pareto_model(std::int64_t lo, double shape);
FlowSizeModel pure_geometric_model(double r, std::int64_t cap_b0 = 1000);

}  // namespace flowinvert
