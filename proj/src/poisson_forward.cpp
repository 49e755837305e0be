#include "flowinvert/poisson_forward.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace flowinvert {

namespace {

constexpr double kExpUnderflow = -745.0;

void check_probability(double p) {
    if (!(p > 0.0 && p <= 1.0))
        throw InvalidArgumentError("sampling probability must be in (0, 1]");
}

}  // namespace

MixtureResult mixture_q(const DiscretePmf& v_pmf, double p, std::int64_t j_max) {
    check_probability(p);
    if (j_max < 0) throw InvalidArgumentError("mixture_q: j_max must be >= 0");
    v_pmf.validate(1e-9);

    const std::size_t n = v_pmf.probs.size();
    std::vector<double> lam(n);
    std::vector<double> log_lam(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ell = static_cast<double>(v_pmf.support_start + static_cast<std::int64_t>(i));
        lam[i] = p * ell;
        log_lam[i] = ell > 0.0 ? std::log(lam[i]) : 0.0;
    }

    MixtureResult out;
    out.truncation_error = v_pmf.tail_mass;
    out.probs.support_start = 0;
    out.probs.probs.assign(static_cast<std::size_t>(j_max) + 1, 0.0);

    for (std::int64_t j = 0; j <= j_max; ++j) {
        const double lg = std::lgamma(static_cast<double>(j) + 1.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = v_pmf.probs[i];
            if (w == 0.0) continue;
            if (lam[i] == 0.0) {  // atom at size 0 contributes only to j = 0
                if (j == 0) acc += w;
                continue;
            }
            const double e = static_cast<double>(j) * log_lam[i] - lam[i] - lg;
            if (e > kExpUnderflow) acc += w * std::exp(e);
        }
        out.probs.probs[static_cast<std::size_t>(j)] = acc;
    }
    out.probs.tail_mass = std::max(0.0, 1.0 - out.probs.explicit_sum());
    return out;
}

DiscretePmf forward_sampled_pmf(const DiscretePmf& v_pmf, double p, double nu,
                                std::int64_t j_max) {
    check_probability(p);
    if (!(nu > 0.0 && nu <= 1.0))
        throw InvalidArgumentError("forward_sampled_pmf: nu must be in (0, 1]");
    if (j_max < 1) throw InvalidArgumentError("forward_sampled_pmf: j_max must be >= 1");
    const MixtureResult mix = mixture_q(v_pmf, p, j_max);
    DiscretePmf out;
    out.support_start = 1;
    out.probs.assign(static_cast<std::size_t>(j_max), 0.0);
    for (std::int64_t j = 1; j <= j_max; ++j) {
        out.probs[static_cast<std::size_t>(j - 1)] = mix.probs.at(j) / nu;
    }
    out.tail_mass = std::max(0.0, 1.0 - out.explicit_sum());
    return out;
}

double geom_poisson_sum(double r, double p, std::int64_t j) {
    if (!(r > 0.0 && r < 1.0)) throw InvalidArgumentError("geom_poisson_sum: r must be in (0, 1)");
    check_probability(p);
    if (j < 0) throw InvalidArgumentError("geom_poisson_sum: j must be >= 0");

    const double q = r * std::exp(-p);
    if (j == 0) return (1.0 - r) * q / (1.0 - q);
    if (j == 1) return p * (1.0 - r) * q / ((1.0 - q) * (1.0 - q));
    if (j == 2) {
        const double om = 1.0 - q;
        return 0.5 * p * p * (1.0 - r) * q * (1.0 + q) / (om * om * om);
    }

    // Direct summation; terms follow l^j q^l, unimodal with mode near
    // j / (p - ln r), so stop once past the mode with a geometric tail bound.
    const double log_r = std::log(r);
    const double lg = std::lgamma(static_cast<double>(j) + 1.0);
    const double mode = static_cast<double>(j) / (p - log_r);
    double sum = 0.0;
    for (std::int64_t ell = 1; ell <= 10'000'000; ++ell) {
        const double x = static_cast<double>(ell);
        const double e = x * log_r + static_cast<double>(j) * std::log(p * x) - p * x - lg;
        const double term = (e > kExpUnderflow) ? (1.0 - r) * std::exp(e) : 0.0;
        sum += term;
        if (x > mode) {
            const double ratio = q * std::pow((x + 1.0) / x, static_cast<double>(j));
            if (ratio < 1.0 && term * ratio / (1.0 - ratio) < 1e-18 * sum) break;
        }
    }
    return sum;
}

double tv_distance(const DiscretePmf& d1, const DiscretePmf& d2) {
    const std::int64_t lo = std::min(d1.support_start, d2.support_start);
    const std::int64_t hi = std::max(d1.support_end(), d2.support_end());
    double sum = 0.0;
    for (std::int64_t j = lo; j < hi; ++j) {
        sum += std::fabs(d1.at(j) - d2.at(j));
    }
    sum += std::fabs(d1.tail_mass - d2.tail_mass);
    return 0.5 * sum;
}

double lecam_bound(std::span<const std::int64_t> flow_sizes, std::int64_t total_packets,
                   double p) {
    check_probability(p);
    if (total_packets < 1) throw InvalidArgumentError("lecam_bound: total_packets must be >= 1");
    double sum = 0.0;
    for (std::int64_t v : flow_sizes) {
        if (v > total_packets)
            throw InvalidArgumentError("lecam_bound: flow size exceeds total_packets");
        sum += static_cast<double>(v) * static_cast<double>(v);
    }
    return p * sum / static_cast<double>(total_packets);
}

double lecam_flow_bound(std::int64_t flow_size, std::int64_t total_packets, double p) {
    check_probability(p);
    if (total_packets < 1 || flow_size > total_packets)
        throw InvalidArgumentError("lecam_flow_bound: invalid sizes");
    return p * static_cast<double>(flow_size) * static_cast<double>(flow_size) /
           static_cast<double>(total_packets);
}

}  // namespace flowinvert
