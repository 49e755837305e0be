#include "flowinvert/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowinvert/poisson_forward.hpp"
#include "json.hpp"

namespace flowinvert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinePoints {
    std::vector<std::int64_t> j;
    std::vector<double> x;  // log j
    std::vector<double> y;  // log ccdf
};

struct PrefixSums {
    std::vector<double> sx, sy, sxx, sxy, syy;

    explicit PrefixSums(const LinePoints& pts) {
        const std::size_t n = pts.x.size();
        sx.assign(n + 1, 0.0);
        sy.assign(n + 1, 0.0);
        sxx.assign(n + 1, 0.0);
        sxy.assign(n + 1, 0.0);
        syy.assign(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            sx[i + 1] = sx[i] + pts.x[i];
            sy[i + 1] = sy[i] + pts.y[i];
            sxx[i + 1] = sxx[i] + pts.x[i] * pts.x[i];
            sxy[i + 1] = sxy[i] + pts.x[i] * pts.y[i];
            syy[i + 1] = syy[i] + pts.y[i] * pts.y[i];
        }
    }

    // Least-squares line over points [i, k); returns {sse, slope, intercept}.
    std::array<double, 3> fit(std::size_t i, std::size_t k) const {
        const double cnt = static_cast<double>(k - i);
        const double ax = sx[k] - sx[i];
        const double ay = sy[k] - sy[i];
        const double axx = sxx[k] - sxx[i];
        const double axy = sxy[k] - sxy[i];
        const double ayy = syy[k] - syy[i];
        const double det = cnt * axx - ax * ax;
        if (det <= 0.0) return {0.0, 0.0, ay / cnt};
        const double slope = (cnt * axy - ax * ay) / det;
        const double icept = (ay - slope * ax) / cnt;
        const double sse = std::max(ayy - icept * ay - slope * axy, 0.0);
        return {sse, slope, icept};
    }
};

struct SegmentedFit {
    double sse = kInf;
    std::vector<std::size_t> break_idx;     // index of first point of each later segment
    std::vector<double> slopes;
    std::vector<double> intercepts;
};

SegmentedFit best_fit(const PrefixSums& ps, std::size_t n, int m, std::size_t minp) {
    SegmentedFit best;
    if (m == 1) {
        auto [e, b, c] = ps.fit(0, n);
        best = {e, {}, {b}, {c}};
        return best;
    }
    if (m == 2) {
        for (std::size_t k = minp; k + minp <= n; ++k) {
            auto [e1, b1, c1] = ps.fit(0, k);
            auto [e2, b2, c2] = ps.fit(k, n);
            if (e1 + e2 < best.sse) best = {e1 + e2, {k}, {b1, b2}, {c1, c2}};
        }
        return best;
    }
    for (std::size_t k1 = minp; k1 + 2 * minp <= n; ++k1) {
        auto [e1, b1, c1] = ps.fit(0, k1);
        for (std::size_t k2 = k1 + minp; k2 + minp <= n; ++k2) {
            auto [e2, b2, c2] = ps.fit(k1, k2);
            auto [e3, b3, c3] = ps.fit(k2, n);
            const double tot = e1 + e2 + e3;
            if (tot < best.sse) best = {tot, {k1, k2}, {b1, b2, b3}, {c1, c2, c3}};
        }
    }
    return best;
}

// Picks m automatically: grow while an extra segment shrinks the SSE below
// improvement * SSE and the fit is not already essentially exact.
SegmentedFit auto_fit(const PrefixSums& ps, std::size_t n, const DetectOptions& opt, int* m_out) {
    const auto minp = static_cast<std::size_t>(opt.min_points_per_segment);
    if (opt.m > 0) {
        if (n < static_cast<std::size_t>(opt.m) * minp)
            throw InvalidArgumentError("detect_breakpoints: insufficient support for requested m");
        *m_out = opt.m;
        return best_fit(ps, n, opt.m, minp);
    }
    SegmentedFit cur = best_fit(ps, n, 1, minp);
    *m_out = 1;
    for (int m = 2; m <= opt.max_segments; ++m) {
        if (cur.sse < 1e-10) break;
        if (n < static_cast<std::size_t>(m) * minp) break;
        SegmentedFit cand = best_fit(ps, n, m, minp);
        if (cand.sse < opt.auto_improvement * cur.sse) {
            cur = std::move(cand);
            *m_out = m;
        } else {
            break;
        }
    }
    return cur;
}

LinePoints collect_points(const std::map<std::int64_t, double>& ccdf, std::int64_t j_min,
                          std::int64_t cap) {
    LinePoints pts;
    for (const auto& [j, c] : ccdf) {
        if (j < j_min || j > cap || c <= 0.0) continue;
        pts.j.push_back(j);
        pts.x.push_back(std::log(static_cast<double>(j)));
        pts.y.push_back(std::log(c));
    }
    return pts;
}

std::int64_t support_percentile(const std::map<std::int64_t, double>& ccdf, double pct) {
    // Largest support point still reached by at least (1 - pct) of the flows.
    std::int64_t cap = ccdf.empty() ? 0 : ccdf.begin()->first;
    for (const auto& [j, c] : ccdf) {
        if (c >= 1.0 - pct) cap = j;
    }
    return cap;
}

}  // namespace

void BreakpointSet::validate() const {
    if (shapes.empty()) throw InvalidArgumentError("BreakpointSet: m must be >= 1");
    if (breaks.size() + 1 != shapes.size())
        throw InvalidArgumentError("BreakpointSet: breaks/shapes size mismatch");
    std::int64_t prev = j0;
    for (std::int64_t b : breaks) {
        if (b <= prev) throw InvalidArgumentError("BreakpointSet: breaks must increase");
        prev = b;
    }
    for (double a : shapes) {
        if (!(a > 0.0)) throw InvalidArgumentError("BreakpointSet: shapes must be positive");
    }
}

DetectResult detect_breakpoints(const std::map<std::int64_t, double>& sampled_ccdf,
                                const DetectOptions& options) {
    const std::int64_t cap = support_percentile(sampled_ccdf, options.cap_percentile);
    LinePoints pts = collect_points(sampled_ccdf, options.j_min, cap);
    const std::size_t minp = static_cast<std::size_t>(options.min_points_per_segment);
    if (pts.j.size() < std::max<std::size_t>(2, minp))
        throw InvalidArgumentError("detect_breakpoints: insufficient support beyond j_min");

    PrefixSums ps(pts);
    int m = 1;
    SegmentedFit fit = auto_fit(ps, pts.j.size(), options, &m);

    // j0 scan: smallest j from which the first segment's residuals stay below
    // the threshold (per-point, with an optional binomial noise floor).
    const std::size_t seg_end = fit.break_idx.empty() ? pts.j.size() : fit.break_idx[0];
    std::size_t first_ok = seg_end - 1;
    std::vector<char> ok(seg_end, 0);
    for (std::size_t i = 0; i < seg_end; ++i) {
        const double resid = std::fabs(pts.y[i] - (fit.intercepts[0] + fit.slopes[0] * pts.x[i]));
        double threshold = options.residual_threshold;
        if (options.total_flows > 0) {
            const double c = std::exp(pts.y[i]);
            const double sigma =
                std::sqrt((1.0 - c) / (c * static_cast<double>(options.total_flows)));
            threshold = std::max(threshold, 3.0 * sigma);
        }
        ok[i] = resid <= threshold ? 1 : 0;
    }
    for (std::size_t i = 0; i < seg_end; ++i) {
        bool all = true;
        for (std::size_t t = i; t < seg_end; ++t) {
            if (!ok[t]) {
                all = false;
                break;
            }
        }
        if (all) {
            first_ok = i;
            break;
        }
    }
    const std::int64_t j0 = pts.j[first_ok];

    // Refit on [j0, cap] so the reported breaks and slopes are uncontaminated
    // by the pre-asymptotic points.
    LinePoints pts2 = collect_points(sampled_ccdf, j0, cap);
    PrefixSums ps2(pts2);
    int m2 = 1;
    SegmentedFit fit2 = auto_fit(ps2, pts2.j.size(), options, &m2);

    DetectResult result;
    result.cap = cap;
    result.fit_sse = fit2.sse;
    result.breakpoints.j0 = j0;
    for (std::size_t idx : fit2.break_idx) result.breakpoints.breaks.push_back(pts2.j[idx]);
    for (double slope : fit2.slopes) result.breakpoints.shapes.push_back(std::max(-slope, 1e-12));
    return result;
}

double pareto_shape_mle(std::span<const std::pair<double, std::int64_t>> weighted_sizes,
                        double j_lo, double j_hi) {
    if (!(j_lo > 0.0) || !(j_hi > j_lo))
        throw InvalidArgumentError("pareto_shape_mle: need 0 < j_lo < j_hi");
    double n = 0.0;
    double sum_log = 0.0;
    for (const auto& [size, count] : weighted_sizes) {
        if (size < j_lo || size >= j_hi || count <= 0) continue;
        n += static_cast<double>(count);
        sum_log += static_cast<double>(count) * std::log(size / j_lo);
    }
    if (n < 1.0) throw InvalidArgumentError("pareto_shape_mle: empty range");
    const double t = sum_log / n;
    if (t < 1e-12)
        throw ModelMismatchError("pareto_shape_mle: all sizes at j_lo, shape diverges");
    if (j_hi == kInf) return 1.0 / t;

    const double beta = std::log(j_hi / j_lo);
    if (t >= 0.5 * beta)
        throw ModelMismatchError(
            "pareto_shape_mle: no positive root, sample too dispersed for a truncated Pareto");
    auto g = [&](double a) { return 1.0 / a - t - beta / std::expm1(a * beta); };
    double lo = 1e-9;
    double hi = 1e6;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double hill_estimate(std::span<const double> sizes, double x_min) {
    if (!(x_min > 0.0)) throw InvalidArgumentError("hill_estimate: x_min must be positive");
    double n = 0.0;
    double sum_log = 0.0;
    for (double x : sizes) {
        if (x < x_min) continue;
        n += 1.0;
        sum_log += std::log(x / x_min);
    }
    if (n < 1.0) throw InvalidArgumentError("hill_estimate: no sizes above x_min");
    if (sum_log < 1e-12 * n)
        throw ModelMismatchError("hill_estimate: all sizes at x_min, shape diverges");
    return n / sum_log;
}

double fit_pareto_shape(const FlowHistogram& sampled_hist, std::int64_t j_lo, double j_hi) {
    std::vector<std::pair<double, std::int64_t>> in_range;
    std::int64_t flows = 0;
    for (const auto& [size, count] : sampled_hist.counts) {
        const double s = static_cast<double>(size);
        if (s < static_cast<double>(j_lo) || s >= j_hi) continue;
        in_range.emplace_back(s, count);
        flows += count;
    }
    if (flows < 10)
        throw InvalidArgumentError("fit_pareto_shape: fewer than 10 flows in range");
    return pareto_shape_mle(in_range, static_cast<double>(j_lo), j_hi);
}

std::vector<std::pair<double, double>> rescale_tail(
    const std::map<std::int64_t, double>& sampled_ccdf, double p, double nu) {
    if (!(p > 0.0 && p <= 1.0)) throw InvalidArgumentError("rescale_tail: p must be in (0, 1]");
    if (!(nu > 0.0 && nu <= 1.0)) throw InvalidArgumentError("rescale_tail: nu must be in (0, 1]");
    std::vector<std::pair<double, double>> out;
    out.reserve(sampled_ccdf.size());
    for (const auto& [j, c] : sampled_ccdf) {
        out.emplace_back(static_cast<double>(j) / p, nu * c);
    }
    return out;
}

EtaEstimate estimate_eta(const std::map<std::int64_t, double>& sampled_ccdf, double a1,
                         std::int64_t b0, double p, std::int64_t j0, std::int64_t j1) {
    if (j1 < j0) throw InvalidArgumentError("estimate_eta: empty range");
    EtaEstimate est;
    for (std::int64_t j = j0; j <= j1; ++j) {
        const double c = ccdf_at(sampled_ccdf, j);
        if (c <= 0.0) continue;
        const double base = static_cast<double>(b0) * p / static_cast<double>(j);
        est.per_j.push_back(c / std::pow(base, a1));
    }
    if (est.per_j.empty()) throw InvalidArgumentError("estimate_eta: no support in range");
    double sum = 0.0;
    for (double e : est.per_j) sum += e;
    est.eta = sum / static_cast<double>(est.per_j.size());
    double spread = 0.0;
    for (double e : est.per_j) spread = std::max(spread, std::fabs(e - est.eta));
    est.spread = est.eta > 0.0 ? spread / est.eta : 0.0;
    return est;
}

std::int64_t estimate_k0_plus(double eta, std::int64_t k_s) {
    if (!(eta > 0.0)) throw InvalidArgumentError("estimate_k0_plus: eta must be positive");
    if (k_s < 1) throw InvalidArgumentError("estimate_k0_plus: K_s must be >= 1");
    return static_cast<std::int64_t>(std::floor(eta * static_cast<double>(k_s)));
}

HeadSolution solve_head(double w1, double w2, std::int64_t k_s, double p,
                        std::optional<std::pair<double, double>> tail_terms) {
    if (!(p > 0.0 && p <= 1.0)) throw InvalidArgumentError("solve_head: p must be in (0, 1]");
    if (!(w1 >= 1.0)) throw InvalidArgumentError("solve_head: W1 must be >= 1");
    if (!(w2 >= 1.0))
        throw ModelMismatchError("solve_head: W2 = 0, cannot fit the geometric head");
    if (k_s < 1) throw InvalidArgumentError("solve_head: K_s must be >= 1");

    const double t1 = tail_terms ? tail_terms->first : 0.0;
    const double t2 = tail_terms ? tail_terms->second : 0.0;
    const double u1 = w1 - t1;
    const double u2 = w2 - t2;
    if (!(u1 > 0.0) || !(u2 > 0.0))
        throw ModelMismatchError("solve_head: tail correction exceeds observed counts");

    const double ratio = p * u1 / u2;
    const double q = (2.0 - ratio) / (2.0 + ratio);
    if (!(q > 0.0 && q < 1.0))
        throw ModelMismatchError("solve_head: W1/W2 ratio outside the feasible range");
    const double r_hat = q * std::exp(p);
    if (!(r_hat > 0.0 && r_hat < 1.0))
        throw ModelMismatchError("solve_head: implied head ratio r is not in (0, 1)");

    HeadSolution sol;
    sol.q = q;
    sol.r_hat = r_hat;
    sol.k0_minus = u1 / geom_poisson_sum(r_hat, p, 1);
    sol.residual1 = w1 - (sol.k0_minus * geom_poisson_sum(r_hat, p, 1) + t1);
    sol.residual2 = w2 - (sol.k0_minus * geom_poisson_sum(r_hat, p, 2) + t2);
    return sol;
}

CountsEstimate estimate_counts(double k0_plus, double k0_minus, std::int64_t k_s) {
    if (k0_plus < 0.0 || k0_minus < 0.0)
        throw InvalidArgumentError("estimate_counts: counts must be non-negative");
    if (k_s < 1) throw InvalidArgumentError("estimate_counts: K_s must be >= 1");
    CountsEstimate est;
    est.k_hat = k0_plus + k0_minus;
    if (!(est.k_hat > 0.0)) throw InvalidArgumentError("estimate_counts: K_hat is zero");
    est.nu_hat = static_cast<double>(k_s) / est.k_hat;
    est.nu_exceeds_one = est.nu_hat > 1.0;
    return est;
}

FlowSizeModel assemble_model(double r_hat, std::int64_t b0, double eta, double k0_minus,
                             double k_hat, const BreakpointSet& breakpoints, double p) {
    if (!(eta > 0.0)) throw InvalidArgumentError("assemble_model: eta must be positive");
    if (!(k_hat > 0.0)) throw InvalidArgumentError("assemble_model: K_hat must be positive");
    const double head_mass = k0_minus / k_hat;
    if (head_mass > 1.0 || head_mass < 0.0)
        throw ModelMismatchError("assemble_model: inconsistent masses, head_mass outside [0, 1]");
    breakpoints.validate();

    std::vector<ParetoSegment> segs;
    std::int64_t lo = b0;
    for (std::size_t i = 0; i < breakpoints.shapes.size(); ++i) {
        ParetoSegment seg;
        seg.lo = lo;
        seg.shape = breakpoints.shapes[i];
        if (i < breakpoints.breaks.size()) {
            const std::int64_t hi =
                static_cast<std::int64_t>(std::llround(static_cast<double>(breakpoints.breaks[i]) / p));
            if (hi <= lo)
                throw ModelMismatchError("assemble_model: rescaled breakpoint collapses below b0");
            seg.hi = static_cast<double>(hi);
            lo = hi;
        } else {
            seg.hi = kInf;
        }
        segs.push_back(seg);
    }
    return FlowSizeModel(r_hat, b0, head_mass, std::move(segs));
}

namespace {

// Tail contribution to W_1, W_2 from the fitted tail segments: K0+ weighted
// mixture terms over the recovered original-domain tail pmf.
std::pair<double, double> fitted_tail_terms(const BreakpointSet& bps, std::int64_t b0, double p,
                                            double k0_plus, std::int64_t cap) {
    std::vector<double> ccdf_bounds;  // per-segment ccdf chaining, starts at 1
    std::vector<std::pair<double, double>> seg;  // (lo, shape) in original domain
    double mass = 1.0;
    std::int64_t lo = b0;
    for (std::size_t i = 0; i < bps.shapes.size(); ++i) {
        seg.emplace_back(static_cast<double>(lo), bps.shapes[i]);
        ccdf_bounds.push_back(mass);
        if (i < bps.breaks.size()) {
            const std::int64_t hi =
                static_cast<std::int64_t>(std::llround(static_cast<double>(bps.breaks[i]) / p));
            mass *= std::pow(static_cast<double>(lo) / static_cast<double>(hi), bps.shapes[i]);
            lo = hi;
        }
    }
    auto tail_ccdf = [&](double x) {
        for (std::size_t i = seg.size(); i-- > 0;) {
            if (x >= seg[i].first)
                return ccdf_bounds[i] * std::pow(seg[i].first / x, seg[i].second);
        }
        return 1.0;
    };

    double t1 = 0.0;
    double t2 = 0.0;
    double norm = 0.0;
    double cur = 1.0;
    for (std::int64_t ell = b0; ell <= cap; ++ell) {
        const double next = tail_ccdf(static_cast<double>(ell) + 1.0);
        const double w = std::max(cur - next, 0.0);
        cur = next;
        norm += w;
        const double lam = p * static_cast<double>(ell);
        const double e1 = std::log(lam) - lam;
        if (e1 > -745.0) {
            const double pois1 = std::exp(e1);
            t1 += w * pois1;
            t2 += w * pois1 * lam * 0.5;
        }
    }
    norm += cur;  // truncated-away tail barely samples into j = 1, 2
    if (norm <= 0.0) return {0.0, 0.0};
    return {k0_plus * t1 / norm, k0_plus * t2 / norm};
}

}  // namespace

InversionReport invert_histogram(const FlowHistogram& sampled_hist,
                                 const InvertOptions& options) {
    InversionReport report;
    report.k = options.k;
    report.p = 1.0 / static_cast<double>(options.k);
    report.k_s = sampled_hist.total_flows;
    report.tail_correction = options.tail_correction;

    std::string stage = "validate";
    try {
        if (options.k < 1) throw InvalidArgumentError("invert: k must be >= 1");
        if (sampled_hist.total_flows < 1)
            throw InvalidArgumentError("invert: empty sampled histogram");
        const double p = report.p;
        const std::int64_t k_s = sampled_hist.total_flows;

        stage = "histogram_ccdf";
        const auto ccdf = histogram_ccdf(sampled_hist);

        stage = "detect_breakpoints";
        DetectOptions detect_opts = options.detect;
        if (detect_opts.total_flows == 0) detect_opts.total_flows = k_s;
        DetectResult det = detect_breakpoints(ccdf, detect_opts);
        report.fit_sse = det.fit_sse;
        report.detect_cap = det.cap;
        report.breakpoints = det.breakpoints;

        stage = "fit_pareto_shape";
        {
            std::int64_t lo = det.breakpoints.j0;
            for (std::size_t i = 0; i < det.breakpoints.shapes.size(); ++i) {
                const double hi = i < det.breakpoints.breaks.size()
                                      ? static_cast<double>(det.breakpoints.breaks[i])
                                      : kInf;
                report.breakpoints.shapes[i] = fit_pareto_shape(sampled_hist, lo, hi);
                if (i < det.breakpoints.breaks.size()) lo = det.breakpoints.breaks[i];
            }
        }

        stage = "estimate_eta";
        const std::int64_t j1 = !report.breakpoints.breaks.empty()
                                    ? report.breakpoints.breaks.front()
                                    : support_percentile(ccdf, 0.99);
        const EtaEstimate eta = estimate_eta(ccdf, report.breakpoints.shapes.front(), options.b0,
                                             p, report.breakpoints.j0, j1);
        report.eta = eta.eta;
        report.eta_spread = eta.spread;

        stage = "estimate_k0_plus";
        report.k0_plus = estimate_k0_plus(eta.eta, k_s);

        stage = "solve_head";
        const double w1 = static_cast<double>(sampled_hist.count_at(1));
        const double w2 = static_cast<double>(sampled_hist.count_at(2));
        std::optional<std::pair<double, double>> tail;
        if (options.tail_correction == TailCorrection::kFitted) {
            tail = fitted_tail_terms(report.breakpoints, options.b0, p,
                                     static_cast<double>(report.k0_plus),
                                     options.tail_support_cap);
        }
        const HeadSolution head = solve_head(w1, w2, k_s, p, tail);
        report.r_hat = head.r_hat;
        report.k0_minus_real = head.k0_minus;
        report.head_residuals[0] = head.residual1;
        report.head_residuals[1] = head.residual2;

        stage = "estimate_counts";
        const CountsEstimate counts =
            estimate_counts(static_cast<double>(report.k0_plus), head.k0_minus, k_s);
        report.k_hat_real = counts.k_hat;
        report.nu_exceeds_one = counts.nu_exceeds_one;
        report.k0_minus = std::llround(head.k0_minus);
        report.k_hat = report.k0_plus + report.k0_minus;
        report.nu_hat = static_cast<double>(k_s) / static_cast<double>(report.k_hat);

        stage = "assemble_model";
        report.recovered = assemble_model(head.r_hat, options.b0, eta.eta, head.k0_minus,
                                          counts.k_hat, report.breakpoints, p);

        // The alternative tail-correction mode, for sensitivity reporting.
        stage = "alternative_mode";
        try {
            std::optional<std::pair<double, double>> alt_tail;
            if (options.tail_correction == TailCorrection::kOff) {
                alt_tail = fitted_tail_terms(report.breakpoints, options.b0, p,
                                             static_cast<double>(report.k0_plus),
                                             options.tail_support_cap);
            }
            const HeadSolution alt = solve_head(w1, w2, k_s, p, alt_tail);
            const CountsEstimate alt_counts =
                estimate_counts(static_cast<double>(report.k0_plus), alt.k0_minus, k_s);
            report.alt_r_hat = alt.r_hat;
            report.alt_k0_minus = alt.k0_minus;
            report.alt_k_hat = alt_counts.k_hat;
            report.alt_nu_hat = alt_counts.nu_hat;
        } catch (const std::exception& e) {
            report.alt_error = e.what();
        }
    } catch (const std::exception& e) {
        report.failed_stage = stage;
        report.failure = e.what();
    }
    return report;
}

std::string InversionReport::to_json() const {
    nlohmann::json j;
    j["schema"] = schema;
    j["k"] = k;
    j["p"] = p;
    j["Ks"] = k_s;
    j["j0"] = breakpoints.j0;
    j["breaks"] = breakpoints.breaks;
    j["shapes"] = breakpoints.shapes;
    j["eta"] = eta;
    j["r_hat"] = r_hat;
    j["K0_plus"] = k0_plus;
    j["K0_minus"] = k0_minus;
    j["K_hat"] = k_hat;
    j["nu_hat"] = nu_hat;
    j["nu_exceeds_one"] = nu_exceeds_one;
    j["tail_correction"] = tail_correction == TailCorrection::kFitted ? "fitted" : "off";
    nlohmann::json diag;
    diag["eta_spread"] = eta_spread;
    diag["head_residuals"] = {head_residuals[0], head_residuals[1]};
    diag["fit_sse"] = fit_sse;
    diag["detect_cap"] = detect_cap;
    diag["K0_minus_real"] = k0_minus_real;
    diag["K_hat_real"] = k_hat_real;
    if (alt_r_hat) {
        diag["alt_r_hat"] = *alt_r_hat;
        diag["alt_K0_minus"] = *alt_k0_minus;
        diag["alt_K_hat"] = *alt_k_hat;
        diag["alt_nu_hat"] = *alt_nu_hat;
    }
    if (!alt_error.empty()) diag["alt_error"] = alt_error;
    j["diagnostics"] = diag;
    if (recovered) j["recovered_model"] = nlohmann::json::parse(recovered->to_json());
    if (!run_id.empty()) j["run_id"] = run_id;
    if (!failed_stage.empty()) {
        j["failed_stage"] = failed_stage;
        j["failure"] = failure;
    }
    return j.dump(2);
}

}  // namespace flowinvert
