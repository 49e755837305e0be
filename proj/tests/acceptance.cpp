// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each check pins its tolerance in code; diagnostic lines
// are labeled as such and do not affect the verdict.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "flowinvert/flow_aggregate.hpp"
#include "flowinvert/flow_model.hpp"
#include "flowinvert/inversion.hpp"
#include "flowinvert/poisson_forward.hpp"
#include "flowinvert/trace_synth.hpp"
#include "test_helpers.hpp"

using namespace flowinvert;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& what) {
    std::printf("%s  [%d] %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void diagnostic(int id, const std::string& what) {
    std::printf("note  [%d] %s\n", id, what.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Paper arithmetic goldens.
void criterion_1() {
    const std::int64_t k0p = estimate_k0_plus(0.3, 1'120'546);
    const CountsEstimate counts = estimate_counts(static_cast<double>(k0p), 20.1e6, 1'120'546);
    const bool ok_k0p = (k0p == 336'163);
    const bool ok_k = std::fabs(counts.k_hat - 20.4e6) <= 5e4;
    const bool ok_nu = std::fabs(counts.nu_hat - 0.054) <= 0.001;
    report(1, ok_k0p && ok_k && ok_nu,
           fmt("arithmetic goldens: K0+=%lld (want 336163), K=%.4g (want 20.4e6), "
               "nu=%.4f (want 0.054+-0.001)",
               static_cast<long long>(k0p), counts.k_hat, counts.nu_hat));
}

// ---------------------------------------------------------------------------
// 2. Tail-rescaling accuracy of the forward map for a pure Pareto(1.81).
void criterion_2() {
    const FlowSizeModel model = pure_pareto_model(1, 1.81);
    const DiscretePmf v_pmf = model.to_pmf(2'000'000);
    const double p = 0.01;
    const std::int64_t j_max = 150;
    const MixtureResult mix = mixture_q(v_pmf, p, j_max);
    const double nu = 1.0 - mix.probs.at(0);

    double below = mix.probs.at(0);
    double worst = 0.0;
    std::int64_t worst_j = 0;
    std::int64_t ok_from = -1;
    for (std::int64_t j = 1; j <= j_max; ++j) {
        const double lhs = 1.0 - below;  // nu * P(vt >= j)
        below += mix.probs.at(j);
        if (j < 3) continue;
        const double rhs = model.ccdf(100 * j);
        const double err = std::fabs(lhs / rhs - 1.0);
        if (err > worst) {
            worst = err;
            worst_j = j;
        }
        if (err <= 0.10 && ok_from < 0) ok_from = j;
        if (err > 0.10) ok_from = -1;
    }
    const bool pass = worst <= 0.10;
    report(2, pass,
           fmt("pure Pareto(1.81) rescaling, p=1/100: max_{j>=3}|nu P(vt>=j)/P(v>=j/p)-1| "
               "= %.4f at j=%lld (required <= 0.10)",
               worst, static_cast<long long>(worst_j)));
    if (!pass) {
        diagnostic(2, fmt("the 10%% band is reached only from j >= %lld; the identity "
                          "ratio(j) = j^a Gamma(j-a)/Gamma(j) makes ratio(3) = 3.28 for "
                          "a = 1.81, so the stated j0 = 3 bound is unattainable",
                          static_cast<long long>(ok_from)));
    }
}

// ---------------------------------------------------------------------------
// 3. Le Cam bound on a small deterministic-sampling instance.
void criterion_3() {
    const std::vector<std::int64_t> sizes(10, 50);
    const std::int64_t total = 500;
    const double p = 0.1;
    const int reps = 100'000;
    const std::size_t k_flows = sizes.size();

    std::vector<std::vector<double>> law(k_flows, std::vector<double>(51, 0.0));
    for (int rep = 0; rep < reps; ++rep) {
        const PacketStream s =
            interleave(sizes, InterleaveMode::kShuffle, 1'000'000 + static_cast<std::uint64_t>(rep));
        std::vector<std::int64_t> counts(k_flows, 0);
        for (std::uint32_t f : deterministic_sample(s, SamplingConfig{10, 0, 0})) ++counts[f];
        for (std::size_t f = 0; f < k_flows; ++f) {
            law[f][static_cast<std::size_t>(counts[f])] += 1.0 / reps;
        }
    }

    // Q for this instance: every flow has 50 packets, so the mixture is
    // Poisson(5) exactly.
    DiscretePmf empirical_sizes = point_mass(50);
    const MixtureResult q = mixture_q(empirical_sizes, p, 50);

    // Monte Carlo error of an empirical TV estimate at this sample size.
    double mc_err = 0.0;
    for (std::int64_t j = 0; j <= 50; ++j) {
        const double qj = q.probs.at(j);
        mc_err += 0.5 * std::sqrt(qj * (1.0 - qj) / reps);
    }

    const double bound = lecam_flow_bound(50, total, p);
    double worst = 0.0;
    for (std::size_t f = 0; f < k_flows; ++f) {
        DiscretePmf emp;
        emp.support_start = 0;
        emp.probs = law[f];
        emp.tail_mass = 0.0;
        worst = std::max(worst, tv_distance(emp, q.probs));
    }
    const bool pass = worst <= bound + 3.0 * mc_err;
    report(3, pass,
           fmt("Le Cam small instance: max per-flow TV = %.4f <= bound %.3f + 3*MC %.4f",
               worst, bound, 3.0 * mc_err));
    diagnostic(3, fmt("aggregate bound p*sum v^2/V = %.3f",
                      lecam_bound(sizes, total, p)));
}

// ---------------------------------------------------------------------------
// 4. Closed forms vs brute-force summation across randomized (r, p).
void criterion_4() {
    Rng rng(424242);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const double r = 0.05 + 0.94 * rng.uniform();
        const double p = 0.001 + 0.999 * rng.uniform();
        for (std::int64_t j = 0; j <= 2; ++j) {
            const double closed = geom_poisson_sum(r, p, j);
            const double direct = testutil::geom_poisson_direct(r, p, j);
            if (direct > 0.0) worst = std::max(worst, std::fabs(closed - direct) / direct);
        }
    }
    report(4, worst <= 1e-10,
           fmt("closed form vs direct summation over 100 random (r, p): max rel err = %.2e "
               "(required <= 1e-10)",
               worst));
}

// ---------------------------------------------------------------------------
// 5. Head-solver noise-free round trip.
void criterion_5() {
    const double p = 0.01;
    const double r = 0.7 * std::exp(p);
    const double k0m = 1e6;
    const double w1 = k0m * geom_poisson_sum(r, p, 1);
    const double w2 = k0m * geom_poisson_sum(r, p, 2);
    const HeadSolution sol = solve_head(w1, w2, 2'000'000, p);
    const double err_r = std::fabs(sol.r_hat - r) / r;
    const double err_k = std::fabs(sol.k0_minus - k0m) / k0m;
    report(5, err_r <= 1e-9 && err_k <= 1e-9,
           fmt("head round trip: rel err r = %.2e, K0- = %.2e (required <= 1e-9)", err_r, err_k));
}

// ---------------------------------------------------------------------------
// 6. End-to-end synthetic recovery.
void criterion_6() {
    const double hm = 0.93;
    const std::int64_t knee = 3000;
    const FlowSizeModel model = testutil::paper_model(hm, knee);
    const std::int64_t flows = 500'000;
    const auto sizes = model.draw(flows, 20260810);

    std::int64_t true_k0p = 0;
    for (std::int64_t v : sizes) {
        if (v >= 20) ++true_k0p;
    }
    const PacketStream stream = interleave(sizes, InterleaveMode::kShuffle, 20260811);
    const auto picked = deterministic_sample(stream, SamplingConfig{100, 0, 0});
    const FlowHistogram hist = aggregate_ids(picked);

    InvertOptions opt;
    opt.k = 100;
    const InversionReport rep = invert_histogram(hist, opt);
    if (!rep.failed_stage.empty()) {
        report(6, false, "end-to-end inversion failed at stage " + rep.failed_stage + ": " +
                             rep.failure);
        return;
    }

    const double nu_meas = static_cast<double>(hist.total_flows) / static_cast<double>(flows);
    const double a1 = rep.breakpoints.shapes.front();
    const double a2 = rep.breakpoints.shapes.back();
    const bool ok_a1 = std::fabs(a1 - 0.52) <= 0.10;
    const bool ok_a2 = rep.breakpoints.shapes.size() >= 2 && std::fabs(a2 - 1.81) <= 0.15;
    const bool ok_r = rep.r_hat >= 0.65 && rep.r_hat <= 0.90;
    const double k_err = std::fabs(rep.k_hat_real - static_cast<double>(flows)) /
                         static_cast<double>(flows);
    const bool ok_k = k_err <= 0.10;
    const double nu_err = std::fabs(rep.nu_hat - nu_meas) / nu_meas;
    const bool ok_nu = nu_err <= 0.15;

    report(6, ok_a1 && ok_a2 && ok_r && ok_k && ok_nu,
           fmt("end-to-end: a1=%.3f (want 0.52+-0.10 %s), a2=%.3f (want 1.81+-0.15 %s), "
               "r=%.3f (want [0.65,0.90] %s), K err=%.1f%% (want <=10%% %s), "
               "nu err=%.1f%% (want <=15%% %s)",
               a1, ok_a1 ? "ok" : "MISS", a2, ok_a2 ? "ok" : "MISS", rep.r_hat,
               ok_r ? "ok" : "MISS", 100.0 * k_err, ok_k ? "ok" : "MISS", 100.0 * nu_err,
               ok_nu ? "ok" : "MISS"));
    diagnostic(6, fmt("run detail: Ks=%lld nu_meas=%.4f j0=%lld m=%d breaks[0]=%lld "
                      "eta=%.3f K0+=%lld (true %lld) K=%lld nu_hat=%.4f",
                      static_cast<long long>(rep.k_s), nu_meas,
                      static_cast<long long>(rep.breakpoints.j0),
                      rep.breakpoints.segment_count(),
                      static_cast<long long>(rep.breakpoints.breaks.empty()
                                                 ? 0
                                                 : rep.breakpoints.breaks.front()),
                      rep.eta, static_cast<long long>(rep.k0_plus),
                      static_cast<long long>(true_k0p), static_cast<long long>(rep.k_hat),
                      rep.nu_hat));
    if (rep.alt_r_hat) {
        diagnostic(6, fmt("tail-corrected alternative: r=%.3f K0-=%.0f K=%.0f nu=%.4f",
                          *rep.alt_r_hat, *rep.alt_k0_minus, *rep.alt_k_hat, *rep.alt_nu_hat));
    } else if (!rep.alt_error.empty()) {
        diagnostic(6, "tail-corrected alternative infeasible: " + rep.alt_error);
    }
}

// ---------------------------------------------------------------------------
// 7. Hill-estimator consistency on exact Pareto samples.
void criterion_7() {
    Rng rng(7321);
    bool all_ok = true;
    std::string detail;
    for (double a : {0.52, 1.81}) {
        for (std::int64_t n : {1000, 10000, 100000}) {
            std::vector<double> xs;
            xs.reserve(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) {
                xs.push_back(30.0 * std::pow(rng.uniform_open(), -1.0 / a));
            }
            const double a_hat = hill_estimate(xs, 30.0);
            const double tol = 3.0 * a / std::sqrt(static_cast<double>(n));
            const bool ok = std::fabs(a_hat - a) <= tol;
            all_ok = all_ok && ok;
            detail += fmt("(a=%.2f n=%lld: %.4f%s) ", a, static_cast<long long>(n), a_hat,
                          ok ? "" : " MISS");
        }
    }
    report(7, all_ok, "Hill consistency |a_hat - a| <= 3a/sqrt(n): " + detail);
}

// ---------------------------------------------------------------------------
// 8. Deterministic sampling over shuffles matches Bernoulli thinning.
void criterion_8() {
    std::vector<std::int64_t> sizes;
    sizes.insert(sizes.end(), 10, 80);
    sizes.insert(sizes.end(), 10, 120);
    const int reps = 10'000;
    const std::size_t k_flows = sizes.size();
    std::vector<std::vector<double>> det(k_flows, std::vector<double>(64, 0.0));
    std::vector<std::vector<double>> thin(k_flows, std::vector<double>(64, 0.0));
    for (int rep = 0; rep < reps; ++rep) {
        const PacketStream s =
            interleave(sizes, InterleaveMode::kShuffle, 3'000'000 + static_cast<std::uint64_t>(rep));
        std::vector<std::int64_t> counts(k_flows, 0);
        for (std::uint32_t f : deterministic_sample(s, SamplingConfig{10, 0, 0})) ++counts[f];
        for (std::size_t f = 0; f < k_flows; ++f) {
            det[f][static_cast<std::size_t>(std::min<std::int64_t>(counts[f], 63))] += 1.0 / reps;
        }
        const auto kept = bernoulli_thin(sizes, 0.1, 7'000'000 + static_cast<std::uint64_t>(rep));
        for (std::size_t f = 0; f < k_flows; ++f) {
            thin[f][static_cast<std::size_t>(std::min<std::int64_t>(kept[f], 63))] += 1.0 / reps;
        }
    }
    double worst = 0.0;
    for (std::size_t f = 0; f < k_flows; ++f) {
        DiscretePmf a;
        a.support_start = 0;
        a.probs = det[f];
        a.tail_mass = 0.0;
        DiscretePmf b;
        b.support_start = 0;
        b.probs = thin[f];
        b.tail_mass = 0.0;
        worst = std::max(worst, tv_distance(a, b));
    }
    report(8, worst <= 0.05,
           fmt("sampler equivalence on K=20, N=2000, k=10: max per-flow TV = %.4f "
               "(required <= 0.05)",
               worst));
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    if (g_failures == 0) {
        std::printf("acceptance: all 8 criteria passed\n");
    } else {
        std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    }
    return g_failures == 0 ? 0 : 1;
}
