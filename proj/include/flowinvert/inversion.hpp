#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flowinvert/flow_aggregate.hpp"
#include "flowinvert/flow_model.hpp"

namespace flowinvert {

// Piecewise-Pareto description of the sampled ccdf: segments start at j0 and
// break at breaks[0] < breaks[1] < ...; shapes[l] is segment l's exponent.
struct BreakpointSet {
    std::int64_t j0 = 0;
    std::vector<std::int64_t> breaks;
    std::vector<double> shapes;

    int segment_count() const { return static_cast<int>(shapes.size()); }
    void validate() const;
};

struct DetectOptions {
    int m = 0;                          // 0 = auto, up to max_segments
    int max_segments = 3;
    std::int64_t j_min = 3;
    double residual_threshold = 0.05;   // log-ccdf units, for the j0 scan
    double cap_percentile = 0.999;      // breakpoint search upper bound
    int min_points_per_segment = 3;
    double auto_improvement = 0.25;     // accept m+1 if SSE shrinks below this factor
    std::int64_t total_flows = 0;       // optional: enables a 3-sigma noise floor
};

struct DetectResult {
    BreakpointSet breakpoints;
    double fit_sse = 0.0;
    std::int64_t cap = 0;               // last sampled size used in the search
};

// Segmented least squares on (log j, log ccdf(j)) with exhaustive breakpoint
// search; slopes become initial shape estimates. j0 is the smallest j from
// which the first segment's fit residuals stay below the threshold.
DetectResult detect_breakpoints(const std::map<std::int64_t, double>& sampled_ccdf,
                                const DetectOptions& options);

// Conditional MLE for a continuous Pareto truncated to [j_lo, j_hi), applied
// to weighted samples: Hill estimator for j_hi = inf, root finding otherwise.
// Throws ModelMismatchError on degenerate data (all mass at j_lo, or no root).
double pareto_shape_mle(std::span<const std::pair<double, std::int64_t>> weighted_sizes,
                        double j_lo, double j_hi);
// Unweighted continuous samples, unbounded above (plain Hill).
double hill_estimate(std::span<const double> sizes, double x_min);
// Histogram-weighted form over flows with size in [j_lo, j_hi); requires at
// least 10 flows in range.
double fit_pareto_shape(const FlowHistogram& sampled_hist, std::int64_t j_lo, double j_hi);

// Original-domain tail estimate on the grid {j/p}: pairs (j/p, nu * P(vt >= j)).
std::vector<std::pair<double, double>> rescale_tail(
    const std::map<std::int64_t, double>& sampled_ccdf, double p, double nu);

struct EtaEstimate {
    double eta = 0.0;
    double spread = 0.0;                // max |eta_j - mean| / mean
    std::vector<double> per_j;
};

// eta_j = P(vt >= j) / (b0 p / j)^a1 averaged over j in [j0, j1].
EtaEstimate estimate_eta(const std::map<std::int64_t, double>& sampled_ccdf, double a1,
                         std::int64_t b0, double p, std::int64_t j0, std::int64_t j1);

// K0+ = floor(eta * Ks).
std::int64_t estimate_k0_plus(double eta, std::int64_t k_s);

struct HeadSolution {
    double r_hat = 0.0;
    double k0_minus = 0.0;              // real-valued; rounded only in reports
    double q = 0.0;
    double residual1 = 0.0;             // W_j - (K0- S_j + T_j), j = 1, 2
    double residual2 = 0.0;
};

// Solves W_j = K0- S_j(r, p) + T_j for j = 1, 2. tail_terms (T_1, T_2)
// defaults to (0, 0). Throws ModelMismatchError when the ratio is infeasible.
HeadSolution solve_head(double w1, double w2, std::int64_t k_s, double p,
                        std::optional<std::pair<double, double>> tail_terms = std::nullopt);

struct CountsEstimate {
    double k_hat = 0.0;
    double nu_hat = 0.0;
    bool nu_exceeds_one = false;        // flagged, never silently clamped
};

CountsEstimate estimate_counts(double k0_plus, double k0_minus, std::int64_t k_s);

// Builds the recovered original-domain model: geometric head (r_hat, b0,
// head_mass = K0-/K) plus the sampled-domain segments rescaled by 1/p.
FlowSizeModel assemble_model(double r_hat, std::int64_t b0, double eta, double k0_minus,
                             double k_hat, const BreakpointSet& breakpoints, double p);

enum class TailCorrection { kOff, kFitted };

struct InvertOptions {
    std::int64_t k = 100;
    std::int64_t b0 = 20;
    DetectOptions detect;
    TailCorrection tail_correction = TailCorrection::kOff;
    std::int64_t tail_support_cap = 3'000'000;  // enumeration cap for fitted T_j
};

struct InversionReport {
    int schema = 1;
    std::int64_t k = 0;
    double p = 0.0;
    std::int64_t k_s = 0;
    BreakpointSet breakpoints;
    double eta = 0.0;
    std::int64_t k0_plus = 0;
    std::int64_t k0_minus = 0;
    std::int64_t k_hat = 0;
    double r_hat = 0.0;
    double nu_hat = 0.0;
    bool nu_exceeds_one = false;
    TailCorrection tail_correction = TailCorrection::kOff;
    std::optional<FlowSizeModel> recovered;
    // Diagnostics
    double eta_spread = 0.0;
    double head_residuals[2] = {0.0, 0.0};
    double fit_sse = 0.0;
    std::int64_t detect_cap = 0;
    double k0_minus_real = 0.0;
    double k_hat_real = 0.0;
    // Estimates under the alternative tail-correction mode, when feasible.
    std::optional<double> alt_r_hat;
    std::optional<double> alt_k0_minus;
    std::optional<double> alt_k_hat;
    std::optional<double> alt_nu_hat;
    std::string alt_error;
    // Failure marker for partial reports.
    std::string failed_stage;
    std::string failure;
    std::string run_id;

    std::string to_json() const;
};

// Full estimation pipeline over a sampled histogram. Estimator failures are
// reported through the failed_stage/failure fields of the (partial) report.
InversionReport invert_histogram(const FlowHistogram& sampled_hist,
                                 const InvertOptions& options);

}  // namespace flowinvert
