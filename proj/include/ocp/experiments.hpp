#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ocp/engine.hpp"
#include "ocp/forecasters.hpp"
#include "ocp/pinball.hpp"

namespace ocp {

// ---------------------------------------------------------------------------
// Synthetic changepoint data: y = x' beta_segment + noise, x ~ N(0, I_4).
// ---------------------------------------------------------------------------

inline constexpr std::size_t kChangepointDim = 4;

struct ChangepointSegment {
    int length = 0;
    std::array<double, kChangepointDim> beta{};
};

struct ChangepointSpec {
    std::vector<ChangepointSegment> segments = {
        {500, {2.0, 1.0, 0.0, 0.0}},
        {1000, {0.0, -2.0, -1.0, 0.0}},
        {500, {0.0, 0.0, 2.0, 1.0}},
    };
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;
};

// Pure function of (spec, seed). Segment k draws from a generator seeded with
// split_seed(spec.seed, k), so segment streams are independent and the split
// is reproducible across runs and seed aggregations.
std::vector<Sample> generate_changepoint(const ChangepointSpec& spec);

// SplitMix64 finalizer used to derive per-segment (and per-stream) seeds.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MetricsReport {
    double empirical_coverage = 0.0;
    double mean_width = 0.0;
    std::vector<double> rolling_coverage;        // trailing window, length T-w+1
    std::vector<double> rolling_mean_width;      // same window
    std::vector<double> rolling_width_deviation; // window 10 unless overridden
    std::vector<double> regret_curve;            // length T (filled by regret())
    double best_fixed_radius = 0.0;
};

// Coverage and width parts of the report. Throws when the trace is empty or
// the window exceeds its length. Burn-in is applied by slicing the trace
// before calling (trace.subspan(burn_in)).
MetricsReport coverage_metrics(std::span<const StepTrace> trace, int window);

// Trailing-window sample standard deviation of the interval widths.
std::vector<double> width_deviation(std::span<const StepTrace> trace, int window = 10);

struct RegretResult {
    std::vector<double> curve;  // R_t against the best fixed radius, t = 1..T
    double best_fixed_radius = 0.0;
};

// Cumulative pinball regret against the best fixed radius on the grid.
// Ties break toward the smaller candidate.
RegretResult regret(std::span<const StepTrace> trace, std::span<const double> grid,
                    QuantileLevel level);

// Uniform grid of `points` candidates over [0, s_max].
std::vector<double> radius_grid(double s_max, int points = 1001);

// ---------------------------------------------------------------------------
// Theorem probe: runs the KT conformal loop against a score source and checks
// the wealth/iterate bounds from the coverage proof.
// ---------------------------------------------------------------------------

struct ProbeReport {
    std::int64_t steps_completed = 0;
    std::int64_t steps_requested = 0;
    double score_bound = 0.0;
    double alpha = 0.0;

    std::int64_t wealth_violations = 0;       // W_t >= 0
    std::int64_t consecutive_violations = 0;  // |s_{t+1} - s_t| <= 2D + 1
    std::int64_t iterate_violations = 0;      // |s_t| <= 3D + 1
    std::int64_t overshoot_violations = 0;    // s_t > D implies s_{t+1} < s_t
    std::int64_t sign_recovery_violations = 0;
    std::int64_t identity_violations = 0;     // W_t = 1 - sum g_i s_i within 1e-9

    std::int64_t first_violation_step = -1;
    std::string first_violation_kind;

    double min_wealth = 0.0;
    double max_abs_radius = 0.0;
    double max_consecutive_jump = 0.0;
    double max_identity_error = 0.0;
    double miss_frequency = 0.0;
    bool truncated_by_fault = false;  // stream refused a step (overflowed state)

    bool all_pass() const {
        return wealth_violations + consecutive_violations + iterate_violations +
                   overshoot_violations + sign_recovery_violations + identity_violations ==
               0;
    }
};

// Per-step sink for the probe (optional): receives the trace row plus the
// running extrema after that step.
struct ProbeStepRecord {
    StepTrace row;
    double min_wealth;
    double max_abs_radius;
    double max_consecutive_jump;
    double max_identity_error;
};
using ProbeSink = std::function<void(const ProbeStepRecord&)>;

// score_source receives the radius about to be used and must return the next
// nonconformity score. Scores are expected in [0, D]; sources may violate
// that on purpose (the necessity adversary does), in which case pass
// assume_bounded = false to turn off the checks that only hold under the
// bounded contract (the D-dependent bounds and the absolute wealth identity).
// Wealth nonnegativity and sign recovery are assumption-free and stay on.
ProbeReport theorem_probe(double alpha, double score_bound_d, std::int64_t steps,
                          const std::function<double(double)>& score_source,
                          const ProbeSink& sink = nullptr, bool assume_bounded = true);

// Canned adversaries for the probe.
std::function<double(double)> flipper_adversary(double score_bound_d);
std::function<double(double)> uniform_score_source(double score_bound_d, std::uint64_t seed);
std::function<double(double)> unbounded_adversary();

// ---------------------------------------------------------------------------
// Changepoint experiment harness (the quantitative comparison at alpha = 0.1).
// ---------------------------------------------------------------------------

struct ChangepointRunConfig {
    double alpha = 0.1;
    int seeds = 200;
    std::uint64_t base_seed = 0;
    int burn_in = 50;
    int window = 100;
    std::string forecaster = "ols";  // "ols" or "wls"
    double wls_decay = 0.99;
    std::vector<UpdaterSpec> updaters;
    ChangepointSpec data;
};

struct UpdaterAggregate {
    UpdaterSpec spec;
    std::string label;
    double mean_coverage = 0.0;  // mean over seeds of per-seed empirical coverage
    double mean_width = 0.0;
    std::vector<double> per_seed_coverage;
    std::vector<double> per_seed_width;
};

// Per-seed trace sink for CSV output: (updater label, seed index, trace).
using TraceSink = std::function<void(const std::string&, int, const std::vector<StepTrace>&)>;

// Runs every updater over the same per-seed forecast stream; the forecaster
// never sees the intervals, so the forecast pass is shared.
std::vector<UpdaterAggregate> run_changepoint_experiment(const ChangepointRunConfig& config,
                                                         const TraceSink& sink = nullptr);

}  // namespace ocp
