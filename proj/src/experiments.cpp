#include "ocp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ocp {

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
    // SplitMix64 finalizer over seed advanced by the stream index.
    std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<Sample> generate_changepoint(const ChangepointSpec& spec) {
    if (spec.segments.empty()) throw std::invalid_argument("changepoint spec needs segments");
    std::vector<Sample> data;
    for (std::size_t k = 0; k < spec.segments.size(); ++k) {
        const auto& seg = spec.segments[k];
        if (seg.length <= 0) throw std::invalid_argument("segment length must be positive");
        std::mt19937_64 rng(split_seed(spec.seed, k));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < seg.length; ++i) {
            Sample s;
            s.x.resize(kChangepointDim);
            double mean = 0.0;
            for (std::size_t j = 0; j < kChangepointDim; ++j) {
                s.x[j] = gauss(rng);
                mean += seg.beta[j] * s.x[j];
            }
            s.y = mean + spec.noise_sigma * gauss(rng);
            data.push_back(std::move(s));
        }
    }
    return data;
}

MetricsReport coverage_metrics(std::span<const StepTrace> trace, int window) {
    const std::int64_t n = static_cast<std::int64_t>(trace.size());
    if (n == 0) throw std::invalid_argument("coverage_metrics: empty trace");
    if (window < 1 || window > n) throw std::invalid_argument("coverage_metrics: bad window");

    MetricsReport report;
    double covered = 0.0, width_sum = 0.0;
    for (const auto& row : trace) {
        covered += row.covered ? 1.0 : 0.0;
        width_sum += row.width;
    }
    report.empirical_coverage = covered / static_cast<double>(n);
    report.mean_width = width_sum / static_cast<double>(n);

    const std::size_t w = static_cast<std::size_t>(window);
    report.rolling_coverage.reserve(trace.size() - w + 1);
    report.rolling_mean_width.reserve(trace.size() - w + 1);
    double cov_win = 0.0, width_win = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        cov_win += trace[i].covered ? 1.0 : 0.0;
        width_win += trace[i].width;
        if (i + 1 >= w) {
            report.rolling_coverage.push_back(cov_win / static_cast<double>(w));
            report.rolling_mean_width.push_back(width_win / static_cast<double>(w));
            cov_win -= trace[i + 1 - w].covered ? 1.0 : 0.0;
            width_win -= trace[i + 1 - w].width;
        }
    }
    if (n >= 10) report.rolling_width_deviation = width_deviation(trace, 10);
    return report;
}

std::vector<double> width_deviation(std::span<const StepTrace> trace, int window) {
    const std::int64_t n = static_cast<std::int64_t>(trace.size());
    if (window < 2 || window > n) throw std::invalid_argument("width_deviation: bad window");
    const std::size_t w = static_cast<std::size_t>(window);

    std::vector<double> out;
    out.reserve(trace.size() - w + 1);
    for (std::size_t i = 0; i + w <= trace.size(); ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < w; ++j) mean += trace[i + j].width;
        mean /= static_cast<double>(w);
        double ss = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
            const double d = trace[i + j].width - mean;
            ss += d * d;
        }
        out.push_back(std::sqrt(ss / static_cast<double>(w - 1)));
    }
    return out;
}

std::vector<double> radius_grid(double s_max, int points) {
    if (points < 2) throw std::invalid_argument("radius_grid: need at least 2 points");
    if (!(s_max >= 0.0)) throw std::invalid_argument("radius_grid: s_max must be >= 0");
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        grid[static_cast<std::size_t>(i)] = s_max * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return grid;
}

RegretResult regret(std::span<const StepTrace> trace, std::span<const double> grid,
                    QuantileLevel level) {
    if (grid.empty()) throw std::invalid_argument("regret: empty candidate grid");

    RegretResult result;
    double best_total = std::numeric_limits<double>::infinity();
    for (double candidate : grid) {
        double total = 0.0;
        for (const auto& row : trace) total += pinball_loss(candidate, row.score, level);
        if (total < best_total) {
            best_total = total;
            result.best_fixed_radius = candidate;
        }
    }

    result.curve.reserve(trace.size());
    double running = 0.0;
    for (const auto& row : trace) {
        running += pinball_loss(row.radius, row.score, level) -
                   pinball_loss(result.best_fixed_radius, row.score, level);
        result.curve.push_back(running);
    }
    return result;
}

ProbeReport theorem_probe(double alpha, double score_bound_d, std::int64_t steps,
                          const std::function<double(double)>& score_source,
                          const ProbeSink& sink, bool assume_bounded) {
    if (!(score_bound_d > 0.0)) throw std::invalid_argument("theorem_probe: D must be > 0");
    if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("theorem_probe: alpha must lie in (0, 1/2)");

    const double d = score_bound_d;
    const double consecutive_bound = 2.0 * d + 1.0;
    const double iterate_bound = 3.0 * d + 1.0;
    constexpr double kIdentityTol = 1e-9;

    ConformalStream stream(alpha, RadiusUpdater::kt());
    ProbeReport report;
    report.steps_requested = steps;
    report.score_bound = d;
    report.alpha = alpha;
    report.min_wealth = std::numeric_limits<double>::infinity();

    // Kahan-compensated oracle for sum g_i * s_i in the wealth identity.
    double gs_sum = 0.0, gs_comp = 0.0;
    std::int64_t misses = 0;
    double prev_radius = 0.0, prev_prev_radius = 0.0;

    auto record_violation = [&](std::int64_t step, const char* kind, std::int64_t& counter) {
        ++counter;
        if (report.first_violation_step < 0) {
            report.first_violation_step = step;
            report.first_violation_kind = kind;
        }
    };

    for (std::int64_t i = 0; i < steps; ++i) {
        StepTrace row;
        try {
            const double score = score_source(stream.radius());
            row = stream.observe_score(score);
        } catch (const StreamFault&) {
            report.truncated_by_fault = true;
            break;
        }
        ++report.steps_completed;
        if (!row.covered) ++misses;

        const double wealth = row.wealth.value();
        const double next_radius = stream.radius();
        const double jump = std::abs(next_radius - row.radius);

        const double term = row.g * row.radius - gs_comp;
        const double sum_try = gs_sum + term;
        gs_comp = (sum_try - gs_sum) - term;
        gs_sum = sum_try;
        const double identity_error = std::abs(wealth - (1.0 - gs_sum));

        report.min_wealth = std::min(report.min_wealth, wealth);
        report.max_abs_radius = std::max(report.max_abs_radius, std::abs(row.radius));
        report.max_consecutive_jump = std::max(report.max_consecutive_jump, jump);
        report.max_identity_error = std::max(report.max_identity_error, identity_error);

        if (wealth < 0.0) record_violation(row.t, "wealth", report.wealth_violations);
        if (assume_bounded) {
            if (jump > consecutive_bound) {
                record_violation(row.t, "consecutive", report.consecutive_violations);
            }
            if (std::abs(row.radius) > iterate_bound) {
                record_violation(row.t, "iterate", report.iterate_violations);
            }
            if (row.radius > d && !(next_radius < row.radius)) {
                record_violation(row.t, "overshoot", report.overshoot_violations);
            }
            if (identity_error > kIdentityTol) {
                record_violation(row.t, "identity", report.identity_violations);
            }
        }
        // Sign recovery looks at a radius triple (s_i, s_{i+1}, s_{i+2}).
        if (row.t >= 3 && prev_prev_radius >= 0.0 && prev_radius < 0.0 && !(row.radius > 0.0)) {
            record_violation(row.t, "sign_recovery", report.sign_recovery_violations);
        }
        prev_prev_radius = prev_radius;
        prev_radius = row.radius;

        if (sink) {
            sink(ProbeStepRecord{row, report.min_wealth, report.max_abs_radius,
                                 report.max_consecutive_jump, report.max_identity_error});
        }
    }

    if (report.steps_completed > 0) {
        report.miss_frequency =
            static_cast<double>(misses) / static_cast<double>(report.steps_completed);
    }
    if (report.min_wealth == std::numeric_limits<double>::infinity()) report.min_wealth = 0.0;
    return report;
}

std::function<double(double)> flipper_adversary(double score_bound_d) {
    const double d = score_bound_d;
    return [d](double radius) { return radius >= d / 2.0 ? d : 0.0; };
}

std::function<double(double)> uniform_score_source(double score_bound_d, std::uint64_t seed) {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    std::uniform_real_distribution<double> dist(0.0, score_bound_d);
    return [rng, dist](double) mutable { return dist(*rng); };
}

std::function<double(double)> unbounded_adversary() {
    // Score s_t + 1, kept strictly above the radius even once the radius is so
    // large that adding 1 would round back down to it.
    return [](double radius) {
        return std::max(radius + 1.0,
                        std::nextafter(radius, std::numeric_limits<double>::infinity()));
    };
}

std::vector<UpdaterAggregate> run_changepoint_experiment(const ChangepointRunConfig& config,
                                                         const TraceSink& sink) {
    if (config.seeds < 1) throw std::invalid_argument("changepoint experiment needs seeds >= 1");
    if (config.burn_in < 0) throw std::invalid_argument("burn-in must be >= 0");
    if (config.updaters.empty()) throw std::invalid_argument("changepoint experiment needs updaters");
    if (config.forecaster != "ols" && config.forecaster != "wls") {
        throw std::invalid_argument("changepoint forecaster must be ols or wls");
    }

    std::vector<UpdaterAggregate> aggregates;
    aggregates.reserve(config.updaters.size());
    for (const auto& spec : config.updaters) {
        make_updater(spec);  // validate parameters up front
        UpdaterAggregate agg;
        agg.spec = spec;
        agg.label = spec.label();
        aggregates.push_back(std::move(agg));
    }

    for (int seed_idx = 0; seed_idx < config.seeds; ++seed_idx) {
        ChangepointSpec data_spec = config.data;
        data_spec.seed = config.base_seed + static_cast<std::uint64_t>(seed_idx);
        const std::vector<Sample> data = generate_changepoint(data_spec);

        // The forecaster never sees the intervals, so one forecast pass per
        // seed serves every updater.
        const double decay = config.forecaster == "ols" ? 1.0 : config.wls_decay;
        RecursiveLeastSquaresForecaster forecaster(kChangepointDim, decay);
        std::vector<double> forecasts(data.size());
        for (std::size_t t = 0; t < data.size(); ++t) {
            forecasts[t] = forecaster.predict(data[t].x);
            forecaster.observe(data[t].x, data[t].y);
        }

        for (auto& agg : aggregates) {
            ConformalStream stream(config.alpha, make_updater(agg.spec));
            std::vector<StepTrace> trace;
            trace.reserve(data.size());
            for (std::size_t t = 0; t < data.size(); ++t) {
                trace.push_back(stream.observe(forecasts[t], data[t].y));
            }
            const std::size_t burn = std::min<std::size_t>(static_cast<std::size_t>(config.burn_in),
                                                           trace.size() > 0 ? trace.size() - 1 : 0);
            std::span<const StepTrace> scored(trace.data() + burn, trace.size() - burn);
            double covered = 0.0, width_sum = 0.0;
            for (const auto& row : scored) {
                covered += row.covered ? 1.0 : 0.0;
                width_sum += row.width;
            }
            agg.per_seed_coverage.push_back(covered / static_cast<double>(scored.size()));
            agg.per_seed_width.push_back(width_sum / static_cast<double>(scored.size()));
            if (sink) sink(agg.label, seed_idx, trace);
        }
    }

    for (auto& agg : aggregates) {
        double cov = 0.0, width = 0.0;
        for (double c : agg.per_seed_coverage) cov += c;
        for (double w : agg.per_seed_width) width += w;
        agg.mean_coverage = cov / static_cast<double>(agg.per_seed_coverage.size());
        agg.mean_width = width / static_cast<double>(agg.per_seed_width.size());
    }
    return aggregates;
}

}  // namespace ocp
