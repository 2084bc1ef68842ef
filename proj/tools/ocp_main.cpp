// Command-line front end: synthetic changepoint experiments, CSV stream
// ingestion, and the KT invariant probe.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ocp/csv.hpp"
#include "ocp/engine.hpp"
#include "ocp/experiments.hpp"
#include "ocp/forecasters.hpp"
#include "ocp/pinball.hpp"
#include "ocp/updaters.hpp"

#ifndef OCP_VERSION
#define OCP_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace ocp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitProbeFailure = 3;

struct CommonFlags {
    double alpha = 0.1;
    int window = 100;
    int burn_in = 50;
    std::uint64_t seed = 0;
    std::string out_dir = "ocp_out";
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--alpha", flags.alpha, "Target miscoverage level in (0, 1/2)")
        ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(0.5, 0.0)))
        ->capture_default_str();
    cmd->add_option("--window", flags.window, "Rolling coverage window")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--burn-in", flags.burn_in, "Steps excluded from summary metrics")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--seed", flags.seed, "Base RNG seed")->capture_default_str();
    cmd->add_option("--out-dir", flags.out_dir, "Output directory")->capture_default_str();
}

std::vector<UpdaterSpec> expand_updaters(const std::vector<std::string>& names,
                                         const std::vector<double>& etas, double fixed_radius) {
    std::vector<UpdaterSpec> specs;
    for (const std::string& name : names) {
        const UpdaterKind kind = updater_kind_from_string(name);
        if (kind == UpdaterKind::ogd || kind == UpdaterKind::sfogd) {
            if (etas.empty()) {
                throw CLI::ValidationError("--updater " + name + " requires --eta");
            }
            for (double eta : etas) specs.push_back(UpdaterSpec{kind, eta, 0.0});
        } else if (kind == UpdaterKind::fixed) {
            specs.push_back(UpdaterSpec{kind, 0.0, fixed_radius});
        } else {
            specs.push_back(UpdaterSpec{kind, 0.0, 0.0});
        }
    }
    return specs;
}

std::span<const StepTrace> after_burn_in(const std::vector<StepTrace>& trace, int burn_in) {
    const std::size_t burn = std::min(static_cast<std::size_t>(burn_in),
                                      trace.empty() ? 0 : trace.size() - 1);
    return {trace.data() + burn, trace.size() - burn};
}

void write_metrics_csv(const fs::path& path, const std::vector<std::vector<StepTrace>>& per_step,
                       double alpha, int burn_in) {
    std::ofstream out(path);
    if (!out) throw CsvError(0, "cannot open " + path.string());
    out << "k,n,coverage,mean_width,best_fixed_radius,mean_regret\n";
    for (std::size_t k = 0; k < per_step.size(); ++k) {
        const auto scored = after_burn_in(per_step[k], burn_in);
        if (scored.empty()) continue;
        double covered = 0.0, width = 0.0, s_max = 0.0;
        for (const auto& row : scored) {
            covered += row.covered ? 1.0 : 0.0;
            width += row.width;
            s_max = std::max(s_max, row.score);
        }
        const auto grid = radius_grid(s_max > 0.0 ? 1.5 * s_max : 1.0, 1001);
        const RegretResult reg = regret(scored, grid, QuantileLevel(1.0 - alpha));
        out << (k + 1) << ',' << scored.size() << ','
            << format_double(covered / static_cast<double>(scored.size())) << ','
            << format_double(width / static_cast<double>(scored.size())) << ','
            << format_double(reg.best_fixed_radius) << ','
            << format_double(reg.curve.back() / static_cast<double>(scored.size())) << '\n';
    }
}

void write_rolling_csv(const fs::path& path, const std::vector<StepTrace>& trace, int window) {
    if (static_cast<int>(trace.size()) < window) return;
    const MetricsReport report = coverage_metrics(trace, window);
    std::ofstream out(path);
    if (!out) throw CsvError(0, "cannot open " + path.string());
    out << "t,rolling_coverage,rolling_mean_width,rolling_width_sd\n";
    const std::size_t w = static_cast<std::size_t>(window);
    for (std::size_t j = 0; j < report.rolling_coverage.size(); ++j) {
        out << (j + w) << ',' << format_double(report.rolling_coverage[j]) << ','
            << format_double(report.rolling_mean_width[j]) << ',';
        // width deviation uses its own window of 10
        if (j + w >= 10 && j + w - 10 < report.rolling_width_deviation.size()) {
            out << format_double(report.rolling_width_deviation[j + w - 10]);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------

int cmd_changepoint(const CommonFlags& flags, const std::vector<std::string>& updater_names,
                    const std::vector<double>& etas, double fixed_radius, int seeds,
                    const std::string& forecaster, double decay, bool no_traces) {
    ChangepointRunConfig config;
    config.alpha = flags.alpha;
    config.seeds = seeds;
    config.base_seed = flags.seed;
    config.burn_in = flags.burn_in;
    config.window = flags.window;
    config.forecaster = forecaster;
    config.wls_decay = decay;
    config.updaters = expand_updaters(updater_names, etas, fixed_radius);

    const fs::path out_dir(flags.out_dir);
    fs::create_directories(out_dir);
    const fs::path trace_dir = out_dir / "traces";
    if (!no_traces) fs::create_directories(trace_dir);

    TraceSink sink;
    if (!no_traces) {
        sink = [&](const std::string& label, int seed, const std::vector<StepTrace>& trace) {
            write_trace_csv(trace_dir / (label + "_seed" + std::to_string(seed) + ".csv"), trace);
        };
    }
    const auto aggregates = run_changepoint_experiment(config, sink);

    std::ofstream agg(out_dir / "aggregate.csv");
    if (!agg) throw CsvError(0, "cannot open aggregate.csv");
    agg << "updater,seeds,coverage,mean_width\n";
    for (const auto& a : aggregates) {
        agg << a.label << ',' << seeds << ',' << format_double(a.mean_coverage) << ','
            << format_double(a.mean_width) << '\n';
        std::cout << a.label << ": coverage=" << format_double(a.mean_coverage)
                  << " mean_width=" << format_double(a.mean_width) << '\n';
    }

    std::string labels;
    for (const auto& a : aggregates) labels += (labels.empty() ? "" : " ") + a.label;
    write_manifest(out_dir / "run_manifest.txt",
                   {{"command", "changepoint"},
                    {"version", OCP_VERSION},
                    {"alpha", format_double(flags.alpha)},
                    {"updaters", labels},
                    {"forecaster", forecaster},
                    {"wls_decay", format_double(decay)},
                    {"seeds", std::to_string(seeds)},
                    {"base_seed", std::to_string(flags.seed)},
                    {"window", std::to_string(flags.window)},
                    {"burn_in", std::to_string(flags.burn_in)},
                    {"traces", no_traces ? "none" : trace_dir.string()},
                    {"aggregate", (out_dir / "aggregate.csv").string()}});
    return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_run_csv(const CommonFlags& flags, const std::string& input, const std::string& updater_name,
                const std::vector<double>& etas, double fixed_radius, int horizon,
                const std::string& forecaster_name, double decay, int refit_cadence,
                bool scores_only) {
    const UpdaterSpec spec =
        expand_updaters({updater_name}, etas, fixed_radius).front();
    const InputStream stream = read_input_csv(input);

    if (scores_only != stream.scores_only) {
        throw CsvError(1, scores_only ? "--scores-only requires a 't,score' input"
                                      : "'t,score' input requires --scores-only");
    }

    const fs::path out_dir(flags.out_dir);
    fs::create_directories(out_dir);

    std::vector<std::vector<StepTrace>> per_step;
    std::int64_t dropped_tail = 0;

    if (scores_only) {
        StreamConfig config;
        config.alpha = flags.alpha;
        config.updater = spec;
        config.burn_in = flags.burn_in;
        per_step.push_back(run_scores(config, stream.scores));
    } else if (horizon == 1) {
        StreamConfig config;
        config.alpha = flags.alpha;
        config.updater = spec;
        config.burn_in = flags.burn_in;
        auto forecaster = make_forecaster(forecaster_name, stream.feature_dim, decay,
                                          refit_cadence > 0 ? refit_cadence : 1);
        if ((forecaster_name == "ols" || forecaster_name == "wls") && stream.feature_dim == 0) {
            throw CsvError(1, "forecaster '" + forecaster_name + "' needs feature columns x1,...,xd");
        }
        per_step.push_back(run_stream(config, *forecaster, stream.samples));
    } else {
        if (forecaster_name.rfind("ar", 0) != 0) {
            throw CsvError(1, "--horizon > 1 requires an autoregressive forecaster (ar<p>)");
        }
        const int order = std::stoi(forecaster_name.substr(2));
        ArForecaster forecaster(order, refit_cadence > 0 ? refit_cadence : horizon);
        MultiHorizonStream manager(flags.alpha, spec, horizon);
        per_step.assign(static_cast<std::size_t>(horizon), {});

        const std::int64_t blocks = static_cast<std::int64_t>(stream.samples.size()) / horizon;
        dropped_tail = static_cast<std::int64_t>(stream.samples.size()) - blocks * horizon;
        for (std::int64_t b = 0; b < blocks; ++b) {
            const std::vector<double> forecasts = forecaster.forecast_block(horizon);
            std::vector<double> responses(static_cast<std::size_t>(horizon));
            for (int k = 0; k < horizon; ++k) {
                responses[static_cast<std::size_t>(k)] =
                    stream.samples[static_cast<std::size_t>(b * horizon + k)].y;
            }
            const auto rows = manager.observe_block(forecasts, responses);
            for (int k = 0; k < horizon; ++k) per_step[static_cast<std::size_t>(k)].push_back(rows[static_cast<std::size_t>(k)]);
            for (double y : responses) forecaster.observe({}, y);
        }
    }

    std::vector<std::string> trace_files;
    if (per_step.size() == 1) {
        write_trace_csv(out_dir / "trace.csv", per_step[0]);
        write_rolling_csv(out_dir / "rolling.csv", per_step[0], flags.window);
        trace_files.push_back((out_dir / "trace.csv").string());
    } else {
        for (std::size_t k = 0; k < per_step.size(); ++k) {
            const std::string stem = "trace_k" + std::to_string(k + 1);
            write_trace_csv(out_dir / (stem + ".csv"), per_step[k]);
            write_rolling_csv(out_dir / ("rolling_k" + std::to_string(k + 1) + ".csv"), per_step[k],
                              flags.window);
            trace_files.push_back((out_dir / (stem + ".csv")).string());
        }
    }
    write_metrics_csv(out_dir / "metrics.csv", per_step, flags.alpha, flags.burn_in);

    for (std::size_t k = 0; k < per_step.size(); ++k) {
        const auto scored = after_burn_in(per_step[k], flags.burn_in);
        if (scored.empty()) continue;
        double covered = 0.0;
        for (const auto& row : scored) covered += row.covered ? 1.0 : 0.0;
        std::cout << "k=" << (k + 1) << " n=" << scored.size()
                  << " coverage=" << format_double(covered / static_cast<double>(scored.size()))
                  << '\n';
    }

    write_manifest(out_dir / "run_manifest.txt",
                   {{"command", "run-csv"},
                    {"version", OCP_VERSION},
                    {"input", input},
                    {"alpha", format_double(flags.alpha)},
                    {"updater", spec.label()},
                    {"forecaster", scores_only ? "none" : forecaster_name},
                    {"horizon", std::to_string(horizon)},
                    {"scores_only", scores_only ? "1" : "0"},
                    {"window", std::to_string(flags.window)},
                    {"burn_in", std::to_string(flags.burn_in)},
                    {"dropped_tail", std::to_string(dropped_tail)},
                    {"metrics", (out_dir / "metrics.csv").string()}});
    return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_probe(const CommonFlags& flags, double score_bound, std::int64_t steps,
              const std::string& adversary) {
    std::function<double(double)> source;
    if (adversary == "flipper") {
        source = flipper_adversary(score_bound);
    } else if (adversary == "random") {
        source = uniform_score_source(score_bound, flags.seed);
    } else if (adversary == "unbounded") {
        source = unbounded_adversary();
    } else {
        throw CLI::ValidationError("--adversary must be flipper, random or unbounded");
    }

    const fs::path out_dir(flags.out_dir);
    fs::create_directories(out_dir);
    std::ofstream steps_csv(out_dir / "probe_steps.csv");
    if (!steps_csv) throw CsvError(0, "cannot open probe_steps.csv");
    steps_csv << "t,score,radius,wealth,jump,min_wealth,max_abs_radius,max_jump,max_identity_error\n";

    double prev_radius = 0.0;
    const ProbeSink sink = [&](const ProbeStepRecord& rec) {
        steps_csv << rec.row.t << ',' << format_double(rec.row.score) << ','
                  << format_double(rec.row.radius) << ',' << format_double(*rec.row.wealth) << ','
                  << format_double(std::abs(rec.row.radius - prev_radius)) << ','
                  << format_double(rec.min_wealth) << ',' << format_double(rec.max_abs_radius)
                  << ',' << format_double(rec.max_consecutive_jump) << ','
                  << format_double(rec.max_identity_error) << '\n';
        prev_radius = rec.row.radius;
    };

    const bool bounded = adversary != "unbounded";
    const ProbeReport report = theorem_probe(flags.alpha, score_bound, steps, source, sink, bounded);

    const auto line = [bounded](const char* name, bool pass, std::int64_t count, bool needs_bound) {
        if (needs_bound && !bounded) {
            std::cout << "N/A  " << name << " (scores unbounded, theorem contract void)\n";
            return;
        }
        std::cout << (pass ? "PASS " : "FAIL ") << name;
        if (!pass) std::cout << " (" << count << " violations)";
        std::cout << '\n';
    };
    line("wealth_nonnegative", report.wealth_violations == 0, report.wealth_violations, false);
    line("consecutive_radius_bound_2D+1", report.consecutive_violations == 0,
         report.consecutive_violations, true);
    line("iterate_bound_3D+1", report.iterate_violations == 0, report.iterate_violations, true);
    line("overshoot_decay", report.overshoot_violations == 0, report.overshoot_violations, true);
    line("sign_recovery", report.sign_recovery_violations == 0, report.sign_recovery_violations,
         false);
    line("wealth_identity_1e-9", report.identity_violations == 0, report.identity_violations, true);
    if (report.first_violation_step >= 0) {
        std::cout << "first violation: " << report.first_violation_kind << " at step "
                  << report.first_violation_step << '\n';
    }
    std::cout << "steps_completed=" << report.steps_completed
              << " miss_frequency=" << format_double(report.miss_frequency)
              << " min_wealth=" << format_double(report.min_wealth)
              << " max_abs_radius=" << format_double(report.max_abs_radius)
              << " max_jump=" << format_double(report.max_consecutive_jump) << '\n';
    if (adversary == "unbounded") {
        std::cout << "status: miscoverage " << format_double(report.miss_frequency)
                  << " expected by necessity argument (scores unbounded, radii diverge"
                  << (report.truncated_by_fault ? ", run truncated at state overflow" : "") << ")\n";
    }

    write_manifest(out_dir / "run_manifest.txt",
                   {{"command", "probe"},
                    {"version", OCP_VERSION},
                    {"alpha", format_double(flags.alpha)},
                    {"d", format_double(score_bound)},
                    {"t", std::to_string(steps)},
                    {"adversary", adversary},
                    {"seed", std::to_string(flags.seed)},
                    {"steps_completed", std::to_string(report.steps_completed)},
                    {"miss_frequency", format_double(report.miss_frequency)},
                    {"all_pass", report.all_pass() ? "1" : "0"}});
    return report.all_pass() ? kExitOk : kExitProbeFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parameter-free online conformal prediction engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", OCP_VERSION);

    // changepoint
    CommonFlags cp_flags;
    std::vector<std::string> cp_updaters{"kt", "ons", "ogd", "sfogd"};
    std::vector<double> cp_etas;
    double cp_fixed_radius = 0.0;
    int cp_seeds = 200;
    std::string cp_forecaster = "ols";
    double cp_decay = 0.99;
    bool cp_no_traces = false;
    CLI::App* cp = app.add_subcommand("changepoint", "Synthetic changepoint comparison");
    add_common_flags(cp, cp_flags);
    cp->add_option("--updater", cp_updaters, "Updaters to compare")
        ->delimiter(',')
        ->capture_default_str();
    cp->add_option("--eta", cp_etas, "Learning rates for ogd/sfogd")->delimiter(',');
    cp->add_option("--fixed-radius", cp_fixed_radius, "Radius for the fixed baseline");
    cp->add_option("--seeds", cp_seeds, "Number of random seeds")->check(CLI::Range(1, 1000000000))
        ->capture_default_str();
    cp->add_option("--forecaster", cp_forecaster, "Point forecaster")
        ->check(CLI::IsMember({"ols", "wls"}))
        ->capture_default_str();
    cp->add_option("--decay", cp_decay, "WLS decay")->check(CLI::Range(1e-6, 1.0))
        ->capture_default_str();
    cp->add_flag("--no-traces", cp_no_traces, "Skip per-seed trace files");

    // run-csv
    CommonFlags rc_flags;
    std::string rc_input;
    std::string rc_updater = "kt";
    std::vector<double> rc_etas;
    double rc_fixed_radius = 0.0;
    int rc_horizon = 1;
    std::string rc_forecaster = "persistence";
    double rc_decay = 0.99;
    int rc_refit_cadence = 0;  // 0 = default (horizon)
    bool rc_scores_only = false;
    CLI::App* rc = app.add_subcommand("run-csv", "Run a conformal stream over a CSV input");
    add_common_flags(rc, rc_flags);
    rc->add_option("--input", rc_input, "Input CSV (t,y | t,y,x1..xd | t,score)")->required();
    rc->add_option("--updater", rc_updater, "Radius updater")
        ->check(CLI::IsMember({"kt", "ons", "ogd", "sfogd", "fixed"}))
        ->capture_default_str();
    rc->add_option("--eta", rc_etas, "Learning rate for ogd/sfogd")->delimiter(',');
    rc->add_option("--fixed-radius", rc_fixed_radius, "Radius for the fixed updater");
    rc->add_option("--horizon", rc_horizon, "Forecast horizon (one radius per step)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    rc->add_option("--forecaster", rc_forecaster, "persistence | ols | wls | ar<p>")
        ->capture_default_str();
    rc->add_option("--decay", rc_decay, "WLS decay")->check(CLI::Range(1e-6, 1.0));
    rc->add_option("--refit-cadence", rc_refit_cadence,
                   "Observations between AR refits (default: horizon)");
    rc->add_flag("--scores-only", rc_scores_only, "Consume precomputed scores (column 'score')");

    // probe
    CommonFlags pr_flags;
    double pr_d = 1.0;
    std::int64_t pr_t = 10000;
    std::string pr_adversary = "flipper";
    CLI::App* pr = app.add_subcommand("probe", "KT invariant probe");
    add_common_flags(pr, pr_flags);
    pr->add_option("--d", pr_d, "Score bound D")->check(CLI::PositiveNumber)->capture_default_str();
    pr->add_option("--t", pr_t, "Number of steps")->check(CLI::PositiveNumber)
        ->capture_default_str();
    pr->add_option("--adversary", pr_adversary, "flipper | random | unbounded")
        ->check(CLI::IsMember({"flipper", "random", "unbounded"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cp->parsed()) {
            return cmd_changepoint(cp_flags, cp_updaters, cp_etas, cp_fixed_radius, cp_seeds,
                                   cp_forecaster, cp_decay, cp_no_traces);
        }
        if (rc->parsed()) {
            return cmd_run_csv(rc_flags, rc_input, rc_updater, rc_etas, rc_fixed_radius, rc_horizon,
                               rc_forecaster, rc_decay, rc_refit_cadence, rc_scores_only);
        }
        if (pr->parsed()) {
            return cmd_probe(pr_flags, pr_d, pr_t, pr_adversary);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const CsvError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const StreamFault& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
