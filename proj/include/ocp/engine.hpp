#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ocp/forecasters.hpp"
#include "ocp/updaters.hpp"

namespace ocp {

// Thrown when a stream refuses a step: either inputs were non-finite or the
// stream already faulted earlier. Coverage accounting never skips steps.
class StreamFault : public std::runtime_error {
public:
    StreamFault(std::int64_t step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
    std::int64_t step() const { return step_; }

private:
    std::int64_t step_;
};

struct StreamConfig {
    double alpha = 0.1;  // target miscoverage, must lie in (0, 1/2)
    UpdaterSpec updater;
    int horizon = 1;
    int burn_in = 50;
    std::uint64_t seed = 0;

    void validate() const;
};

// Symmetric interval [center - radius, center + radius]. A negative radius
// marks an empty interval; its reported width clamps to zero.
struct PredictionInterval {
    double center = 0.0;
    double radius = 0.0;
    double lower = 0.0;
    double upper = 0.0;

    bool empty() const { return radius < 0.0; }
};

inline PredictionInterval make_interval(double center, double radius) {
    return PredictionInterval{center, radius, center - radius, center + radius};
}

// One row per time step of the online loop.
struct StepTrace {
    std::int64_t t = 0;  // 1-based
    double y = 0.0;
    double y_hat = 0.0;
    double score = 0.0;
    double radius = 0.0;
    bool covered = false;
    double width = 0.0;  // 2 * max(radius, 0)
    double g = 0.0;      // alpha on coverage, alpha - 1 on a miss
    std::optional<double> wealth;
};

// The online loop: emit the interval from the current radius, observe the
// response, score it, feed the subgradient to the updater. The updater only
// ever sees subgradients, so scores may also be supplied directly.
class ConformalStream {
public:
    ConformalStream(double alpha, RadiusUpdater updater);

    // Interval that would be emitted for the upcoming response.
    PredictionInterval upcoming_interval(double y_hat) const {
        return make_interval(y_hat, updater_.radius());
    }

    StepTrace observe(double y_hat, double y);
    // Score-only ingestion: equivalent to observe(0, score) for scores >= 0.
    StepTrace observe_score(double score) { return observe(0.0, score); }

    double alpha() const { return alpha_; }
    double radius() const { return updater_.radius(); }
    std::optional<double> wealth() const { return updater_.wealth(); }
    std::int64_t steps() const { return t_; }
    bool faulted() const { return faulted_; }

private:
    double alpha_;
    RadiusUpdater updater_;
    std::int64_t t_ = 0;
    bool faulted_ = false;
};

// One independently updated radius per forecast step ahead.
class MultiHorizonStream {
public:
    MultiHorizonStream(double alpha, const UpdaterSpec& spec, int horizon);

    // Forecasts must be produced before any of the responses is revealed.
    // Each of the horizon updaters advances exactly once per block.
    std::vector<StepTrace> observe_block(std::span<const double> forecasts,
                                         std::span<const double> responses);

    int horizon() const { return static_cast<int>(streams_.size()); }
    const ConformalStream& stream(int k) const { return streams_.at(static_cast<std::size_t>(k)); }

private:
    std::vector<ConformalStream> streams_;
};

// Batch driver: predict, observe, update, refit, over a whole data source.
// Deterministic given the config and data. Step errors carry the offending
// index via StreamFault.
std::vector<StepTrace> run_stream(const StreamConfig& config, Forecaster& forecaster,
                                  std::span<const Sample> data);

// Score-only batch driver (the forecaster is bypassed).
std::vector<StepTrace> run_scores(const StreamConfig& config, std::span<const double> scores);

}  // namespace ocp
