#include "ocp/engine.hpp"

#include <cmath>

namespace ocp {

void StreamConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw std::invalid_argument("alpha must lie in (0, 1/2)");
    }
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (burn_in < 0) throw std::invalid_argument("burn-in must be >= 0");
}

ConformalStream::ConformalStream(double alpha, RadiusUpdater updater)
    : alpha_(alpha), updater_(std::move(updater)) {
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw std::invalid_argument("alpha must lie in (0, 1/2)");
    }
}

StepTrace ConformalStream::observe(double y_hat, double y) {
    if (faulted_) throw StreamFault(t_ + 1, "stream faulted earlier; step rejected");
    if (!std::isfinite(y) || !std::isfinite(y_hat)) {
        faulted_ = true;
        throw StreamFault(t_ + 1, "non-finite response or forecast");
    }

    StepTrace row;
    row.t = ++t_;
    row.y = y;
    row.y_hat = y_hat;
    row.radius = updater_.radius();
    row.score = std::abs(y - y_hat);
    row.covered = row.score <= row.radius;
    row.width = 2.0 * std::max(row.radius, 0.0);
    // Subgradient of the pinball loss at level beta = 1 - alpha, written in
    // the alpha parameterization so g is exactly alpha or alpha - 1.
    row.g = row.covered ? alpha_ : alpha_ - 1.0;

    updater_.step(row.g);
    row.wealth = updater_.wealth();

    // A state that overflowed would poison every later coverage flag.
    if (!std::isfinite(updater_.radius())) faulted_ = true;
    return row;
}

MultiHorizonStream::MultiHorizonStream(double alpha, const UpdaterSpec& spec, int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    streams_.reserve(static_cast<std::size_t>(horizon));
    for (int k = 0; k < horizon; ++k) streams_.emplace_back(alpha, make_updater(spec));
}

std::vector<StepTrace> MultiHorizonStream::observe_block(std::span<const double> forecasts,
                                                         std::span<const double> responses) {
    if (forecasts.size() != streams_.size() || responses.size() != streams_.size()) {
        throw std::invalid_argument("block length must equal the horizon");
    }
    std::vector<StepTrace> rows;
    rows.reserve(streams_.size());
    for (std::size_t k = 0; k < streams_.size(); ++k) {
        rows.push_back(streams_[k].observe(forecasts[k], responses[k]));
    }
    return rows;
}

std::vector<StepTrace> run_stream(const StreamConfig& config, Forecaster& forecaster,
                                  std::span<const Sample> data) {
    config.validate();
    ConformalStream stream(config.alpha, make_updater(config.updater));
    std::vector<StepTrace> trace;
    trace.reserve(data.size());
    for (const Sample& sample : data) {
        const double y_hat = forecaster.predict(sample.x);
        trace.push_back(stream.observe(y_hat, sample.y));
        forecaster.observe(sample.x, sample.y);
    }
    return trace;
}

std::vector<StepTrace> run_scores(const StreamConfig& config, std::span<const double> scores) {
    config.validate();
    ConformalStream stream(config.alpha, make_updater(config.updater));
    std::vector<StepTrace> trace;
    trace.reserve(scores.size());
    for (double s : scores) trace.push_back(stream.observe_score(s));
    return trace;
}

}  // namespace ocp
