#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ocp {

// One row of supervised history: feature vector (may be empty) and response.
struct Sample {
    std::vector<double> x;
    double y = 0.0;
};

// Linear model fit by ordinary least squares. Prediction is defined only when
// fitted; before that the warm-up rule applies (forecast 0).
struct LinearModel {
    std::vector<double> coefficients;
    bool fitted = false;

    double predict(std::span<const double> x) const;
};

// Linear model fit by geometrically weighted least squares with weights
// w_i = decay^(t+1-i), so the most recent row carries the largest weight.
struct WeightedLinearModel {
    std::vector<double> coefficients;
    double decay = 0.99;
    bool fitted = false;

    double predict(std::span<const double> x) const;
};

// Autoregressive model of order p with intercept. phi[0] multiplies the most
// recent lag. Multi-step forecasts plug previously forecast values in as lags.
struct ARModel {
    int order = 0;
    std::vector<double> phi;
    double intercept = 0.0;
    int refit_cadence = 1;
    bool fitted = false;
};

// Solves the (possibly weighted) normal equations with a ridge jitter of 1e-8
// on the diagonal. weights empty means unweighted. Returns an empty vector
// when there are fewer rows than columns.
std::vector<double> solve_least_squares(std::span<const Sample> history,
                                        std::span<const double> weights);

// Unweighted least squares. A history with fewer rows than features yields an
// unfitted model; the caller falls back to the warm-up prediction rule.
LinearModel ols_fit(std::span<const Sample> history);

// Weighted least squares with w_i = decay^(t+1-i). decay must lie in (0,1).
WeightedLinearModel wls_fit(std::span<const Sample> history, double decay = 0.99);

// Least squares on the lag matrix (y_{t-1},...,y_{t-p}) -> y_t, intercept
// included. Requires series length >= p + 2.
ARModel ar_fit(std::span<const double> series, int order);

// Recursive plug-in forecasts for `horizon` steps. `recent` holds the last
// p observed values in chronological order (recent.back() is the newest).
std::vector<double> ar_forecast(const ARModel& model, std::span<const double> recent, int horizon);

// Last observed response; 0 when no observation has been seen yet.
double persistence_forecast(std::span<const double> history);

// Streaming fit/predict abstraction used by the online conformal loop.
// predict() is called before the true response is revealed; observe() after.
class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual double predict(std::span<const double> x) = 0;
    virtual void observe(std::span<const double> x, double y) = 0;
    virtual std::string name() const = 0;
};

class PersistenceForecaster final : public Forecaster {
public:
    double predict(std::span<const double> x) override;
    void observe(std::span<const double> x, double y) override;
    std::string name() const override { return "persistence"; }

private:
    bool has_last_ = false;
    double last_ = 0.0;
};

// Incrementally maintained Gram system matching the batch normal equations.
// decay = 1 gives plain OLS; decay in (0,1) gives the geometric weighting
// w_i = decay^(t+1-i). Coefficients are re-solved every refit_cadence
// observations (default: every observation).
class RecursiveLeastSquaresForecaster final : public Forecaster {
public:
    RecursiveLeastSquaresForecaster(std::size_t dim, double decay = 1.0, int refit_cadence = 1);
    double predict(std::span<const double> x) override;
    void observe(std::span<const double> x, double y) override;
    std::string name() const override { return decay_ == 1.0 ? "ols" : "wls"; }

private:
    std::size_t dim_;
    double decay_;
    int refit_cadence_;
    int since_refit_ = 0;
    std::size_t rows_ = 0;
    std::vector<double> gram_;  // dim x dim, row-major
    std::vector<double> moment_;
    std::vector<double> coefficients_;
};

// AR(p) forecaster over the response series. Ignores features. Falls back to
// persistence until the series is long enough to fit; refits every
// `refit_cadence` observations afterwards.
class ArForecaster final : public Forecaster {
public:
    ArForecaster(int order, int refit_cadence = 1);
    double predict(std::span<const double> x) override;
    void observe(std::span<const double> x, double y) override;
    std::string name() const override;

    // Block forecast for multi-horizon use: H forecasts before any of the H
    // responses is revealed.
    std::vector<double> forecast_block(int horizon);

private:
    void maybe_refit();

    int order_;
    int refit_cadence_;
    int since_refit_ = 0;
    std::vector<double> series_;
    ARModel model_;
};

std::unique_ptr<Forecaster> make_forecaster(const std::string& name, std::size_t dim,
                                            double wls_decay, int refit_cadence);

}  // namespace ocp
