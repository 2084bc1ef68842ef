#include "ocp/forecasters.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace ocp {

namespace {

constexpr double kRidgeJitter = 1e-8;

double dot_or_zero(std::span<const double> coef, std::span<const double> x) {
    if (coef.size() != x.size()) {
        throw std::invalid_argument("feature dimension does not match fitted coefficients");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < coef.size(); ++i) acc += coef[i] * x[i];
    return acc;
}

// LLT solve of (A + jitter*I) beta = b. Empty result on numerical failure.
std::vector<double> solve_spd(Eigen::MatrixXd A, const Eigen::VectorXd& b) {
    A.diagonal().array() += kRidgeJitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) return {};
    Eigen::VectorXd beta = llt.solve(b);
    return {beta.data(), beta.data() + beta.size()};
}

}  // namespace

double LinearModel::predict(std::span<const double> x) const {
    if (!fitted) return 0.0;
    return dot_or_zero(coefficients, x);
}

double WeightedLinearModel::predict(std::span<const double> x) const {
    if (!fitted) return 0.0;
    return dot_or_zero(coefficients, x);
}

std::vector<double> solve_least_squares(std::span<const Sample> history,
                                        std::span<const double> weights) {
    if (history.empty()) return {};
    if (!weights.empty() && weights.size() != history.size()) {
        throw std::invalid_argument("weights must match history length");
    }
    const std::size_t d = history.front().x.size();
    if (d == 0 || history.size() < d) return {};

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd moment = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd row(d);
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& s = history[i];
        if (s.x.size() != d) throw std::invalid_argument("ragged history rows");
        for (std::size_t j = 0; j < d; ++j) row(j) = s.x[j];
        const double w = weights.empty() ? 1.0 : weights[i];
        gram.noalias() += w * row * row.transpose();
        moment.noalias() += (w * s.y) * row;
    }
    return solve_spd(std::move(gram), moment);
}

LinearModel ols_fit(std::span<const Sample> history) {
    LinearModel model;
    model.coefficients = solve_least_squares(history, {});
    model.fitted = !model.coefficients.empty();
    return model;
}

WeightedLinearModel wls_fit(std::span<const Sample> history, double decay) {
    if (!(decay > 0.0 && decay < 1.0)) {
        throw std::invalid_argument("wls decay must lie in (0,1)");
    }
    WeightedLinearModel model;
    model.decay = decay;
    const std::size_t t = history.size();
    std::vector<double> weights(t);
    for (std::size_t i = 0; i < t; ++i) {
        // w_i = decay^(t+1-i) with i counted from 1.
        weights[i] = std::pow(decay, static_cast<double>(t - i));
    }
    model.coefficients = solve_least_squares(history, weights);
    model.fitted = !model.coefficients.empty();
    return model;
}

ARModel ar_fit(std::span<const double> series, int order) {
    if (order < 1) throw std::invalid_argument("ar order must be >= 1");
    const std::size_t p = static_cast<std::size_t>(order);
    if (series.size() < p + 2) {
        throw std::invalid_argument("ar_fit: series too short for requested order");
    }
    const std::size_t rows = series.size() - p;
    const std::size_t d = p + 1;  // intercept + p lags

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd moment = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd row(d);
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t t = p + i;
        row(0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) row(1 + j) = series[t - 1 - j];
        gram.noalias() += row * row.transpose();
        moment.noalias() += series[t] * row;
    }
    std::vector<double> coef = solve_spd(std::move(gram), moment);

    ARModel model;
    model.order = order;
    if (!coef.empty()) {
        model.intercept = coef[0];
        model.phi.assign(coef.begin() + 1, coef.end());
        model.fitted = true;
    }
    return model;
}

std::vector<double> ar_forecast(const ARModel& model, std::span<const double> recent, int horizon) {
    if (!model.fitted) throw std::invalid_argument("ar_forecast: model is not fitted");
    const std::size_t p = static_cast<std::size_t>(model.order);
    if (recent.size() != p) throw std::invalid_argument("ar_forecast: need exactly p recent values");
    if (horizon < 1) throw std::invalid_argument("ar_forecast: horizon must be >= 1");

    std::vector<double> buffer(recent.begin(), recent.end());
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (int k = 0; k < horizon; ++k) {
        double v = model.intercept;
        for (std::size_t j = 0; j < p; ++j) v += model.phi[j] * buffer[buffer.size() - 1 - j];
        out.push_back(v);
        buffer.push_back(v);
    }
    return out;
}

double persistence_forecast(std::span<const double> history) {
    return history.empty() ? 0.0 : history.back();
}

double PersistenceForecaster::predict(std::span<const double>) {
    return has_last_ ? last_ : 0.0;
}

void PersistenceForecaster::observe(std::span<const double>, double y) {
    last_ = y;
    has_last_ = true;
}

RecursiveLeastSquaresForecaster::RecursiveLeastSquaresForecaster(std::size_t dim, double decay,
                                                                 int refit_cadence)
    : dim_(dim), decay_(decay), refit_cadence_(refit_cadence), gram_(dim * dim, 0.0),
      moment_(dim, 0.0) {
    if (dim == 0) throw std::invalid_argument("feature dimension must be positive");
    if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay must lie in (0,1]");
    if (refit_cadence < 1) throw std::invalid_argument("refit cadence must be >= 1");
}

double RecursiveLeastSquaresForecaster::predict(std::span<const double> x) {
    if (x.size() != dim_) throw std::invalid_argument("feature dimension mismatch");
    if (rows_ < dim_) return 0.0;  // warm-up rule
    if (coefficients_.empty() || since_refit_ >= refit_cadence_) {
        Eigen::Map<const Eigen::MatrixXd> gram(gram_.data(), dim_, dim_);
        Eigen::Map<const Eigen::VectorXd> moment(moment_.data(), dim_);
        coefficients_ = solve_spd(gram, moment);
        since_refit_ = 0;
    }
    if (coefficients_.empty()) return 0.0;
    return dot_or_zero(coefficients_, x);
}

void RecursiveLeastSquaresForecaster::observe(std::span<const double> x, double y) {
    if (x.size() != dim_) throw std::invalid_argument("feature dimension mismatch");
    Eigen::Map<Eigen::MatrixXd> gram(gram_.data(), dim_, dim_);
    Eigen::Map<Eigen::VectorXd> moment(moment_.data(), dim_);
    Eigen::Map<const Eigen::VectorXd> row(x.data(), dim_);
    gram.noalias() += row * row.transpose();
    moment.noalias() += y * row;
    if (decay_ != 1.0) {
        gram *= decay_;
        moment *= decay_;
    }
    ++rows_;
    ++since_refit_;
}

ArForecaster::ArForecaster(int order, int refit_cadence) : order_(order), refit_cadence_(refit_cadence) {
    if (order < 1) throw std::invalid_argument("ar order must be >= 1");
    if (refit_cadence < 1) throw std::invalid_argument("refit cadence must be >= 1");
    model_.order = order;
    model_.refit_cadence = refit_cadence;
}

std::string ArForecaster::name() const { return "ar" + std::to_string(order_); }

void ArForecaster::maybe_refit() {
    if (series_.size() < static_cast<std::size_t>(order_) + 2) return;
    if (model_.fitted && since_refit_ < refit_cadence_) return;
    const int cadence = refit_cadence_;
    model_ = ar_fit(series_, order_);
    model_.refit_cadence = cadence;
    since_refit_ = 0;
}

double ArForecaster::predict(std::span<const double>) {
    return forecast_block(1).front();
}

std::vector<double> ArForecaster::forecast_block(int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    maybe_refit();
    if (!model_.fitted) {
        // persistence until a well-posed fit exists
        return std::vector<double>(static_cast<std::size_t>(horizon), persistence_forecast(series_));
    }
    std::span<const double> recent(series_.data() + series_.size() - order_,
                                   static_cast<std::size_t>(order_));
    return ar_forecast(model_, recent, horizon);
}

void ArForecaster::observe(std::span<const double>, double y) {
    series_.push_back(y);
    ++since_refit_;
}

std::unique_ptr<Forecaster> make_forecaster(const std::string& name, std::size_t dim,
                                            double wls_decay, int refit_cadence) {
    if (name == "persistence") return std::make_unique<PersistenceForecaster>();
    if (name == "ols") {
        return std::make_unique<RecursiveLeastSquaresForecaster>(dim, 1.0, refit_cadence);
    }
    if (name == "wls") {
        return std::make_unique<RecursiveLeastSquaresForecaster>(dim, wls_decay, refit_cadence);
    }
    if (name.rfind("ar", 0) == 0 && name.size() > 2) {
        const int order = std::stoi(name.substr(2));
        return std::make_unique<ArForecaster>(order, refit_cadence);
    }
    throw std::invalid_argument("unknown forecaster: " + name);
}

}  // namespace ocp
