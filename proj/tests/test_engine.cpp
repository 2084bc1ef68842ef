#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "ocp/engine.hpp"
#include "ocp/experiments.hpp"
#include "ocp/pinball.hpp"

using namespace ocp;

TEST_CASE("stream config validation") {
    StreamConfig config;
    CHECK_NOTHROW(config.validate());
    config.alpha = 0.5;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.alpha = 0.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.alpha = 0.1;
    config.horizon = 0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("first kt step on a miss matches the hand example") {
    ConformalStream stream(0.1, RadiusUpdater::kt());
    const PredictionInterval interval = stream.upcoming_interval(2.0);
    CHECK(interval.lower == 2.0);
    CHECK(interval.upper == 2.0);

    const StepTrace row = stream.observe(2.0, 5.0);
    CHECK(row.t == 1);
    CHECK(row.score == 3.0);
    CHECK_FALSE(row.covered);
    CHECK(row.g == -0.9);
    CHECK(row.wealth.value() == 1.0);
    CHECK(stream.radius() == 0.45);  // 0.45 * W_1
}

TEST_CASE("coverage equals the score-radius comparison exactly") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    ConformalStream stream(0.2, RadiusUpdater::kt());
    for (int i = 0; i < 3000; ++i) {
        const double y_hat = unif(rng);
        const double y = unif(rng);
        const double radius = stream.radius();
        const StepTrace row = stream.observe(y_hat, y);
        const bool inside = y >= y_hat - radius && y <= y_hat + radius;
        CHECK(row.covered == inside);
        CHECK(row.covered == (row.score <= row.radius));
        CHECK((row.g == 0.2 || row.g == 0.2 - 1.0));
        CHECK(row.width == 2.0 * std::max(row.radius, 0.0));
    }
}

TEST_CASE("alpha-form subgradients agree with the pinball kernel at beta = 1 - alpha") {
    // The engine writes g as alpha / alpha - 1 so the exact-value invariant
    // holds; the pinball module evaluates 1{S <= s} - beta with beta stored
    // as 1 - alpha. The two parameterizations agree to rounding.
    for (double alpha : {0.05, 0.1, 0.2, 0.33}) {
        const ocp::QuantileLevel level(1.0 - alpha);
        const double covered_gap = std::abs(ocp::pinball_subgradient(1.0, 0.5, level) - alpha);
        const double miss_gap = std::abs(ocp::pinball_subgradient(0.5, 1.0, level) - (alpha - 1.0));
        CHECK(covered_gap <= 1e-15);
        CHECK(miss_gap <= 1e-15);
    }
}

TEST_CASE("constant stream under persistence covers from the second step on") {
    PersistenceForecaster forecaster;
    StreamConfig config;
    config.alpha = 0.1;
    config.updater = UpdaterSpec{UpdaterKind::kt, 0.0, 0.0};
    std::vector<Sample> data(200, Sample{{}, 5.0});
    const auto trace = run_stream(config, forecaster, data);
    REQUIRE(trace.size() == 200);
    CHECK_FALSE(trace[0].covered);  // first forecast is 0, score 5
    bool saw_negative = false, recovered = false;
    for (std::size_t t = 1; t < trace.size(); ++t) {
        CHECK(trace[t].score == 0.0);
        // A zero score misses only when the radius has drifted negative.
        CHECK(trace[t].covered == (trace[t].radius >= 0.0));
        if (trace[t].covered) CHECK(trace[t].g == 0.1);
        if (trace[t].radius < 0.0) saw_negative = true;
        if (saw_negative && trace[t].radius > 0.0) recovered = true;
    }
    CHECK(saw_negative);
    CHECK(recovered);
}

TEST_CASE("trace miss frequency approaches alpha on uniform scores") {
    double total = 0.0;
    const int seeds = 50;
    for (int seed = 0; seed < seeds; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        ConformalStream stream(0.1, RadiusUpdater::kt());
        int misses = 0;
        for (int t = 0; t < 1000; ++t) {
            if (!stream.observe_score(unif(rng)).covered) ++misses;
        }
        total += misses / 1000.0;
    }
    CHECK(std::abs(total / seeds - 0.1) < 0.05);
}

TEST_CASE("replaying the traced subgradients reproduces the radii bitwise") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (UpdaterKind kind : {UpdaterKind::kt, UpdaterKind::ons, UpdaterKind::ogd, UpdaterKind::sfogd}) {
        const UpdaterSpec spec{kind, 0.5, 0.0};
        ConformalStream stream(0.1, make_updater(spec));
        std::vector<StepTrace> trace;
        for (int t = 0; t < 500; ++t) trace.push_back(stream.observe_score(unif(rng)));

        RadiusUpdater replay = make_updater(spec);
        for (const auto& row : trace) {
            CHECK(replay.radius() == row.radius);
            replay.step(row.g);
        }
    }
}

TEST_CASE("non-finite input faults the stream and later steps are rejected") {
    ConformalStream stream(0.1, RadiusUpdater::kt());
    stream.observe(0.0, 1.0);
    CHECK_THROWS_AS(stream.observe(0.0, std::nan("")), StreamFault);
    CHECK(stream.faulted());
    CHECK_THROWS_AS(stream.observe(0.0, 1.0), StreamFault);
    CHECK(stream.steps() == 1);

    ConformalStream other(0.1, RadiusUpdater::kt());
    CHECK_THROWS_AS(other.observe(std::numeric_limits<double>::infinity(), 1.0), StreamFault);
}

TEST_CASE("negative radii mark empty intervals with zero width") {
    ConformalStream stream(0.1, RadiusUpdater::kt());
    std::vector<StepTrace> trace;
    for (int t = 0; t < 50; ++t) trace.push_back(stream.observe_score(0.0));
    bool saw_empty = false;
    for (const auto& row : trace) {
        if (row.radius < 0.0) {
            saw_empty = true;
            CHECK(row.width == 0.0);
            CHECK_FALSE(row.covered);  // scores are nonnegative
            const PredictionInterval interval = make_interval(row.y_hat, row.radius);
            CHECK(interval.empty());
            CHECK(interval.lower > interval.upper);
        }
    }
    CHECK(saw_empty);
}

TEST_CASE("run_stream is deterministic and total on empty sources") {
    StreamConfig config;
    config.updater = UpdaterSpec{UpdaterKind::sfogd, 0.5, 0.0};
    PersistenceForecaster f1, f2;
    CHECK(run_stream(config, f1, {}).empty());

    const ChangepointSpec spec{.segments = {{50, {1.0, 0.0, 0.0, 0.0}}}, .noise_sigma = 1.0, .seed = 9};
    const auto data = generate_changepoint(spec);
    PersistenceForecaster g1, g2;
    const auto a = run_stream(config, g1, data);
    const auto b = run_stream(config, g2, data);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].radius == b[i].radius);
        CHECK(a[i].score == b[i].score);
        CHECK(a[i].covered == b[i].covered);
    }
}

TEST_CASE("multi-horizon blocks validate their shape and reduce to step at H=1") {
    MultiHorizonStream manager(0.1, UpdaterSpec{UpdaterKind::kt, 0.0, 0.0}, 1);
    ConformalStream single(0.1, RadiusUpdater::kt());
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const double y_hat = unif(rng), y = unif(rng);
        const auto rows = manager.observe_block(std::vector<double>{y_hat}, std::vector<double>{y});
        const StepTrace expect = single.observe(y_hat, y);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].radius == expect.radius);
        CHECK(rows[0].g == expect.g);
    }
    const std::vector<double> three(3, 0.0);
    CHECK_THROWS_AS(manager.observe_block(three, three), std::invalid_argument);
}

TEST_CASE("five simultaneous misses move the per-step updaters independently") {
    MultiHorizonStream manager(0.1, UpdaterSpec{UpdaterKind::kt, 0.0, 0.0}, 5);
    const std::vector<double> forecasts(5, 0.0);
    const std::vector<double> responses(5, 10.0);
    const auto rows = manager.observe_block(forecasts, responses);
    for (const auto& row : rows) {
        CHECK_FALSE(row.covered);
        CHECK(row.g == -0.9);
    }
    for (int k = 0; k < 5; ++k) CHECK(manager.stream(k).radius() == 0.45);
}

TEST_CASE("step-k radii do not depend on the other steps in the block") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int blocks = 100, horizon = 4, watched = 2;

    std::vector<std::vector<double>> forecasts(blocks), responses(blocks);
    for (int b = 0; b < blocks; ++b) {
        for (int k = 0; k < horizon; ++k) {
            forecasts[b].push_back(unif(rng));
            responses[b].push_back(unif(rng));
        }
    }

    auto run_watched = [&](bool permute_others) {
        MultiHorizonStream manager(0.1, UpdaterSpec{UpdaterKind::ons, 0.0, 0.0}, horizon);
        std::vector<double> radii;
        for (int b = 0; b < blocks; ++b) {
            std::vector<double> f = forecasts[b], r = responses[b];
            if (permute_others) {
                std::swap(f[0], f[horizon - 1]);
                std::swap(r[0], r[horizon - 1]);
            }
            const auto rows = manager.observe_block(f, r);
            radii.push_back(rows[watched].radius);
        }
        return radii;
    };

    CHECK(run_watched(false) == run_watched(true));
}

TEST_CASE("multi-horizon AR forecasting keeps per-step coverage near target") {
    // AR(3) world, H = 5, refit after each revealed block.
    const std::vector<double> phi{0.5, 0.2, -0.1};
    std::mt19937_64 rng(33);
    std::normal_distribution<double> gauss(0.0, 0.1);
    const int horizon = 5, blocks = 5000, warmup = 200;
    std::vector<double> series{0.0, 0.0, 0.0};
    for (int i = 0; i < warmup + blocks * horizon; ++i) {
        const std::size_t n = series.size();
        series.push_back(phi[0] * series[n - 1] + phi[1] * series[n - 2] + phi[2] * series[n - 3] +
                         gauss(rng));
    }

    ArForecaster forecaster(3, horizon);
    for (int i = 0; i < warmup; ++i) forecaster.observe({}, series[static_cast<std::size_t>(3 + i)]);

    MultiHorizonStream manager(0.1, UpdaterSpec{UpdaterKind::kt, 0.0, 0.0}, horizon);
    std::vector<int> covered(horizon, 0);
    for (int b = 0; b < blocks; ++b) {
        const std::vector<double> fc = forecaster.forecast_block(horizon);
        std::vector<double> truth(horizon);
        for (int k = 0; k < horizon; ++k) {
            truth[static_cast<std::size_t>(k)] =
                series[static_cast<std::size_t>(3 + warmup + b * horizon + k)];
        }
        const auto rows = manager.observe_block(fc, truth);
        for (int k = 0; k < horizon; ++k) covered[static_cast<std::size_t>(k)] += rows[static_cast<std::size_t>(k)].covered;
        for (double y : truth) forecaster.observe({}, y);
    }
    for (int k = 0; k < horizon; ++k) {
        CHECK(std::abs(covered[static_cast<std::size_t>(k)] / static_cast<double>(blocks) - 0.9) < 0.03);
    }
}
