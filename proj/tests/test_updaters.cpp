#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "ocp/updaters.hpp"

using namespace ocp;

namespace {

// Independent straight-line transcription of the KT recursion, kept separate
// from the library implementation on purpose. The loop index starts at 1 and
// the first update uses weights t/(t+1) with t = 1.
struct KtOracle {
    double wealth = 1.0;
    double fraction = 0.0;
    double radius = 0.0;
};

KtOracle kt_oracle_run(const std::vector<double>& gs) {
    KtOracle o;
    double t = 1.0;
    for (double g : gs) {
        o.wealth = o.wealth - g * o.radius;
        o.fraction = (t / (t + 1.0)) * o.fraction - g / (t + 1.0);
        o.radius = o.fraction * o.wealth;
        t += 1.0;
    }
    return o;
}

std::vector<double> random_subgradients(std::uint64_t seed, int n, double alpha) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution miss(alpha);
    std::vector<double> gs(static_cast<std::size_t>(n));
    for (auto& g : gs) g = miss(rng) ? alpha - 1.0 : alpha;
    return gs;
}

}  // namespace

TEST_CASE("kt reset state matches the algorithm initialization") {
    const KTState s;
    CHECK(s.wealth == 1.0);
    CHECK(s.fraction == 0.0);
    CHECK(s.radius == 0.0);
    CHECK(s.round == 1);
}

TEST_CASE("kt first-round hand values") {
    KTState s;
    const KTState miss = kt_step(s, -0.9);
    CHECK(miss.wealth == 1.0);
    CHECK(miss.fraction == 0.45);
    CHECK(miss.radius == 0.45);
    CHECK(miss.round == 2);

    const KTState cover = kt_step(s, 0.1);
    CHECK(cover.wealth == 1.0);
    CHECK(cover.fraction == -0.05);
    CHECK(cover.radius == -0.05);
}

TEST_CASE("kt rejects coins outside [-1, 1]") {
    KTState s;
    CHECK_THROWS_AS(kt_step(s, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(kt_step(s, -1.0000001), std::invalid_argument);
    CHECK_NOTHROW(kt_step(s, 1.0));
}

TEST_CASE("kt 10-step alternating stream matches the transcription oracle bitwise") {
    std::vector<double> gs;
    for (int i = 0; i < 10; ++i) gs.push_back(i % 2 == 0 ? 0.1 : -0.9);

    KTState s;
    for (double g : gs) s = kt_step(s, g);
    const KtOracle oracle = kt_oracle_run(gs);

    CHECK(s.wealth == oracle.wealth);
    CHECK(s.fraction == oracle.fraction);
    CHECK(s.radius == oracle.radius);

    // Frozen values from an independent scratch evaluation of the recursion.
    CHECK(s.wealth == 0x1.e9bfa9dab5facp+0);    // 1.9130808028184942
    CHECK(s.fraction == 0x1.745d1745d1744p-2);  // 0.36363636363636354
    CHECK(s.radius == 0x1.642e4cfc2741ep-1);    // 0.6956657464794522
}

TEST_CASE("kt fraction follows the closed form -(sum g)/(t+1)") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto gs = random_subgradients(seed, 500, 0.1);
        KTState s;
        double gsum = 0.0;
        for (std::size_t i = 0; i < gs.size(); ++i) {
            s = kt_step(s, gs[i]);
            gsum += gs[i];
            const double closed = -gsum / static_cast<double>(i + 2);
            CHECK(std::abs(s.fraction - closed) < 1e-9);
        }
    }
}

TEST_CASE("kt wealth identity W = 1 - sum g_i s_i") {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        const auto gs = random_subgradients(seed, 1000, 0.2);
        KTState s;
        double gs_sum = 0.0;
        for (double g : gs) {
            const double radius_used = s.radius;
            s = kt_step(s, g);
            gs_sum += g * radius_used;
            CHECK(std::abs(s.wealth - (1.0 - gs_sum)) < 1e-9);
            CHECK(s.wealth >= 0.0);
        }
    }
}

TEST_CASE("ons reset state matches the algorithm initialization") {
    const ONSState s;
    CHECK(s.wealth == 1.0);
    CHECK(s.fraction == 0.0);
    CHECK(s.accumulator == 1.0);
    CHECK(s.radius == 0.0);
}

TEST_CASE("ons first-step hand values, including the clipped branch") {
    ONSState s;
    const ONSState miss = ons_step(s, -0.9);
    CHECK(miss.wealth == 1.0);
    CHECK(miss.accumulator == doctest::Approx(1.81).epsilon(1e-15));
    CHECK(miss.fraction == 0.5);  // unclipped value ~1.1033 clips at 1/2
    CHECK(miss.radius == 0.5);

    const ONSState cover = ons_step(s, 0.1);
    CHECK(cover.accumulator == doctest::Approx(1.01).epsilon(1e-15));
    CHECK(cover.fraction == doctest::Approx(-0.21968327223765236).epsilon(1e-14));
    CHECK(cover.radius == doctest::Approx(-0.21968327223765236).epsilon(1e-14));
}

TEST_CASE("ons two-step trace matches the hand oracle to 1e-12") {
    ONSState s;
    s = ons_step(s, -0.9);
    CHECK(std::abs(s.wealth - 1.0) < 1e-12);
    CHECK(std::abs(s.accumulator - 1.81) < 1e-12);
    CHECK(std::abs(s.fraction - 0.5) < 1e-12);
    CHECK(std::abs(s.radius - 0.5) < 1e-12);

    s = ons_step(s, 0.1);
    CHECK(std::abs(s.wealth - 0.95) < 1e-12);
    CHECK(std::abs(s.accumulator - 1.8210803324099722) < 1e-12);
    CHECK(std::abs(s.fraction - 0.37174755497359185) < 1e-12);
    CHECK(std::abs(s.radius - 0.3531601772249122) < 1e-12);
}

TEST_CASE("ons zero subgradient is a fixed point") {
    ONSState s;
    s = ons_step(s, -0.9);
    const ONSState before = s;
    s = ons_step(s, 0.0);
    CHECK(s.wealth == before.wealth);
    CHECK(s.accumulator == before.accumulator);
    CHECK(s.fraction == before.fraction);
    CHECK(s.radius == before.fraction * before.wealth);
}

TEST_CASE("ons fraction stays clipped to [-1/2, 1/2]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coin(-1.0, 1.0);
    ONSState s;
    double prev_acc = s.accumulator;
    for (int i = 0; i < 5000; ++i) {
        s = ons_step(s, coin(rng));
        CHECK(s.fraction >= -0.5);
        CHECK(s.fraction <= 0.5);
        CHECK(s.accumulator >= prev_acc);
        CHECK(s.accumulator >= 1.0);
        prev_acc = s.accumulator;
    }
}

TEST_CASE("ogd moves opposite the subgradient") {
    OGDState s{1.0, 0.1};
    CHECK(ogd_step(s, -0.9).radius == doctest::Approx(1.09).epsilon(1e-15));
    CHECK(ogd_step(s, 0.1).radius == doctest::Approx(0.99).epsilon(1e-15));
    OGDState zero{0.0, 1.0};
    CHECK(ogd_step(zero, 0.0).radius == 0.0);
}

TEST_CASE("sfogd first-step normalization and hand value") {
    SFOGDState s{0.0, 1.0, 0.0};
    const SFOGDState first = sfogd_step(s, -0.9);
    CHECK(first.radius == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(first.grad_square_sum == doctest::Approx(0.81).epsilon(1e-15));

    SFOGDState mid{0.5, 0.1, 0.81};
    const SFOGDState next = sfogd_step(mid, 0.1);
    CHECK(next.grad_square_sum == doctest::Approx(0.82).epsilon(1e-15));
    CHECK(std::abs(next.radius - 0.4889568473925153) < 1e-12);
}

TEST_CASE("sfogd with an all-zero gradient history stays put") {
    SFOGDState s{0.25, 2.0, 0.0};
    const SFOGDState after = sfogd_step(s, 0.0);
    CHECK(after.radius == 0.25);
    CHECK(after.grad_square_sum == 0.0);
}

TEST_CASE("sfogd step magnitude never exceeds eta") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> coin(-1.0, 1.0);
    SFOGDState s{0.0, 0.37, 0.0};
    for (int i = 0; i < 5000; ++i) {
        const double before = s.radius;
        s = sfogd_step(s, coin(rng));
        CHECK(std::abs(s.radius - before) <= s.learning_rate + 1e-15);
    }
}

TEST_CASE("make_updater validates parameters") {
    CHECK_THROWS_AS(make_updater({UpdaterKind::ogd, 0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_updater({UpdaterKind::ogd, -1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_updater({UpdaterKind::sfogd, 0.0, 0.0}), std::invalid_argument);
    CHECK_NOTHROW(make_updater({UpdaterKind::kt, 0.0, 0.0}));
    CHECK_NOTHROW(make_updater({UpdaterKind::ons, 0.0, 0.0}));
    CHECK_NOTHROW(make_updater({UpdaterKind::fixed, 0.0, 2.5}));

    RadiusUpdater kt = RadiusUpdater::kt();
    CHECK(kt.radius() == 0.0);
    CHECK(kt.wealth().value() == 1.0);
    RadiusUpdater ons = RadiusUpdater::ons();
    CHECK(ons.radius() == 0.0);
    CHECK(ons.wealth().value() == 1.0);
    RadiusUpdater ogd = RadiusUpdater::ogd(0.5);
    CHECK(ogd.radius() == 0.0);
    CHECK_FALSE(ogd.wealth().has_value());
    RadiusUpdater fixed = RadiusUpdater::fixed(2.5);
    fixed.step(0.1);
    CHECK(fixed.radius() == 2.5);
}

TEST_CASE("all updaters are deterministic on identical streams") {
    const auto gs = random_subgradients(77, 2000, 0.1);
    for (UpdaterKind kind :
         {UpdaterKind::kt, UpdaterKind::ons, UpdaterKind::ogd, UpdaterKind::sfogd, UpdaterKind::fixed}) {
        UpdaterSpec spec{kind, 0.5, 1.25};
        RadiusUpdater a = make_updater(spec);
        RadiusUpdater b = make_updater(spec);
        for (double g : gs) {
            a.step(g);
            b.step(g);
            CHECK(a.radius() == b.radius());
        }
        CHECK(a.wealth() == b.wealth());
    }
}

TEST_CASE("updater labels carry the learning rate") {
    CHECK(UpdaterSpec{UpdaterKind::kt, 0.0, 0.0}.label() == "kt");
    CHECK(UpdaterSpec{UpdaterKind::ogd, 4.0, 0.0}.label() == "ogd_eta4");
    CHECK(UpdaterSpec{UpdaterKind::sfogd, 0.25, 0.0}.label() == "sfogd_eta0.25");
    CHECK(updater_kind_from_string("ons") == UpdaterKind::ons);
    CHECK_THROWS_AS(updater_kind_from_string("adam"), std::invalid_argument);
}
