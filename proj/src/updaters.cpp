#include "ocp/updaters.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace ocp {

namespace {

void require_coin(double g) {
    if (!(std::abs(g) <= 1.0)) {
        throw std::invalid_argument("betting updaters require |g| <= 1");
    }
}

}  // namespace

KTState kt_step(KTState state, double g) {
    require_coin(g);
    const double t = static_cast<double>(state.round);
    state.wealth = state.wealth - g * state.radius;
    state.fraction = (t / (t + 1.0)) * state.fraction - g / (t + 1.0);
    state.radius = state.fraction * state.wealth;
    state.round += 1;
    return state;
}

ONSState ons_step(ONSState state, double g) {
    require_coin(g);
    state.wealth = state.wealth - g * state.radius;
    const double z = g / (1.0 - state.fraction * g);
    state.accumulator += z * z;
    const double unclipped = state.fraction - kOnsStepScale * (z / state.accumulator);
    state.fraction = std::clamp(unclipped, -0.5, 0.5);
    state.radius = state.fraction * state.wealth;
    return state;
}

OGDState ogd_step(OGDState state, double g) {
    state.radius -= state.learning_rate * g;
    return state;
}

SFOGDState sfogd_step(SFOGDState state, double g) {
    state.grad_square_sum += g * g;
    // grad_square_sum stays zero only while every subgradient is exactly zero.
    if (state.grad_square_sum > 0.0) {
        state.radius -= state.learning_rate * g / std::sqrt(state.grad_square_sum);
    }
    return state;
}

std::string to_string(UpdaterKind kind) {
    switch (kind) {
        case UpdaterKind::kt: return "kt";
        case UpdaterKind::ons: return "ons";
        case UpdaterKind::ogd: return "ogd";
        case UpdaterKind::sfogd: return "sfogd";
        case UpdaterKind::fixed: return "fixed";
    }
    throw std::logic_error("unreachable updater kind");
}

UpdaterKind updater_kind_from_string(const std::string& name) {
    if (name == "kt") return UpdaterKind::kt;
    if (name == "ons") return UpdaterKind::ons;
    if (name == "ogd") return UpdaterKind::ogd;
    if (name == "sfogd") return UpdaterKind::sfogd;
    if (name == "fixed") return UpdaterKind::fixed;
    throw std::invalid_argument("unknown updater: " + name);
}

std::string UpdaterSpec::label() const {
    std::string out = to_string(kind);
    if (needs_eta()) {
        char buf[32];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), eta);
        out += "_eta" + std::string(buf, ptr);
    }
    return out;
}

RadiusUpdater::RadiusUpdater(const UpdaterSpec& spec) : kind_(spec.kind) {
    switch (spec.kind) {
        case UpdaterKind::kt:
            state_ = KTState{};
            break;
        case UpdaterKind::ons:
            state_ = ONSState{};
            break;
        case UpdaterKind::ogd:
            if (!(spec.eta > 0.0)) throw std::invalid_argument("ogd requires eta > 0");
            state_ = OGDState{0.0, spec.eta};
            break;
        case UpdaterKind::sfogd:
            if (!(spec.eta > 0.0)) throw std::invalid_argument("sfogd requires eta > 0");
            state_ = SFOGDState{0.0, spec.eta, 0.0};
            break;
        case UpdaterKind::fixed:
            if (!std::isfinite(spec.fixed_radius)) throw std::invalid_argument("fixed radius must be finite");
            state_ = FixedState{spec.fixed_radius};
            break;
    }
}

void RadiusUpdater::step(double g) {
    std::visit(
        [g](auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, KTState>) {
                s = kt_step(s, g);
            } else if constexpr (std::is_same_v<T, ONSState>) {
                s = ons_step(s, g);
            } else if constexpr (std::is_same_v<T, OGDState>) {
                s = ogd_step(s, g);
            } else if constexpr (std::is_same_v<T, SFOGDState>) {
                s = sfogd_step(s, g);
            } else {
                // fixed baseline never moves
            }
        },
        state_);
}

double RadiusUpdater::radius() const {
    return std::visit([](const auto& s) { return s.radius; }, state_);
}

std::optional<double> RadiusUpdater::wealth() const {
    if (const auto* kt = std::get_if<KTState>(&state_)) return kt->wealth;
    if (const auto* ons = std::get_if<ONSState>(&state_)) return ons->wealth;
    return std::nullopt;
}

}  // namespace ocp
