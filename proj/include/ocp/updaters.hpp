#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace ocp {

// The online strategies that turn a subgradient stream into a radius sequence.
// Updaters consume subgradients only; they never see scores or responses, which
// keeps the betting-game contract (coin = -g) explicit.

// Krichevsky-Trofimov bettor. The wager s = fraction * wealth is the radius.
// `round` is the loop index of the upcoming update, so the first update mixes
// with weights round/(round+1) = 1/2.
struct KTState {
    double wealth = 1.0;
    double fraction = 0.0;
    double radius = 0.0;
    std::int64_t round = 1;
};

// Online-Newton-step bettor with the betting fraction clipped to [-1/2, 1/2].
struct ONSState {
    double wealth = 1.0;
    double fraction = 0.0;
    double accumulator = 1.0;
    double radius = 0.0;
};

struct OGDState {
    double radius = 0.0;
    double learning_rate = 1.0;
};

struct SFOGDState {
    double radius = 0.0;
    double learning_rate = 1.0;
    double grad_square_sum = 0.0;
};

// Constant-radius baseline, used as the comparator in regret evaluation.
struct FixedState {
    double radius = 0.0;
};

// Newton-style step scale 2/(2 - ln 3).
inline const double kOnsStepScale = 2.0 / (2.0 - std::log(3.0));

KTState kt_step(KTState state, double g);
ONSState ons_step(ONSState state, double g);
OGDState ogd_step(OGDState state, double g);
SFOGDState sfogd_step(SFOGDState state, double g);

enum class UpdaterKind { kt, ons, ogd, sfogd, fixed };

std::string to_string(UpdaterKind kind);
UpdaterKind updater_kind_from_string(const std::string& name);

// Strategy id plus the parameters it needs (eta for the gradient methods,
// the constant radius for the fixed baseline).
struct UpdaterSpec {
    UpdaterKind kind = UpdaterKind::kt;
    double eta = 0.0;
    double fixed_radius = 0.0;

    bool needs_eta() const { return kind == UpdaterKind::ogd || kind == UpdaterKind::sfogd; }
    std::string label() const;
};

// Value-semantic wrapper over the per-strategy states. One stream owns one
// updater; instances may be copied or moved freely.
class RadiusUpdater {
public:
    explicit RadiusUpdater(const UpdaterSpec& spec);

    static RadiusUpdater kt() { return RadiusUpdater(UpdaterSpec{UpdaterKind::kt, 0.0, 0.0}); }
    static RadiusUpdater ons() { return RadiusUpdater(UpdaterSpec{UpdaterKind::ons, 0.0, 0.0}); }
    static RadiusUpdater ogd(double eta) { return RadiusUpdater(UpdaterSpec{UpdaterKind::ogd, eta, 0.0}); }
    static RadiusUpdater sfogd(double eta) { return RadiusUpdater(UpdaterSpec{UpdaterKind::sfogd, eta, 0.0}); }
    static RadiusUpdater fixed(double radius) { return RadiusUpdater(UpdaterSpec{UpdaterKind::fixed, 0.0, radius}); }

    void step(double g);

    double radius() const;
    // Betting methods expose their wealth; gradient methods have none.
    std::optional<double> wealth() const;
    UpdaterKind kind() const { return kind_; }

private:
    UpdaterKind kind_;
    std::variant<KTState, ONSState, OGDState, SFOGDState, FixedState> state_;
};

// Fresh initial state for a strategy. Throws on invalid parameters
// (eta <= 0 for the gradient methods).
inline RadiusUpdater make_updater(const UpdaterSpec& spec) { return RadiusUpdater(spec); }

}  // namespace ocp
