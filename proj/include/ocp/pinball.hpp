#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ocp {

// Quantile level beta in (0,1). For conformal calibration at miscoverage
// level alpha, the relevant level is beta = 1 - alpha.
struct QuantileLevel {
    double beta;

    explicit QuantileLevel(double b) : beta(b) {
        if (!(b > 0.0 && b < 1.0)) {
            throw std::invalid_argument("QuantileLevel: beta must lie in (0,1)");
        }
    }
};

// Pinball loss of a candidate radius against an observed nonconformity score.
// Nonnegative, zero exactly at radius == score.
inline double pinball_loss(double radius, double score, QuantileLevel level) {
    const double b = level.beta;
    return std::max(b * (score - radius), (1.0 - b) * (radius - score));
}

// Subgradient of the pinball loss in its first argument: 1{score <= radius} - beta.
// At the kink (radius == score) the element 1 - beta is selected, so that a
// closed interval covering its boundary point counts as a success.
inline double pinball_subgradient(double radius, double score, QuantileLevel level) {
    return (score <= radius ? 1.0 : 0.0) - level.beta;
}

}  // namespace ocp
