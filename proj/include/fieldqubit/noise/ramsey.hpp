#pragma once

#include "fieldqubit/error.hpp"
#include "fieldqubit/noise/decay_curve.hpp"

#include <cmath>
#include <numbers>
#include <span>

namespace fieldqubit::noise {

/// Ramsey fringes of a qubit whose frequency toggles slowly between
/// f_mean +- delta_f/2, spending fraction `weight` in the upper branch:
/// P(t) = 1/2 + e^{-t/T2}/2 [w cos(2 pi f_+ t) + (1 - w) cos(2 pi f_- t)].
inline DecayCurve ramsey_beating(double f_mean, double delta_f, std::span<const double> times, double t2,
                                 double weight = 0.5) {
    require(delta_f >= 0.0, "ramsey_beating: delta_f must be >= 0");
    require(t2 > 0.0, "ramsey_beating: T2 must be > 0");
    require(weight >= 0.0 && weight <= 1.0, "ramsey_beating: weight must lie in [0, 1]");
    const double two_pi = 2.0 * std::numbers::pi;
    const double upper = f_mean + 0.5 * delta_f;
    const double lower = f_mean - 0.5 * delta_f;
    DecayCurve out;
    for (double t : times) {
        const double fringe = weight * std::cos(two_pi * upper * t) + (1.0 - weight) * std::cos(two_pi * lower * t);
        out.times.push_back(t);
        out.populations.push_back(0.5 + 0.5 * std::exp(-t / t2) * fringe);
    }
    out.validate();
    return out;
}

} // namespace fieldqubit::noise
