#pragma once

#include "fieldqubit/error.hpp"
#include "fieldqubit/numerics/random.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace fieldqubit::noise {

/// Asymmetric two-state fluctuator. The trace takes the value 0 in the
/// ground state and `amplitude` (flux, Phi_0) in the excited state.
struct TelegraphProcess {
    double gamma_up = 0.0;   // 1/s, ground -> excited
    double gamma_down = 0.0; // 1/s, excited -> ground
    double amplitude = 1.0;

    double gamma1() const { return gamma_up + gamma_down; }
    double excited_probability() const { return gamma_up / gamma1(); }
    double ground_probability() const { return gamma_down / gamma1(); }
    double variance() const { return amplitude * amplitude * excited_probability() * ground_probability(); }

    bool frozen() const { return gamma_up == 0.0 && gamma_down == 0.0; }

    void validate(bool allow_frozen = false) const {
        require(gamma_up >= 0.0 && gamma_down >= 0.0, "TelegraphProcess: rates must be >= 0");
        require(std::isfinite(gamma_up) && std::isfinite(gamma_down) && std::isfinite(amplitude),
                "TelegraphProcess: non-finite parameter");
        require(allow_frozen || !frozen(), "TelegraphProcess: rates must not both be zero");
    }
};

struct TransitionRates {
    double up = 0.0;
    double down = 0.0;
};

/// Gamma_up = Gamma_1 p_th, Gamma_down = Gamma_1 (1 - p_th).
inline TransitionRates detailed_balance_rates(double gamma1, double p_th) {
    require(gamma1 > 0.0 && std::isfinite(gamma1), "detailed_balance_rates: gamma1 must be > 0");
    require(p_th >= 0.0 && p_th < 0.5, "detailed_balance_rates: p_th must lie in [0, 0.5)");
    return {gamma1 * p_th, gamma1 * (1.0 - p_th)};
}

/// Samples a telegraph trace every dt using the exact two-state transition
/// probabilities over one step. Without an explicit initial state the first
/// sample is drawn from the stationary distribution.
inline std::vector<double> simulate_telegraph(const TelegraphProcess& proc, double duration, double dt,
                                              std::uint64_t seed, std::optional<int> initial_state = {}) {
    proc.validate(true);
    require(dt > 0.0 && duration > 0.0, "simulate_telegraph: duration and dt must be > 0");
    require(dt * std::max(proc.gamma_up, proc.gamma_down) <= 0.1,
            "simulate_telegraph: dt * max(rate) must be <= 0.1");
    require(!initial_state || *initial_state == 0 || *initial_state == 1,
            "simulate_telegraph: initial state must be 0 or 1");
    require(initial_state || !proc.frozen(), "simulate_telegraph: frozen process needs an initial state");

    const auto count = static_cast<std::size_t>(std::llround(duration / dt));
    require(count >= 1, "simulate_telegraph: duration shorter than one step");
    numerics::Rng rng(seed);

    double p_up = 0.0;
    double p_down = 0.0;
    if (!proc.frozen()) {
        const double relax = -std::expm1(-proc.gamma1() * dt);
        p_up = proc.excited_probability() * relax;
        p_down = proc.ground_probability() * relax;
    }
    int state = initial_state ? *initial_state : (rng.uniform() < proc.excited_probability() ? 1 : 0);
    std::vector<double> trace(count);
    for (std::size_t i = 0; i < count; ++i) {
        trace[i] = state == 1 ? proc.amplitude : 0.0;
        const double u = rng.uniform();
        if (state == 0 && u < p_up)
            state = 1;
        else if (state == 1 && u < p_down)
            state = 0;
    }
    return trace;
}

/// One-sided Lorentzian power density at angular frequency omega (rad/s),
///   S(omega) = 4 a^2 p0 p1 Gamma_1 / (Gamma_1^2 + omega^2),
/// normalised so that the integral over omega >= 0 with measure d(omega)/2pi
/// equals the process variance a^2 p0 p1. p0 p1 equals
/// (Gamma_1/Gamma_up + Gamma_1/Gamma_down)^-1. Expressed per Hz, S(2 pi f) is
/// directly comparable with a one-sided periodogram.
inline double lorentzian_psd(const TelegraphProcess& proc, double omega) {
    proc.validate();
    const double g1 = proc.gamma1();
    return 4.0 * proc.variance() * g1 / (g1 * g1 + omega * omega);
}

inline std::vector<double> ensemble_psd(std::span<const TelegraphProcess> processes, std::span<const double> omegas) {
    require(!processes.empty(), "ensemble_psd: no processes");
    std::vector<double> out(omegas.size(), 0.0);
    for (const auto& p : processes)
        for (std::size_t i = 0; i < omegas.size(); ++i) out[i] += lorentzian_psd(p, omegas[i]);
    return out;
}

/// Fluctuators with Gamma_1 drawn log-uniformly in [gamma_min, gamma_max] and
/// rates split by detailed balance at p_th.
inline std::vector<TelegraphProcess> log_uniform_ensemble(std::size_t count, double gamma_min, double gamma_max,
                                                          double p_th, double amplitude, std::uint64_t seed) {
    require(count >= 1, "log_uniform_ensemble: count must be >= 1");
    require(gamma_min > 0.0 && gamma_max > gamma_min, "log_uniform_ensemble: need 0 < gamma_min < gamma_max");
    numerics::Rng rng(seed);
    const double lo = std::log(gamma_min);
    const double hi = std::log(gamma_max);
    std::vector<TelegraphProcess> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto rates = detailed_balance_rates(std::exp(rng.uniform(lo, hi)), p_th);
        out.push_back({rates.up, rates.down, amplitude});
    }
    return out;
}

} // namespace fieldqubit::noise
