#pragma once

#include "fieldqubit/circuit/spectrum.hpp"
#include "fieldqubit/error.hpp"
#include "fieldqubit/noise/decay_curve.hpp"
#include "fieldqubit/numerics/least_squares.hpp"
#include "fieldqubit/numerics/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace fieldqubit::noise {

/// Gaussian echo dephasing rate (1/s) for 1/f flux noise of amplitude A_Phi
/// (Phi_0^2) at a bias with slope d(omega)/d(Phi) in rad/s per Phi_0.
inline double echo_dephasing_rate(double a_phi, double sensitivity) {
    require(a_phi >= 0.0, "echo_dephasing_rate: A_Phi must be >= 0");
    return std::sqrt(a_phi * std::numbers::ln2) * std::abs(sensitivity);
}

/// P_e(t) = exp(-(gamma_phi t)^2) exp(-gamma_exp t) / 2 + 1/2.
inline double echo_decay_model(double t, double gamma_phi, double gamma_exp) {
    require(t >= 0.0, "echo_decay_model: t must be >= 0");
    const double g = gamma_phi * t;
    return 0.5 * std::exp(-g * g - gamma_exp * t) + 0.5;
}

struct FluxCurve {
    double flux = 0.0; // Phi_0
    DecayCurve curve;
};

/// True when flux sits on a first-order sweet spot (integer or half-integer Phi_0).
inline bool at_sweet_spot(double flux, double tolerance) {
    const double twice = 2.0 * flux;
    return std::abs(twice - std::round(twice)) <= 2.0 * tolerance;
}

struct EchoRateFit {
    numerics::FitResult fit;
    double gamma_exp = 0.0;
    double gamma_exp_error = 0.0;
    std::vector<double> gaussian_rates;       // per curve, 0 where pinned
    std::vector<double> gaussian_rate_errors; // per curve
    std::vector<bool> pinned;                 // sweet-spot curves carry no Gaussian rate
};

namespace detail {

// Least-squares (a, b) for y = -a t - b t^2 on points with a usable log.
inline std::pair<double, double> log_quadratic_guess(const DecayCurve& c) {
    double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double contrast = 2.0 * c.populations[i] - 1.0;
        if (contrast < 0.1 || c.times[i] <= 0.0) continue;
        const double t = c.times[i];
        const double y = -std::log(contrast);
        s11 += t * t;
        s12 += t * t * t;
        s22 += t * t * t * t;
        r1 += t * y;
        r2 += t * t * y;
    }
    const double det = s11 * s22 - s12 * s12;
    if (!(det > 0.0)) return {s11 > 0.0 ? r1 / s11 : 0.0, 0.0};
    return {(r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det};
}

} // namespace detail

/// Joint fit of echo decays sharing one exponential rate, with a Gaussian rate
/// per off-sweet-spot curve. The fit runs over Gamma_phi^2 >= 0, since the
/// model is flat in Gamma_phi at zero. Curves within `sweet_spot_tolerance` of a sweet
/// spot are fitted with the Gaussian rate fixed at zero.
inline EchoRateFit fit_echo_rates(std::span<const FluxCurve> curves, double sweet_spot_tolerance = 1e-6) {
    require(!curves.empty(), "fit_echo_rates: no curves");
    std::size_t points = 0;
    for (const auto& c : curves) {
        c.curve.validate();
        require(c.curve.size() >= 2, "fit_echo_rates: curve with fewer than two points");
        require(c.curve.times.front() >= 0.0, "fit_echo_rates: negative time");
        points += c.curve.size();
    }

    EchoRateFit out;
    std::vector<int> slot(curves.size(), -1);
    int free_count = 0;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const bool pin = at_sweet_spot(curves[i].flux, sweet_spot_tolerance);
        out.pinned.push_back(pin);
        if (!pin) slot[i] = 1 + free_count++;
    }

    // Initial exponential rate from sweet-spot curves when present.
    std::vector<double> exp_guesses;
    for (std::size_t i = 0; i < curves.size(); ++i)
        if (out.pinned[i] || std::count(out.pinned.begin(), out.pinned.end(), true) == 0)
            exp_guesses.push_back(detail::log_quadratic_guess(curves[i].curve).first);
    std::nth_element(exp_guesses.begin(), exp_guesses.begin() + exp_guesses.size() / 2, exp_guesses.end());
    double time_scale = 0.0;
    for (const auto& c : curves) time_scale = std::max(time_scale, c.curve.times.back());
    const double floor_rate = 1e-3 / time_scale;
    const double gamma_exp0 = std::max(exp_guesses[exp_guesses.size() / 2], floor_rate);

    Eigen::VectorXd init(1 + free_count);
    init[0] = gamma_exp0;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        if (slot[i] < 0) continue;
        const auto& c = curves[i].curve;
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            const double contrast = 2.0 * c.populations[k] - 1.0;
            if (contrast < 0.1) continue;
            const double t = c.times[k];
            num += t * t * (-std::log(contrast) - gamma_exp0 * t);
            den += t * t * t * t;
        }
        const double b = den > 0.0 ? num / den : 0.0;
        init[slot[i]] = std::max(b, 0.0025 * gamma_exp0 * gamma_exp0);
    }

    auto residual = [&](const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> r) {
        Eigen::Index k = 0;
        for (std::size_t i = 0; i < curves.size(); ++i) {
            const double gphi_sq = slot[i] < 0 ? 0.0 : p[slot[i]];
            const auto& c = curves[i].curve;
            for (std::size_t j = 0; j < c.size(); ++j, ++k) {
                const double t = c.times[j];
                const double model = 0.5 * std::exp(-gphi_sq * t * t - p[0] * t) + 0.5;
                r[k] = c.weight(j) * (c.populations[j] - model);
            }
        }
    };
    std::vector<numerics::Interval> bounds(static_cast<std::size_t>(init.size()), {0.0, 1e30});
    numerics::FitOptions options;
    options.max_iterations = 400;
    options.ftol = 1e-10;
    options.xtol = 1e-10;
    out.fit = numerics::least_squares(residual, points, init, bounds, options);
    out.gamma_exp = out.fit.parameters[0];
    out.gamma_exp_error = out.fit.standard_error(0);
    for (std::size_t i = 0; i < curves.size(); ++i) {
        if (slot[i] < 0) {
            out.gaussian_rates.push_back(0.0);
            out.gaussian_rate_errors.push_back(0.0);
            continue;
        }
        const double rate = std::sqrt(out.fit.parameters[slot[i]]);
        const double sq_error = out.fit.standard_error(slot[i]);
        out.gaussian_rates.push_back(rate);
        out.gaussian_rate_errors.push_back(rate > 0.0 ? 0.5 * sq_error / rate : std::sqrt(sq_error));
    }
    return out;
}

struct EchoFluxFit {
    EchoRateFit rates;
    std::vector<double> sensitivities; // rad/s per Phi_0, per curve
    double sqrt_a_phi = 0.0;           // Phi_0
    double sqrt_a_phi_error = 0.0;

    double a_phi() const { return sqrt_a_phi * sqrt_a_phi; }
};

/// Shared-rate echo fit followed by a fit of the Gaussian rates against the
/// circuit's flux sensitivity, Gamma_phi = sqrt(A_Phi ln 2) |d omega / d Phi|.
inline EchoFluxFit joint_fit_echo(std::span<const FluxCurve> curves, const circuit::CircuitEnergies& energies,
                                  int basis_size = circuit::default_basis_size,
                                  double sweet_spot_tolerance = 1e-6) {
    require(curves.size() >= 2, "joint_fit_echo: need at least two curves");
    std::size_t off_spot = 0;
    for (const auto& c : curves)
        if (!at_sweet_spot(c.flux, sweet_spot_tolerance)) ++off_spot;
    if (off_spot == 0)
        fail(ErrorKind::non_identifiable,
             "joint_fit_echo: every curve sits on a sweet spot, flux-noise amplitude cannot be separated");

    EchoFluxFit out;
    out.rates = fit_echo_rates(curves, sweet_spot_tolerance);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const double s = std::abs(circuit::flux_sensitivity(energies, curves[i].flux, basis_size).per_flux_quantum);
        out.sensitivities.push_back(s);
        if (out.rates.pinned[i]) continue;
        sxy += s * out.rates.gaussian_rates[i];
        sxx += s * s;
    }
    if (!(sxx > 0.0)) fail(ErrorKind::non_identifiable, "joint_fit_echo: vanishing flux sensitivity");
    const double slope = sxy / sxx;
    double scatter = 0.0;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        if (out.rates.pinned[i]) continue;
        const double d = out.rates.gaussian_rates[i] - slope * out.sensitivities[i];
        scatter += d * d;
    }
    const double dof = off_spot > 1 ? static_cast<double>(off_spot - 1) : 1.0;
    const double slope_error = std::sqrt(scatter / dof / sxx);
    out.sqrt_a_phi = slope / std::sqrt(std::numbers::ln2);
    out.sqrt_a_phi_error = slope_error / std::sqrt(std::numbers::ln2);
    return out;
}

/// Echo curves from the decay model at each flux, with additive Gaussian
/// noise of standard deviation `noise` clipped into [0, 1].
inline std::vector<FluxCurve> synthesize_echo_curves(std::span<const double> fluxes, std::span<const double> times,
                                                     double gamma_exp, double sqrt_a_phi,
                                                     const circuit::CircuitEnergies& energies, double noise,
                                                     std::uint64_t seed,
                                                     int basis_size = circuit::default_basis_size) {
    require(noise >= 0.0, "synthesize_echo_curves: noise must be >= 0");
    numerics::Rng rng(seed);
    std::vector<FluxCurve> out;
    for (double flux : fluxes) {
        const double s = circuit::flux_sensitivity(energies, flux, basis_size).per_flux_quantum;
        const double gphi = echo_dephasing_rate(sqrt_a_phi * sqrt_a_phi, s);
        FluxCurve fc{flux, {}};
        for (double t : times) {
            double p = echo_decay_model(t, gphi, gamma_exp);
            if (noise > 0.0) p = std::clamp(p + rng.normal(0.0, noise), 0.0, 1.0);
            fc.curve.times.push_back(t);
            fc.curve.populations.push_back(p);
        }
        out.push_back(std::move(fc));
    }
    return out;
}

} // namespace fieldqubit::noise
