#pragma once

#include "fieldqubit/error.hpp"
#include "fieldqubit/noise/decay_curve.hpp"
#include "fieldqubit/numerics/least_squares.hpp"
#include "fieldqubit/numerics/random.hpp"
#include "fieldqubit/tlsbath/ladder.hpp"
#include "fieldqubit/tlsbath/protocol.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fieldqubit::tlsbath {

/// Free parameters of the qubit + TLS ladder model (rates in 1/s).
struct HyperpolParameters {
    double gamma_q = 140e3;
    double coupling = 0.0;
    double decoherence = 1e6;
    double spacing = 1e5;
    double offset = 0.0;
    double tls_relaxation = 20.0;
    double p_th = 0.0;
    int count = 100;
    QubitLoss loss{}; // held fixed during fits

    TlsLadder ladder() const { return {count, spacing, offset, coupling, decoherence, tls_relaxation}; }

    static constexpr std::array<const char*, 7> names{"gamma_q", "g", "gamma_2", "spacing", "offset", "gamma_t", "p_th"};
};

struct ObservedTrace {
    ProtocolConfig config;
    noise::DecayCurve curve;
};

/// Qubit population at `times` after thermal start, cfg.repetitions feedback
/// cycles and initialisation to cfg.init.
inline std::vector<double> simulate_trace(const BathDynamics& bath, const ProtocolConfig& cfg,
                                          std::span<const double> times) {
    const BathState state = bath.stabilize(bath.thermal_state(), cfg);
    return bath.qubit_population(state, cfg.reset_population(cfg.init), times);
}

inline std::vector<double> simulate_trace(const HyperpolParameters& p, const ProtocolConfig& cfg,
                                          std::span<const double> times) {
    const BathDynamics bath(p.ladder(), p.gamma_q, p.p_th, p.loss);
    return simulate_trace(bath, cfg, times);
}

/// Noisy traces sampled at each config's strobe times; noise is additive
/// Gaussian with standard deviation `noise`, clipped to [0, 1].
inline std::vector<ObservedTrace> synthesize_traces(const HyperpolParameters& p,
                                                    std::span<const ProtocolConfig> configs, double noise,
                                                    std::uint64_t seed) {
    require(noise >= 0.0, "synthesize_traces: noise must be >= 0");
    const BathDynamics bath(p.ladder(), p.gamma_q, p.p_th, p.loss);
    numerics::Rng rng(seed);
    std::vector<ObservedTrace> out;
    for (const auto& cfg : configs) {
        ObservedTrace trace{cfg, {}};
        trace.curve.times = cfg.strobe_times();
        trace.curve.populations = simulate_trace(bath, cfg, trace.curve.times);
        if (noise > 0.0)
            for (auto& v : trace.curve.populations) v = std::clamp(v + rng.normal(0.0, noise), 0.0, 1.0);
        out.push_back(std::move(trace));
    }
    return out;
}

struct HyperpolFit {
    numerics::FitResult fit; // in internal coordinates
    HyperpolParameters parameters;
    std::array<double, 7> errors{};
    double total_cross_relaxation = 0.0;
    double total_cross_relaxation_error = 0.0;
    double gamma1 = 0.0;
    double gamma1_error = 0.0;
    bool converged = false;
    bool identifiable = true;
    std::vector<std::string> warnings;
};

namespace detail {

constexpr Eigen::Index internal_size = 6;

// The rate equations see g, Gamma_2 and the spacing only through the rates
// 2 g^2 Gamma_2 / (Gamma_2^2 + delta_k^2), i.e. through 2 g^2 / Gamma_2 and
// spacing / Gamma_2. Gamma_2 is therefore held at its initial value and the fit
// runs over (ln Gamma_q, ln sum Gamma_qt, ln spacing/Gamma_2, offset/spacing,
// ln Gamma_t, p_th), which keeps every trial point a valid ladder.
inline Eigen::VectorXd to_internal(const HyperpolParameters& p) {
    Eigen::VectorXd u(internal_size);
    u << std::log(p.gamma_q), std::log(cross_relaxation_rates(p.ladder()).total), std::log(p.spacing / p.decoherence),
        p.offset / p.spacing, std::log(p.tls_relaxation), p.p_th;
    return u;
}

inline HyperpolParameters from_internal(const Eigen::VectorXd& u, const HyperpolParameters& fixed) {
    HyperpolParameters p = fixed;
    p.gamma_q = std::exp(u[0]);
    p.spacing = p.decoherence * std::exp(u[2]);
    p.offset = std::clamp(u[3], 0.0, 0.5) * p.spacing;
    p.tls_relaxation = std::exp(u[4]);
    p.p_th = u[5];
    p.coupling = 1.0;
    p.coupling = with_total_cross_relaxation(p.ladder(), std::exp(u[1])).coupling;
    return p;
}

inline Eigen::VectorXd natural(const HyperpolParameters& p) {
    Eigen::VectorXd v(9);
    v << p.gamma_q, p.coupling, p.decoherence, p.spacing, p.offset, p.tls_relaxation, p.p_th,
        cross_relaxation_rates(p.ladder()).total, 0.0;
    v[8] = p.gamma_q + v[7] + p.loss.rate;
    return v;
}

} // namespace detail

/// The ladder shape parameters are nearly degenerate, so the cost surface has
/// flat valleys; stop once the relative cost decrease stalls.
inline numerics::FitOptions hyperpol_fit_options() {
    numerics::FitOptions o;
    o.max_iterations = 100;
    o.ftol = 1e-6;
    o.xtol = 1e-9;
    return o;
}

/// Joint Levenberg-Marquardt fit of simulated traces to data over
/// {Gamma_q, g, spacing, offset, Gamma_t, p_th}. Gamma_2, the ladder size and
/// any extra qubit loss are taken from `init` and held fixed; Gamma_2 only sets
/// the scale of g and the spacing, and its reported error is zero.
inline HyperpolFit fit_hyperpolarization(std::span<const ObservedTrace> traces, const HyperpolParameters& init,
                                         numerics::FitOptions options = hyperpol_fit_options()) {
    require(!traces.empty(), "fit_hyperpolarization: no traces");
    require(init.count >= 1, "fit_hyperpolarization: ladder must hold at least one TLS");
    require(init.gamma_q > 0.0 && init.coupling > 0.0 && init.decoherence > 0.0 && init.spacing > 0.0 &&
                init.tls_relaxation > 0.0,
            "fit_hyperpolarization: initial rates must be > 0");
    require(init.offset >= 0.0 && init.offset <= 0.5 * init.spacing,
            "fit_hyperpolarization: initial offset must lie in [0, spacing/2]");
    require(init.p_th >= 0.0 && init.p_th < 1.0, "fit_hyperpolarization: initial p_th must lie in [0, 1)");

    HyperpolFit out;
    std::size_t residual_count = 0;
    std::map<std::pair<long, int>, int> distinct;
    for (const auto& t : traces) {
        t.config.validate();
        t.curve.validate();
        residual_count += t.curve.size();
        distinct[{t.config.repetitions, static_cast<int>(t.config.target)}] += 1;
    }
    if (distinct.size() < 2) {
        out.identifiable = false;
        out.warnings.emplace_back("non-identifiable: need at least two traces differing in repetitions or target");
    }

    auto residual = [&](const Eigen::VectorXd& u, Eigen::Ref<Eigen::VectorXd> r) {
        const HyperpolParameters p = detail::from_internal(u, init);
        const BathDynamics bath(p.ladder(), p.gamma_q, p.p_th, p.loss);
        std::map<double, CycleMap> maps;
        Eigen::Index row = 0;
        for (const auto& t : traces) {
            auto it = maps.find(t.config.cycle_duration);
            if (it == maps.end()) it = maps.emplace(t.config.cycle_duration, bath.cycle_map(t.config.cycle_duration)).first;
            const BathState state = bath.stabilize(bath.thermal_state(), t.config, it->second);
            const auto model = bath.qubit_population(state, t.config.reset_population(t.config.init), t.curve.times);
            for (std::size_t i = 0; i < model.size(); ++i)
                r[row++] = t.curve.weight(i) * (t.curve.populations[i] - model[i]);
        }
    };

    const std::array<numerics::Interval, detail::internal_size> bounds{{
        {std::log(1.0), std::log(1e9)},
        {std::log(1e-3), std::log(1e9)},
        {std::log(1e-6), std::log(1e6)},
        {0.0, 0.5},
        {std::log(1e-3), std::log(1e6)},
        {0.0, 0.999},
    }};
    if (options.typical.empty()) options.typical = {1.0, 1.0, 1.0, 0.5, 1.0, 0.5};
    out.fit = numerics::least_squares(residual, residual_count, detail::to_internal(init), bounds, options);
    out.converged = out.fit.converged;
    out.identifiable = out.identifiable && out.fit.identifiable;
    if (!out.fit.identifiable)
        out.warnings.emplace_back("non-identifiable: Jacobian is rank deficient");

    out.parameters = detail::from_internal(out.fit.parameters, init);
    const Eigen::VectorXd centre = detail::natural(out.parameters);
    out.total_cross_relaxation = centre[7];
    out.gamma1 = centre[8];

    // Propagate the internal covariance through the coordinate change.
    Eigen::MatrixXd jac(centre.size(), detail::internal_size);
    for (Eigen::Index j = 0; j < detail::internal_size; ++j) {
        const double h = 1e-6 * std::max(std::abs(out.fit.parameters[j]), 1.0);
        Eigen::VectorXd plus = out.fit.parameters;
        Eigen::VectorXd minus = out.fit.parameters;
        plus[j] = std::min(plus[j] + h, bounds[static_cast<std::size_t>(j)].upper);
        minus[j] = std::max(minus[j] - h, bounds[static_cast<std::size_t>(j)].lower);
        jac.col(j) = (detail::natural(detail::from_internal(plus, init)) -
                      detail::natural(detail::from_internal(minus, init))) /
                     (plus[j] - minus[j]);
    }
    const Eigen::MatrixXd cov = jac * out.fit.covariance * jac.transpose();
    for (int i = 0; i < 7; ++i) out.errors[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, cov(i, i)));
    out.total_cross_relaxation_error = std::sqrt(std::max(0.0, cov(7, 7)));
    out.gamma1_error = std::sqrt(std::max(0.0, cov(8, 8)));
    return out;
}

} // namespace fieldqubit::tlsbath
