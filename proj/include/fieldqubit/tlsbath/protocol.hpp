#pragma once

#include "fieldqubit/error.hpp"
#include "fieldqubit/noise/decay_curve.hpp"
#include "fieldqubit/numerics/eigh.hpp"
#include "fieldqubit/numerics/linear_ode.hpp"
#include "fieldqubit/tlsbath/ladder.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <tuple>
#include <vector>

namespace fieldqubit::tlsbath {

enum class QubitState { ground, excited };

inline double population_of(QubitState s) { return s == QubitState::excited ? 1.0 : 0.0; }

/// Feedback stabilisation followed by stroboscopic relaxation readout.
/// Default cycle: 540 ns readout + 32 ns pi pulse + 708 ns overhead.
struct ProtocolConfig {
    long repetitions = 10000;
    QubitState target = QubitState::excited;
    QubitState init = QubitState::ground;
    double cycle_duration = 1.28e-6;  // s
    double strobe_interval = 1.28e-6; // s
    double trace_duration = 2e-3;     // s
    double reset_fidelity = 1.0;      // probability the reset lands in the target

    void validate() const {
        require(repetitions >= 1, "ProtocolConfig: repetitions must be >= 1");
        require(cycle_duration > 0.0 && strobe_interval > 0.0 && trace_duration > 0.0,
                "ProtocolConfig: durations must be > 0");
        require(reset_fidelity >= 0.0 && reset_fidelity <= 1.0, "ProtocolConfig: reset fidelity must lie in [0, 1]");
    }

    double reset_population(QubitState s) const {
        const double p = population_of(s);
        return reset_fidelity * p + (1.0 - reset_fidelity) * (1.0 - p);
    }

    std::vector<double> strobe_times() const {
        const auto steps = static_cast<long>(std::floor(trace_duration / strobe_interval + 1e-9));
        std::vector<double> t(static_cast<std::size_t>(steps + 1));
        for (long i = 0; i <= steps; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) * strobe_interval;
        return t;
    }
};

struct BathState {
    double qubit = 0.0;
    Eigen::VectorXd tls;
    double p_th = 0.0;

    Eigen::VectorXd stacked() const {
        Eigen::VectorXd x(tls.size() + 1);
        x[0] = qubit;
        x.tail(tls.size()) = tls;
        return x;
    }
};

struct RelaxationTrace {
    noise::DecayCurve curve;
    std::vector<double> reference; // p_th + (p0 - p_th) exp(-Gamma_1 t)
    double gamma1 = 0.0;           // Gamma_q + sum Gamma_qt
};

/// Exact one-cycle evolution x -> a x + b, with the TLS block of `a`
/// diagonalised so that N repetitions cost one decomposition.
struct CycleMap {
    double duration = 0.0;
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    numerics::Eigensystem tls_block;
};

/// Qubit plus TLS ladder with the rate generator diagonalised once.
class BathDynamics {
public:
    BathDynamics(const TlsLadder& ladder, double gamma_q, double p_th, const QubitLoss& loss = {})
        : ladder_(ladder), gamma_q_(gamma_q), p_th_(p_th), loss_(loss),
          propagator_(build_rate_system(ladder, gamma_q, p_th, loss)) {
        total_cross_ = cross_relaxation_rates(ladder).total;
        const auto& modes = propagator_.modes();
        modal_drive_ = modes.vectors.transpose() * propagator_.system().drive();
    }

    int tls_count() const { return ladder_.count; }
    double p_th() const { return p_th_; }
    double total_cross_relaxation() const { return total_cross_; }
    double gamma1() const { return gamma_q_ + total_cross_ + loss_.rate; }
    const numerics::LinearPropagator& propagator() const { return propagator_; }

    BathState thermal_state() const {
        return {p_th_, Eigen::VectorXd::Constant(ladder_.count, p_th_), p_th_};
    }

    CycleMap cycle_map(double duration) const {
        CycleMap map;
        map.duration = duration;
        std::tie(map.a, map.b) = propagator_.affine_map(duration);
        if (ladder_.count > 0) {
            const Eigen::MatrixXd block = map.a.bottomRightCorner(ladder_.count, ladder_.count);
            map.tls_block = numerics::eigh(numerics::SymmetricMatrix(0.5 * (block + block.transpose())));
        }
        return map;
    }

    /// N cycles of {evolve one cycle; reset the qubit}, starting from `start`.
    BathState stabilize(const BathState& start, const ProtocolConfig& cfg, const CycleMap& map) const {
        cfg.validate();
        const double target = cfg.reset_population(cfg.target);
        BathState out{target, start.tls, p_th_};
        if (ladder_.count == 0) return out;
        const Eigen::Index k = ladder_.count;
        // First cycle from the given start, the rest from a reset qubit.
        const Eigen::VectorXd first = map.a * start.stacked() + map.b;
        Eigen::VectorXd tls = first.tail(k);
        const auto rest = static_cast<double>(cfg.repetitions - 1);
        if (rest > 0) {
            const Eigen::VectorXd drive = map.a.col(0).tail(k) * target + map.b.tail(k);
            const auto& w = map.tls_block.vectors;
            Eigen::VectorXd y = w.transpose() * tls;
            const Eigen::VectorXd z = w.transpose() * drive;
            for (Eigen::Index j = 0; j < k; ++j) {
                const double mu = std::clamp(map.tls_block.values[j], 0.0, 1.0);
                double power = 0.0;
                double series = rest;
                if (mu > 0.0) {
                    const double log_mu = std::log(mu);
                    power = std::exp(rest * log_mu);
                    if (1.0 - mu > 1e-15) series = -std::expm1(rest * log_mu) / (1.0 - mu);
                } else {
                    series = 1.0;
                }
                y[j] = power * y[j] + series * z[j];
            }
            tls = w * y;
        }
        out.tls = tls;
        return out;
    }

    BathState stabilize(const BathState& start, const ProtocolConfig& cfg) const {
        return stabilize(start, cfg, cycle_map(cfg.cycle_duration));
    }

    /// Qubit population at the given times after setting the qubit to `qubit0`.
    std::vector<double> qubit_population(const BathState& state, double qubit0, std::span<const double> times) const {
        BathState s = state;
        s.qubit = qubit0;
        const auto& modes = propagator_.modes();
        const Eigen::VectorXd y0 = modes.vectors.transpose() * s.stacked();
        const Eigen::VectorXd row = modes.vectors.row(0).transpose();
        std::vector<double> out(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double t = times[i];
            double p = 0.0;
            for (Eigen::Index j = 0; j < y0.size(); ++j) {
                const double lambda = modes.values[j];
                p += row[j] * (std::exp(lambda * t) * y0[j] + numerics::expm1_ratio(lambda, t) * modal_drive_[j]);
            }
            out[i] = std::clamp(p, 0.0, 1.0);
        }
        return out;
    }

    RelaxationTrace relax(const BathState& state, const ProtocolConfig& cfg) const {
        cfg.validate();
        RelaxationTrace out;
        out.gamma1 = gamma1();
        const double p0 = cfg.reset_population(cfg.init);
        out.curve.times = cfg.strobe_times();
        out.curve.populations = qubit_population(state, p0, out.curve.times);
        // Markovian reference relaxes toward the full system's fixed point.
        const double settle = gamma1() > 0.0 ? (gamma_q_ * p_th_ + total_cross_ * p_th_ + loss_.rate * loss_.population) / gamma1() : p0;
        for (double t : out.curve.times) out.reference.push_back(settle + (p0 - settle) * std::exp(-out.gamma1 * t));
        return out;
    }

private:
    TlsLadder ladder_;
    double gamma_q_;
    double p_th_;
    QubitLoss loss_;
    numerics::LinearPropagator propagator_;
    double total_cross_ = 0.0;
    Eigen::VectorXd modal_drive_;
};

/// Thermal bath driven by cfg.repetitions feedback cycles.
inline BathState run_stabilization(const TlsLadder& ladder, double gamma_q, double p_th, const ProtocolConfig& cfg) {
    const BathDynamics bath(ladder, gamma_q, p_th);
    return bath.stabilize(bath.thermal_state(), cfg);
}

/// Stroboscopic qubit relaxation after initialising the qubit to cfg.init.
inline RelaxationTrace relaxation_trace(const BathState& state, const TlsLadder& ladder, double gamma_q,
                                        const ProtocolConfig& cfg) {
    require(state.tls.size() == ladder.count, "relaxation_trace: state size does not match ladder");
    const BathDynamics bath(ladder, gamma_q, state.p_th);
    return bath.relax(state, cfg);
}

} // namespace fieldqubit::tlsbath
