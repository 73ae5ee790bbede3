#pragma once

#include "fieldqubit/error.hpp"
#include "fieldqubit/numerics/linear_ode.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <vector>

namespace fieldqubit::tlsbath {

/// Equally spaced TLS ensemble around the qubit frequency. All rates and
/// frequencies share one unit (1/s); detunings are delta_k = k*spacing + offset
/// for k = -floor(K/2), ..., K - 1 - floor(K/2).
struct TlsLadder {
    int count = 100;
    double spacing = 0.0;
    double offset = 0.0;
    double coupling = 0.0;      // g
    double decoherence = 0.0;   // Gamma_2
    double tls_relaxation = 20.0; // Gamma_t

    void validate() const {
        // count 0 is accepted and describes a bare qubit.
        require(count >= 0, "TlsLadder: count must be >= 0");
        require(spacing > 0.0 && std::isfinite(spacing), "TlsLadder: spacing must be > 0");
        require(offset >= 0.0 && offset <= 0.5 * spacing, "TlsLadder: offset must lie in [0, spacing/2]");
        require(coupling >= 0.0 && std::isfinite(coupling), "TlsLadder: g must be >= 0");
        require(decoherence > 0.0 && std::isfinite(decoherence), "TlsLadder: Gamma_2 must be > 0");
        // Gamma_t = 0 is the lossless exchange limit.
        require(tls_relaxation >= 0.0 && std::isfinite(tls_relaxation), "TlsLadder: Gamma_t must be >= 0");
    }

    int first_index() const { return -(count / 2); }

    double detuning(int k) const { return k * spacing + offset; }
};

/// Gamma_qt = 2 g^2 Gamma_2 / (Gamma_2^2 + delta^2).
inline double cross_relaxation_rate(double coupling, double decoherence, double detuning) {
    return 2.0 * coupling * coupling * decoherence / (decoherence * decoherence + detuning * detuning);
}

struct CrossRelaxation {
    std::vector<int> indices;
    std::vector<double> rates;
    double total = 0.0;
};

inline CrossRelaxation cross_relaxation_rates(const TlsLadder& ladder) {
    ladder.validate();
    CrossRelaxation out;
    for (int i = 0; i < ladder.count; ++i) {
        const int k = ladder.first_index() + i;
        out.indices.push_back(k);
        out.rates.push_back(cross_relaxation_rate(ladder.coupling, ladder.decoherence, ladder.detuning(k)));
    }
    out.total = std::accumulate(out.rates.begin(), out.rates.end(), 0.0);
    return out;
}

/// Copy of `ladder` with g rescaled so the summed cross-relaxation equals `total`.
inline TlsLadder with_total_cross_relaxation(TlsLadder ladder, double total) {
    require(total > 0.0, "with_total_cross_relaxation: total must be > 0");
    require(ladder.count >= 1, "with_total_cross_relaxation: empty ladder");
    if (ladder.coupling == 0.0) ladder.coupling = 1.0;
    const double current = cross_relaxation_rates(ladder).total;
    ladder.coupling *= std::sqrt(total / current);
    return ladder;
}

/// Extra Markovian qubit decay toward `population`, e.g. into a resonant spin bath.
struct QubitLoss {
    double rate = 0.0;
    double population = 0.0;
};

/// Solomon rate equations for the qubit (index 0) and K TLSs:
///   dp_q/dt = -Gamma_q (p_q - p_th) - sum_k Gamma_qt^k (p_q - p_t^k) [- loss (p_q - p_loss)]
///   dp_k/dt = -Gamma_t (p_k - p_th) - Gamma_qt^k (p_k - p_q)
/// The generator is symmetric.
inline numerics::RateMatrix build_rate_system(const TlsLadder& ladder, double gamma_q, double p_th,
                                              const QubitLoss& loss = {}) {
    ladder.validate();
    require(gamma_q >= 0.0 && std::isfinite(gamma_q), "build_rate_system: Gamma_q must be >= 0");
    require(p_th >= 0.0 && p_th <= 1.0, "build_rate_system: p_th must lie in [0, 1]");
    require(loss.rate >= 0.0, "build_rate_system: loss rate must be >= 0");
    const auto rates = cross_relaxation_rates(ladder);
    const int n = ladder.count + 1;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    g(0, 0) = -gamma_q - rates.total - loss.rate;
    d[0] = gamma_q * p_th + loss.rate * loss.population;
    for (int k = 1; k < n; ++k) {
        const double r = rates.rates[static_cast<std::size_t>(k - 1)];
        g(0, k) = r;
        g(k, 0) = r;
        g(k, k) = -ladder.tls_relaxation - r;
        d[k] = ladder.tls_relaxation * p_th;
    }
    return numerics::RateMatrix(std::move(g), std::move(d));
}

} // namespace fieldqubit::tlsbath
