#pragma once

#include "fieldqubit/circuit/energies.hpp"
#include "fieldqubit/constants.hpp"
#include "fieldqubit/numerics/eigh.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace fieldqubit::circuit {

inline constexpr int min_basis_size = 10;

/// Displacement operator exp(i*lambda*(a + a^dagger)) in the Fock basis,
/// factored as D_mn = i^(m+n) X_mn with X real and symmetric. For m = n + d,
///   X_mn = (-1)^n sqrt(n!/m!) lambda^d exp(-lambda^2/2) L_n^(d)(lambda^2),
/// evaluated with the normalised three-term Laguerre recurrence in n, which is
/// forward-stable for every truncation size.
inline Eigen::MatrixXd displacement_kernel(double lambda, int size) {
    Eigen::MatrixXd x(size, size);
    const double arg = lambda * lambda;
    const double log_lambda = std::log(lambda);
    for (int d = 0; d < size; ++d) {
        // r_n = sqrt(n!/(n+d)!) lambda^d exp(-arg/2) L_n^(d)(arg)
        double previous = 0.0;
        double current = std::exp(d * log_lambda - 0.5 * std::lgamma(d + 1.0) - 0.5 * arg);
        for (int n = 0; n + d < size; ++n) {
            const double value = (n % 2 == 0) ? current : -current;
            x(n + d, n) = value;
            x(n, n + d) = value;
            const double next = ((2.0 * n + 1.0 + d - arg) * current -
                                 std::sqrt(static_cast<double>(n) * (n + d)) * previous) /
                                std::sqrt((n + 1.0) * (n + d + 1.0));
            previous = current;
            current = next;
        }
    }
    return x;
}

/// Phase zero-point spread (2 E_C / E_L)^(1/4) of the linear oscillator.
inline double phase_zero_point(const CircuitEnergies& e) {
    return std::pow(2.0 * e.charging / e.inductive, 0.25);
}

namespace detail {

inline void check_basis(int basis_size) {
    if (basis_size < min_basis_size)
        fail(ErrorKind::invalid_input,
             "basis_size must be >= " + std::to_string(min_basis_size) + ", got " + std::to_string(basis_size));
}

// cos(phi_ext + (m+n) pi/2) and its phi_ext derivative without trig roundoff in the phase step.
inline double quarter_cos(double phase, int k) {
    switch (k & 3) {
    case 0: return std::cos(phase);
    case 1: return -std::sin(phase);
    case 2: return -std::cos(phase);
    default: return std::sin(phase);
    }
}

} // namespace detail

/// Fluxonium Hamiltonian (GHz) in the Fock basis of the shifted quadratic part,
/// H = 4 E_C n^2 + E_L theta^2 / 2 - E_J cos(theta + phi_ext), theta = phi - phi_ext.
/// `flux` is the external flux in units of the flux quantum.
inline numerics::SymmetricMatrix build_hamiltonian(const CircuitEnergies& e, double flux, int basis_size) {
    e.validate();
    detail::check_basis(basis_size);
    require(std::isfinite(flux), "build_hamiltonian: flux must be finite");
    const double phase = 2.0 * constants::pi * flux;
    const double omega = e.plasma_frequency();
    const Eigen::MatrixXd x = displacement_kernel(phase_zero_point(e), basis_size);
    Eigen::MatrixXd h(basis_size, basis_size);
    for (int m = 0; m < basis_size; ++m) {
        for (int n = m; n < basis_size; ++n) {
            double value = -e.josephson * x(m, n) * detail::quarter_cos(phase, m + n);
            if (m == n) value += omega * (m + 0.5);
            h(m, n) = value;
            h(n, m) = value;
        }
    }
    return numerics::SymmetricMatrix(std::move(h));
}

/// dH/d(phi_ext) in GHz per radian, same basis as build_hamiltonian.
inline Eigen::MatrixXd hamiltonian_flux_derivative(const CircuitEnergies& e, double flux, int basis_size) {
    e.validate();
    detail::check_basis(basis_size);
    const double phase = 2.0 * constants::pi * flux;
    const Eigen::MatrixXd x = displacement_kernel(phase_zero_point(e), basis_size);
    Eigen::MatrixXd d(basis_size, basis_size);
    for (int m = 0; m < basis_size; ++m) {
        for (int n = m; n < basis_size; ++n) {
            // d/dphase of -E_J X cos(phase + k pi/2) = E_J X sin(phase + k pi/2) = -E_J X cos(phase + (k+1) pi/2)
            const double value = -e.josephson * x(m, n) * detail::quarter_cos(phase, m + n + 1);
            d(m, n) = value;
            d(n, m) = value;
        }
    }
    return d;
}

} // namespace fieldqubit::circuit
