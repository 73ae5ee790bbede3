#pragma once

#include "fieldqubit/circuit/hamiltonian.hpp"
#include "fieldqubit/constants.hpp"
#include "fieldqubit/numerics/eigh.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace fieldqubit::circuit {

inline constexpr int default_basis_size = 60;
inline constexpr int max_basis_size = 960;
inline constexpr double convergence_tolerance = 1e-3;

struct Transitions {
    double f_ge = 0.0;  // GHz
    double f_gf = 0.0;  // GHz
    int basis_size = 0; // basis at which both changed by less than the tolerance
};

namespace detail {

inline Transitions transitions_at(const CircuitEnergies& e, double flux, int basis_size) {
    const Eigen::VectorXd levels = numerics::eigvalsh(build_hamiltonian(e, flux, basis_size));
    return {levels[1] - levels[0], levels[2] - levels[0], basis_size};
}

} // namespace detail

/// Lowest two transition frequencies. The basis is doubled from `basis_size`
/// until both frequencies move by less than 0.1 %; the larger basis is reported.
inline Transitions transition_frequencies(const CircuitEnergies& e, double flux,
                                          int basis_size = default_basis_size) {
    Transitions coarse = detail::transitions_at(e, flux, basis_size);
    for (int n = 2 * basis_size; n <= max_basis_size; n *= 2) {
        const Transitions fine = detail::transitions_at(e, flux, n);
        const bool settled = std::abs(fine.f_ge - coarse.f_ge) < convergence_tolerance * std::abs(fine.f_ge) &&
                             std::abs(fine.f_gf - coarse.f_gf) < convergence_tolerance * std::abs(fine.f_gf);
        if (settled) return fine;
        coarse = fine;
    }
    fail(ErrorKind::numerical_failure, "transition_frequencies: spectrum not converged at basis size " +
                                           std::to_string(max_basis_size));
}

struct FluxSensitivity {
    double per_flux_quantum = 0.0; // d(omega_ge)/d(Phi_ext), rad/s per Phi_0
    double per_weber = 0.0;        // rad/s per Wb
    double flux = 0.0;             // where it was evaluated, Phi_0
};

/// d(2 pi f_ge)/d(Phi_ext) from the Hellmann-Feynman expectation values of
/// dH/dPhi_ext in the two lowest eigenstates.
inline FluxSensitivity flux_sensitivity(const CircuitEnergies& e, double flux,
                                        int basis_size = default_basis_size) {
    const int n = transition_frequencies(e, flux, basis_size).basis_size;
    const auto es = numerics::eigh(build_hamiltonian(e, flux, n));
    const Eigen::MatrixXd dh = hamiltonian_flux_derivative(e, flux, n);
    const auto v0 = es.vectors.col(0);
    const auto v1 = es.vectors.col(1);
    const double slope_per_rad = v1.dot(dh * v1) - v0.dot(dh * v0); // GHz per rad of phi_ext
    FluxSensitivity s;
    s.flux = flux;
    // f in GHz, phi_ext = 2 pi Phi/Phi_0, omega = 2 pi f.
    s.per_flux_quantum = 2.0 * constants::pi * constants::giga * slope_per_rad * 2.0 * constants::pi;
    s.per_weber = s.per_flux_quantum / constants::flux_quantum;
    return s;
}

struct SpectrumRow {
    double flux = 0.0;
    double f_ge = 0.0;
    double f_gf = 0.0;
};

/// f_ge and f_gf over a flux grid, sorted by flux.
inline std::vector<SpectrumRow> spectrum_table(const CircuitEnergies& e, std::span<const double> fluxes,
                                               int basis_size = default_basis_size) {
    std::vector<double> grid(fluxes.begin(), fluxes.end());
    std::sort(grid.begin(), grid.end());
    std::vector<SpectrumRow> rows;
    rows.reserve(grid.size());
    for (double phi : grid) {
        const auto t = transition_frequencies(e, phi, basis_size);
        rows.push_back({phi, t.f_ge, t.f_gf});
    }
    return rows;
}

inline std::vector<double> linear_grid(double start, double stop, std::size_t points) {
    require(points >= 1, "linear_grid: need at least one point");
    std::vector<double> grid(points, start);
    if (points == 1) return grid;
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(points - 1);
    return grid;
}

} // namespace fieldqubit::circuit
