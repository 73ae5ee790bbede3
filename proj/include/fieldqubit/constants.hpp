#pragma once

#include <numbers>

// SI values, CODATA 2018 (h, e, k_B exact by definition).
namespace fieldqubit::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double elementary_charge = 1.602176634e-19; // C
inline constexpr double boltzmann = 1.380649e-23;         // J / K
inline constexpr double bohr_magneton = 9.274010078e-24;  // J / T
inline constexpr double flux_quantum = planck / (2.0 * elementary_charge); // Wb
inline constexpr double reduced_flux_quantum = flux_quantum / (2.0 * pi);

inline constexpr double giga = 1e9;

} // namespace fieldqubit::constants
