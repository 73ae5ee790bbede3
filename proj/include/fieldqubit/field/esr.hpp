#pragma once

#include "fieldqubit/constants.hpp"
#include "fieldqubit/error.hpp"

#include <cmath>

namespace fieldqubit::field {

struct EsrModel {
    double g_factor = 2.0;
    double spin = 0.5;

    void validate() const { require(g_factor > 0.0 && std::isfinite(g_factor), "EsrModel: g must be > 0"); }
};

/// Field (tesla) where the spin Zeeman splitting g mu_B B matches h f_q; f_q in GHz.
inline double esr_field(double f_q, const EsrModel& model = {}) {
    model.validate();
    require(f_q > 0.0 && std::isfinite(f_q), "esr_field: f_q must be > 0");
    return constants::planck * f_q * constants::giga / (model.g_factor * constants::bohr_magneton);
}

/// Out-of-plane field that cancels the chip misalignment at in-plane field
/// b_parallel; misalignment in tesla per tesla.
inline double compensation_field(double b_parallel, double misalignment) { return misalignment * b_parallel; }

/// Two-level Boltzmann excited-state population at temperature T (kelvin), f_q in GHz.
inline double thermal_population(double f_q, double temperature) {
    require(f_q > 0.0, "thermal_population: f_q must be > 0");
    require(temperature > 0.0, "thermal_population: T must be > 0");
    const double x = constants::planck * f_q * constants::giga / (constants::boltzmann * temperature);
    return 1.0 / (1.0 + std::exp(x));
}

inline double temperature_from_population(double f_q, double population) {
    require(f_q > 0.0, "temperature_from_population: f_q must be > 0");
    if (!(population > 0.0 && population < 0.5))
        fail(ErrorKind::invalid_population, "thermal population must lie in (0, 0.5)");
    const double energy = constants::planck * f_q * constants::giga;
    return energy / (constants::boltzmann * std::log((1.0 - population) / population));
}

} // namespace fieldqubit::field
