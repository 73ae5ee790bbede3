#pragma once

#include "fieldqubit/constants.hpp"
#include "fieldqubit/error.hpp"

#include <cmath>
#include <optional>

namespace fieldqubit::circuit {

/// Circuit energies divided by h, in GHz.
struct CircuitEnergies {
    double charging = 0.0;   // E_C
    double inductive = 0.0;  // E_L
    double josephson = 0.0;  // E_J
    /// Set when the energies are the field-suppressed values at this
    /// in-plane field (tesla); zero-field energies leave it empty.
    std::optional<double> applied_field;

    void validate() const {
        require(std::isfinite(charging) && charging > 0.0, "CircuitEnergies: E_C must be > 0");
        require(std::isfinite(inductive) && inductive > 0.0, "CircuitEnergies: E_L must be > 0");
        require(std::isfinite(josephson) && josephson > 0.0, "CircuitEnergies: E_J must be > 0");
    }

    /// sqrt(8 E_C E_L), the oscillator frequency of the inductively shunted mode.
    double plasma_frequency() const { return std::sqrt(8.0 * charging * inductive); }
};

struct ElementValues {
    double capacitance = 0.0;      // F
    double inductance = 0.0;       // H, effective L_q
    double critical_current = 0.0; // A

    void validate() const {
        require(std::isfinite(capacitance) && capacitance > 0.0, "ElementValues: C must be > 0");
        require(std::isfinite(inductance) && inductance > 0.0, "ElementValues: L_q must be > 0");
        require(std::isfinite(critical_current) && critical_current > 0.0,
                "ElementValues: I_c must be > 0");
    }
};

inline CircuitEnergies energies_from_elements(const ElementValues& v) {
    using namespace constants;
    v.validate();
    CircuitEnergies e;
    e.charging = elementary_charge * elementary_charge / (2.0 * v.capacitance * planck) / giga;
    e.inductive = reduced_flux_quantum * reduced_flux_quantum / (v.inductance * planck) / giga;
    e.josephson = v.critical_current * reduced_flux_quantum / planck / giga;
    return e;
}

inline ElementValues elements_from_energies(const CircuitEnergies& e) {
    using namespace constants;
    e.validate();
    ElementValues v;
    v.capacitance = elementary_charge * elementary_charge / (2.0 * planck * e.charging * giga);
    v.inductance = reduced_flux_quantum * reduced_flux_quantum / (planck * e.inductive * giga);
    v.critical_current = planck * e.josephson * giga / reduced_flux_quantum;
    return v;
}

} // namespace fieldqubit::circuit
