#pragma once

#include "fieldqubit/error.hpp"

#include <cmath>
#include <limits>

namespace fieldqubit::circuit {

/// Loop inductances of the two-loop gradiometric circuit (henries or any
/// common unit). Loop 1 carries L1 + Ls, loop 2 carries L3, L2 is shared.
struct GradiometerGeometry {
    double l1 = 0.0;
    double ls = 0.0;
    double l2 = 0.0;
    double l3 = 0.0;

    double loop1() const { return l1 + ls; }

    void validate() const {
        require(l1 >= 0.0 && ls >= 0.0 && l2 >= 0.0 && l3 >= 0.0, "GradiometerGeometry: inductances must be >= 0");
        require(std::isfinite(l1 + ls + l2 + l3), "GradiometerGeometry: inductances must be finite");
        if (!(loop1() + l3 > 0.0)) fail(ErrorKind::degenerate_geometry, "L1 + Ls + L3 must be > 0");
    }

    /// Inductance asymmetry (L_{1,s} - L3) / (L_{1,s} + L3).
    double asymmetry() const {
        validate();
        return (loop1() - l3) / (loop1() + l3);
    }
};

struct LoopFluxes {
    double common = 0.0;       // (phi1 + phi2) / 2
    double differential = 0.0; // (phi1 - phi2) / 2
};

inline LoopFluxes loop_fluxes(double phi1, double phi2) { return {0.5 * (phi1 + phi2), 0.5 * (phi1 - phi2)}; }

/// Flux seen by the junction: differential minus asymmetry times common flux.
inline double effective_flux(const GradiometerGeometry& g, double phi1, double phi2) {
    const double alpha = g.asymmetry();
    const auto f = loop_fluxes(phi1, phi2);
    return f.differential - alpha * f.common;
}

inline double effective_inductance(const GradiometerGeometry& g) {
    g.validate();
    const double a = g.loop1();
    return (a * g.l2 + g.l2 * g.l3 + g.l3 * a) / (a + g.l3);
}

/// Perpendicular-field period of the gradiometric circuit relative to a
/// single-loop circuit built from loop 1 alone, given the two loop areas.
/// Returns +infinity when the gradiometer picks up no net flux.
inline double periodicity_ratio(const GradiometerGeometry& g, double area1, double area2) {
    require(area1 > 0.0 && area2 >= 0.0, "periodicity_ratio: areas must be positive");
    const double pickup = std::abs(effective_flux(g, area1, area2));
    if (pickup <= 1e-15 * area1) return std::numeric_limits<double>::infinity();
    return area1 / pickup;
}

} // namespace fieldqubit::circuit
