#pragma once

#include "fieldqubit/circuit/energies.hpp"
#include "fieldqubit/error.hpp"
#include "fieldqubit/numerics/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace fieldqubit::field {

enum class Element { junction, inductor, resonator };

struct GapModel {
    double critical_field = 0.0; // tesla
    Element element = Element::junction;

    void validate() const {
        require(std::isfinite(critical_field) && critical_field > 0.0, "GapModel: B_c must be > 0");
    }
};

/// Delta(B)/Delta(0) = sqrt(1 - (B/B_c)^2) for |B| < B_c.
inline double gap_fraction(double field, const GapModel& model) {
    model.validate();
    require(std::isfinite(field), "gap_fraction: field must be finite");
    const double ratio = std::abs(field) / model.critical_field;
    if (ratio >= 1.0)
        fail(ErrorKind::field_exceeds_critical,
             "field " + std::to_string(field) + " T >= B_c " + std::to_string(model.critical_field) + " T");
    return std::sqrt(1.0 - ratio * ratio);
}

/// Zero-field energies suppressed to their values at in-plane field `field`:
/// E_J follows the junction gap, E_L the inductor gap (kinetic inductance
/// scales as 1/Delta), E_C stays fixed. Fields are absolute, so energies that
/// already carry a field are rejected.
inline circuit::CircuitEnergies scale_energies(const circuit::CircuitEnergies& zero_field, double field,
                                               double bc_junction, double bc_inductor) {
    zero_field.validate();
    if (zero_field.applied_field)
        fail(ErrorKind::invalid_input, "scale_energies: energies already scaled to " +
                                           std::to_string(*zero_field.applied_field) +
                                           " T; pass zero-field energies");
    circuit::CircuitEnergies out = zero_field;
    out.josephson *= gap_fraction(field, {bc_junction, Element::junction});
    out.inductive *= gap_fraction(field, {bc_inductor, Element::inductor});
    out.applied_field = field;
    return out;
}

/// Resonator frequency f_r0 (1 - (B/B_c)^2)^(1/4), from f_r ~ 1/sqrt(L_kin).
inline double resonator_frequency(double f_r0, double field, const GapModel& model) {
    require(f_r0 > 0.0, "resonator_frequency: f_r0 must be > 0");
    return f_r0 * std::sqrt(gap_fraction(field, model));
}

enum class GapFitMode { gap, resonator };

struct FieldSample {
    double field = 0.0; // tesla
    double value = 0.0; // relative gap, or resonator frequency
    double sigma = 1.0;
};

struct CriticalFieldFit {
    numerics::FitResult fit;
    double critical_field = 0.0;
    double critical_field_error = 0.0;
    double zero_field_value = 1.0; // f_r0 in resonator mode, 1 in gap mode
};

/// Weighted fit of B_c (and f_r0 in resonator mode) to field samples.
inline CriticalFieldFit fit_critical_field(std::span<const FieldSample> samples, GapFitMode mode) {
    require(samples.size() >= 3, "fit_critical_field: need at least 3 points");
    double b_min = samples[0].field, b_max = samples[0].field, v_max = 0.0;
    for (const auto& s : samples) {
        require(std::isfinite(s.field) && std::isfinite(s.value), "fit_critical_field: non-finite sample");
        b_min = std::min(b_min, std::abs(s.field));
        b_max = std::max(b_max, std::abs(s.field));
        v_max = std::max(v_max, s.value);
    }
    if (b_max - b_min <= 1e-12 * std::max(1.0, b_max))
        fail(ErrorKind::non_identifiable, "fit_critical_field: all samples at the same field");

    std::vector<numerics::DataPoint> data;
    for (const auto& s : samples) data.push_back({std::abs(s.field), s.value, s.sigma});

    // Start from the value suppression at the largest field.
    const bool resonator = mode == GapFitMode::resonator;
    double value_at_max = 0.0;
    for (const auto& d : data)
        if (d.x == b_max) value_at_max = d.y;
    const double scale0 = resonator ? v_max : 1.0;
    double rel = std::clamp(value_at_max / scale0, 0.05, 0.999);
    if (resonator) rel = rel * rel; // undo the fourth root against the square-root form
    const double bc0 = b_max / std::sqrt(1.0 - rel * rel);

    auto shape = [](double b, double bc) {
        const double r = b / bc;
        return r < 1.0 ? std::sqrt(1.0 - r * r) : 0.0;
    };
    numerics::ScalarModel model;
    Eigen::VectorXd init;
    std::vector<numerics::Interval> bounds;
    if (resonator) {
        model = [&](double b, const Eigen::VectorXd& p) { return p[1] * std::sqrt(shape(b, p[0])); };
        init = Eigen::Vector2d(bc0, scale0);
        bounds = {{b_max * (1.0 + 1e-9), 1e6}, {0.0, 1e30}};
    } else {
        model = [&](double b, const Eigen::VectorXd& p) { return shape(b, p[0]); };
        init = Eigen::VectorXd::Constant(1, bc0);
        bounds = {{b_max * (1.0 + 1e-9), 1e6}};
    }
    CriticalFieldFit out;
    out.fit = numerics::least_squares_fit(model, data, init, bounds);
    out.critical_field = out.fit.parameters[0];
    out.critical_field_error = out.fit.standard_error(0);
    out.zero_field_value = resonator ? out.fit.parameters[1] : 1.0;
    return out;
}

} // namespace fieldqubit::field
