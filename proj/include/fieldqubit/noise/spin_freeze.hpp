#pragma once

#include "fieldqubit/constants.hpp"
#include "fieldqubit/error.hpp"
#include "fieldqubit/numerics/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace fieldqubit::noise {

/// Flux-noise power of a g = 2 spin bath that freezes out in field:
/// A(B) = floor + A0 / cosh^2(mu_B B / k_B T_S). Powers in Phi_0^2.
struct SpinFreezeModel {
    double a0 = 0.0;
    double spin_temperature = 0.0; // K
    double floor = 0.0;

    void validate() const {
        require(a0 >= 0.0 && floor >= 0.0, "SpinFreezeModel: A0 and floor must be >= 0");
        require(spin_temperature > 0.0, "SpinFreezeModel: T_S must be > 0");
    }
};

inline double flux_noise_power(double field, const SpinFreezeModel& model) {
    model.validate();
    const double x = constants::bohr_magneton * field / (constants::boltzmann * model.spin_temperature);
    // 1/cosh^2 underflows cleanly to zero for large x.
    const double sech = std::abs(x) > 350.0 ? 0.0 : 1.0 / std::cosh(x);
    return model.floor + model.a0 * sech * sech;
}

struct AmplitudeSample {
    double field = 0.0;     // T
    double amplitude = 0.0; // sqrt(A_Phi), Phi_0
    double sigma = 1.0;
};

struct SpinTemperatureFit {
    numerics::FitResult fit;
    SpinFreezeModel model;
    double spin_temperature_error = 0.0;
};

/// Fits sqrt(flux_noise_power(B)) to amplitude samples. Parameters are
/// (sqrt(A0), T_S) and, with include_floor, sqrt(floor).
inline SpinTemperatureFit fit_spin_temperature(std::span<const AmplitudeSample> samples, bool include_floor) {
    require(samples.size() >= (include_floor ? 4u : 3u), "fit_spin_temperature: need at least 3 field points");
    std::vector<AmplitudeSample> sorted(samples.begin(), samples.end());
    for (auto& s : sorted) {
        require(std::isfinite(s.field) && std::isfinite(s.amplitude) && s.sigma > 0.0,
                "fit_spin_temperature: bad sample");
        s.field = std::abs(s.field);
    }
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.field < b.field; });

    const double first = sorted.front().amplitude;
    double lo = first, hi = first;
    bool nondecreasing = true;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        lo = std::min(lo, sorted[i].amplitude);
        hi = std::max(hi, sorted[i].amplitude);
        if (i > 0 && sorted[i].amplitude < sorted[i - 1].amplitude) nondecreasing = false;
    }
    if (hi - lo <= 1e-9 * std::max(std::abs(hi), 1e-300))
        fail(ErrorKind::non_identifiable, "fit_spin_temperature: constant data, T_S unbounded");
    if (nondecreasing)
        fail(ErrorKind::non_physical, "fit_spin_temperature: amplitude increases with field");

    const double field_max = sorted.back().field;
    const double field_scale = constants::bohr_magneton / constants::boltzmann;
    // Initial T_S from the largest observed suppression.
    const double base = include_floor ? 0.5 * lo : 0.0;
    const double ratio = std::max((hi - base) / std::max(lo - base, 1e-3 * hi), 1.0 + 1e-6);
    const double t0 = field_scale * field_max / std::acosh(std::min(ratio, 1e6));

    std::vector<numerics::DataPoint> data;
    for (const auto& s : sorted) data.push_back({s.field, s.amplitude, s.sigma});
    auto model = [&](double b, const Eigen::VectorXd& p) {
        SpinFreezeModel m{p[0] * p[0], p[1], include_floor ? p[2] * p[2] : 0.0};
        return std::sqrt(flux_noise_power(b, m));
    };
    Eigen::VectorXd init(include_floor ? 3 : 2);
    init[0] = hi;
    init[1] = t0;
    std::vector<numerics::Interval> bounds{{0.0, 1e30}, {1e-6, 1e3}};
    if (include_floor) {
        init[2] = base > 0.0 ? base : 0.1 * lo;
        bounds.push_back({0.0, 1e30});
    }
    SpinTemperatureFit out;
    out.fit = numerics::least_squares_fit(model, data, init, bounds);
    const auto& p = out.fit.parameters;
    if (p[1] >= 0.999 * bounds[1].upper)
        fail(ErrorKind::non_identifiable, "fit_spin_temperature: T_S ran to its upper bound");
    out.model = {p[0] * p[0], p[1], include_floor ? p[2] * p[2] : 0.0};
    out.spin_temperature_error = out.fit.standard_error(1);
    return out;
}

} // namespace fieldqubit::noise
