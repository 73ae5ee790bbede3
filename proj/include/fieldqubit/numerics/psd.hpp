#pragma once

#include "fieldqubit/error.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace fieldqubit::numerics {

struct Spectrum {
    std::vector<double> frequencies;  // Hz
    std::vector<double> values;       // power per Hz, one-sided
};

/// Averaged periodogram over `segments` non-overlapping, mean-removed,
/// Hann-windowed segments. One-sided density: the sum of values times the bin
/// width approximates the trace variance.
inline Spectrum estimate_psd(std::span<const double> samples, double dt, std::size_t segments) {
    require(dt > 0.0 && std::isfinite(dt), "estimate_psd: dt must be positive");
    require(segments >= 1, "estimate_psd: segments must be >= 1");
    require(samples.size() >= 2 * segments, "estimate_psd: trace too short for segment count");
    const std::size_t length = samples.size() / segments;

    std::vector<double> window(length, 1.0);
    if (length > 1)
        for (std::size_t i = 0; i < length; ++i)
            window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                              static_cast<double>(length));
    double window_power = 0.0;
    for (double w : window) window_power += w * w;

    const std::size_t bins = length / 2 + 1;
    Spectrum out;
    out.frequencies.resize(bins);
    out.values.assign(bins, 0.0);
    const double df = 1.0 / (static_cast<double>(length) * dt);
    for (std::size_t k = 0; k < bins; ++k) out.frequencies[k] = static_cast<double>(k) * df;

    Eigen::FFT<double> fft;
    std::vector<double> buffer(length);
    std::vector<std::complex<double>> transform;
    for (std::size_t s = 0; s < segments; ++s) {
        const auto segment = samples.subspan(s * length, length);
        double mean = 0.0;
        for (double v : segment) mean += v;
        mean /= static_cast<double>(length);
        for (std::size_t i = 0; i < length; ++i) buffer[i] = (segment[i] - mean) * window[i];
        fft.fwd(transform, buffer);
        for (std::size_t k = 0; k < bins; ++k) {
            double p = std::norm(transform[k]) * dt / window_power;
            const bool edge = k == 0 || (length % 2 == 0 && k == length / 2);
            if (!edge) p *= 2.0;
            out.values[k] += p;
        }
    }
    for (double& v : out.values) v /= static_cast<double>(segments);
    return out;
}

} // namespace fieldqubit::numerics
