#pragma once

#include "fieldqubit/error.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace fieldqubit::noise {

/// Time-stamped excited-state population trace. Weights, when present,
/// multiply the residual of each sample (i.e. act as 1/sigma).
struct DecayCurve {
    std::vector<double> times;       // s, strictly increasing
    std::vector<double> populations; // in [0, 1]
    std::vector<double> weights;     // empty or same length

    std::size_t size() const { return times.size(); }

    double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }

    void validate() const {
        require(times.size() == populations.size(), "DecayCurve: times and populations differ in length");
        require(weights.empty() || weights.size() == times.size(), "DecayCurve: weights length mismatch");
        for (std::size_t i = 0; i < times.size(); ++i) {
            require(std::isfinite(times[i]), "DecayCurve: non-finite time");
            if (i > 0) require(times[i] > times[i - 1], "DecayCurve: times must be strictly increasing");
            require(populations[i] >= 0.0 && populations[i] <= 1.0,
                    "DecayCurve: population out of [0, 1] at index " + std::to_string(i));
            if (!weights.empty()) require(weights[i] >= 0.0 && std::isfinite(weights[i]), "DecayCurve: bad weight");
        }
    }
};

} // namespace fieldqubit::noise
