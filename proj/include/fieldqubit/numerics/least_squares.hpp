#pragma once

#include "fieldqubit/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace fieldqubit::numerics {

struct Interval {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
};

struct FitOptions {
    int max_iterations = 200;
    double ftol = 1e-13;   // relative cost decrease
    double xtol = 1e-13;   // relative step size
    double gtol = 1e-16;   // scaled gradient
    double relative_step = 1e-6;
    /// Typical parameter magnitudes for difference steps and scaling; empty
    /// means "use |init|, or 1 where init is zero".
    std::vector<double> typical;
    /// Scale covariance by the reduced chi-square.
    bool scale_covariance = true;
    double rank_tolerance = 1e-10;
};

struct FitResult {
    Eigen::VectorXd parameters;
    Eigen::MatrixXd covariance;
    double residual_norm = 0.0;
    double initial_residual_norm = 0.0;
    bool converged = false;
    bool identifiable = true;
    int iterations = 0;

    double standard_error(Eigen::Index i) const { return std::sqrt(std::max(0.0, covariance(i, i))); }
};

/// Residual callback: fill `residuals` (already sized) for the given parameters.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& parameters, Eigen::Ref<Eigen::VectorXd> residuals)>;

namespace detail {

inline Eigen::VectorXd clamp(Eigen::VectorXd p, std::span<const Interval> bounds) {
    for (std::size_t j = 0; j < bounds.size(); ++j)
        p[static_cast<Eigen::Index>(j)] =
            std::clamp(p[static_cast<Eigen::Index>(j)], bounds[j].lower, bounds[j].upper);
    return p;
}

inline double half_squared_norm(const Eigen::VectorXd& r) {
    return r.allFinite() ? 0.5 * r.squaredNorm() : std::numeric_limits<double>::infinity();
}

} // namespace detail

/// Levenberg-Marquardt minimisation of 0.5*|r(p)|^2 with a central-difference
/// Jacobian and box constraints enforced by projection.
inline FitResult least_squares(const ResidualFunction& residual, std::size_t residual_count,
                               const Eigen::VectorXd& init, std::span<const Interval> bounds = {},
                               const FitOptions& options = {}) {
    const Eigen::Index n = init.size();
    const auto m = static_cast<Eigen::Index>(residual_count);
    require(n >= 1, "least_squares: no parameters");
    require(m >= n, "least_squares: fewer residuals than parameters");
    require(bounds.empty() || bounds.size() == static_cast<std::size_t>(n),
            "least_squares: bounds size mismatch");
    require(options.typical.empty() || options.typical.size() == static_cast<std::size_t>(n),
            "least_squares: typical size mismatch");
    for (const auto& b : bounds) require(b.lower <= b.upper, "least_squares: empty bound interval");

    Eigen::VectorXd typical(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double t = options.typical.empty() ? std::abs(init[j])
                                                 : std::abs(options.typical[static_cast<std::size_t>(j)]);
        typical[j] = t > 0.0 ? t : 1.0;
    }

    auto evaluate = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(m);
        residual(p, r);
        return r;
    };

    auto jacobian = [&](const Eigen::VectorXd& p) {
        Eigen::MatrixXd jac(m, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double h = options.relative_step * std::max(std::abs(p[j]), typical[j]);
            Eigen::VectorXd plus = p;
            Eigen::VectorXd minus = p;
            plus[j] += h;
            minus[j] -= h;
            if (!bounds.empty()) {
                const auto& b = bounds[static_cast<std::size_t>(j)];
                plus[j] = std::min(plus[j], b.upper);
                minus[j] = std::max(minus[j], b.lower);
            }
            const double span = plus[j] - minus[j];
            if (span <= 0.0) {
                jac.col(j).setZero();
                continue;
            }
            jac.col(j) = (evaluate(plus) - evaluate(minus)) / span;
        }
        return jac;
    };

    FitResult out;
    Eigen::VectorXd p = detail::clamp(init, bounds);
    Eigen::VectorXd r = evaluate(p);
    double cost = detail::half_squared_norm(r);
    if (!std::isfinite(cost)) fail(ErrorKind::numerical_failure, "least_squares: non-finite residual at init");
    out.initial_residual_norm = std::sqrt(2.0 * cost);

    double lambda = 1e-3;
    bool converged = false;
    int iteration = 0;
    for (; iteration < options.max_iterations && !converged; ++iteration) {
        const Eigen::MatrixXd jac = jacobian(p);
        const Eigen::VectorXd gradient = jac.transpose() * r;
        const Eigen::MatrixXd normal = jac.transpose() * jac;

        if ((gradient.array().abs() * typical.array()).maxCoeff() <= options.gtol * std::max(cost, 1e-300)) {
            converged = true;
            break;
        }
        if (cost == 0.0) {
            converged = true;
            break;
        }

        Eigen::VectorXd diag = normal.diagonal();
        const double diag_max = std::max(diag.maxCoeff(), 1e-300);
        for (Eigen::Index j = 0; j < n; ++j) diag[j] = std::max(diag[j], 1e-12 * diag_max);

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = normal;
            damped.diagonal() += lambda * diag;
            const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
            if (!step.allFinite()) {
                lambda *= 10.0;
            } else {
                Eigen::VectorXd trial = detail::clamp(p + step, bounds);
                Eigen::VectorXd trial_r = evaluate(trial);
                const double trial_cost = detail::half_squared_norm(trial_r);
                if (trial_cost < cost) {
                    const double decrease = cost - trial_cost;
                    const double moved = ((trial - p).array() / typical.array()).abs().maxCoeff();
                    const double size = (p.array() / typical.array()).abs().maxCoeff();
                    p = std::move(trial);
                    r = std::move(trial_r);
                    cost = trial_cost;
                    lambda = std::max(lambda / 3.0, 1e-15);
                    accepted = true;
                    if (decrease <= options.ftol * (cost + decrease) ||
                        moved <= options.xtol * (size + options.xtol))
                        converged = true;
                } else {
                    lambda *= 4.0;
                }
            }
            if (!accepted && lambda > 1e16) {
                // No descent direction left at working precision.
                converged = true;
                break;
            }
        }
    }

    out.parameters = p;
    out.residual_norm = std::sqrt(2.0 * cost);
    out.converged = converged;
    out.iterations = iteration;

    // Covariance from the scaled Jacobian's SVD; rank deficiency flags
    // parameters the data cannot pin down.
    const Eigen::MatrixXd jac = jacobian(p);
    Eigen::VectorXd scale(n);
    for (Eigen::Index j = 0; j < n; ++j) scale[j] = std::max(std::abs(p[j]), typical[j]);
    const Eigen::MatrixXd scaled = jac * scale.asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    const double sv_max = sv.size() > 0 ? sv[0] : 0.0;
    Eigen::VectorXd inv_sq = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        if (sv_max > 0.0 && sv[k] > options.rank_tolerance * sv_max)
            inv_sq[k] = 1.0 / (sv[k] * sv[k]);
        else
            out.identifiable = false;
    }
    const Eigen::MatrixXd& v = svd.matrixV();
    Eigen::MatrixXd cov = v * inv_sq.asDiagonal() * v.transpose();
    cov = scale.asDiagonal() * cov * scale.asDiagonal();
    if (options.scale_covariance && m > n) cov *= 2.0 * cost / static_cast<double>(m - n);
    out.covariance = 0.5 * (cov + cov.transpose());
    return out;
}

struct DataPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 1.0;
};

using ScalarModel = std::function<double(double x, const Eigen::VectorXd& parameters)>;

/// Weighted curve fit of y(x) = model(x; p) to (x, y, sigma) triples.
inline FitResult least_squares_fit(const ScalarModel& model, std::span<const DataPoint> data,
                                   const Eigen::VectorXd& init, std::span<const Interval> bounds = {},
                                   const FitOptions& options = {}) {
    require(data.size() >= static_cast<std::size_t>(init.size()),
            "least_squares_fit: fewer data points than parameters");
    for (const auto& d : data) {
        require(d.sigma > 0.0, "least_squares_fit: sigma must be positive");
        require(std::isfinite(d.x) && std::isfinite(d.y), "least_squares_fit: non-finite data");
    }
    auto residual = [&](const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> r) {
        for (std::size_t i = 0; i < data.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = (data[i].y - model(data[i].x, p)) / data[i].sigma;
    };
    return least_squares(residual, data.size(), init, bounds, options);
}

} // namespace fieldqubit::numerics
