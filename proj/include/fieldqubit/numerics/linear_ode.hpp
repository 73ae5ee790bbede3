#pragma once

#include "fieldqubit/error.hpp"
#include "fieldqubit/numerics/eigh.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <optional>
#include <utility>

namespace fieldqubit::numerics {

/// Linear time-invariant system dx/dt = generator * x + drive.
class RateMatrix {
public:
    RateMatrix(Eigen::MatrixXd generator, Eigen::VectorXd drive)
        : generator_(std::move(generator)), drive_(std::move(drive)) {
        require(generator_.rows() >= 1, "RateMatrix: dimension must be >= 1");
        require(generator_.rows() == generator_.cols(), "RateMatrix: generator must be square");
        require(drive_.size() == generator_.rows(), "RateMatrix: drive dimension mismatch");
        require(generator_.allFinite() && drive_.allFinite(), "RateMatrix: non-finite entries");
    }

    Eigen::Index dimension() const { return generator_.rows(); }
    const Eigen::MatrixXd& generator() const { return generator_; }
    const Eigen::VectorXd& drive() const { return drive_; }

    bool symmetric() const { return generator_ == generator_.transpose(); }

private:
    Eigen::MatrixXd generator_;
    Eigen::VectorXd drive_;
};

/// (e^{x t} - 1) / x, continuous at x = 0.
inline double expm1_ratio(double rate, double t) {
    const double z = rate * t;
    if (std::abs(z) < 1e-8) return t * (1.0 + 0.5 * z);
    return std::expm1(z) / rate;
}

/// Exact propagator for a RateMatrix. Symmetric generators are diagonalised
/// once and then advanced in closed form for any duration; other generators
/// use the matrix exponential of the drive-augmented system.
class LinearPropagator {
public:
    explicit LinearPropagator(RateMatrix system) : system_(std::move(system)) {
        if (system_.symmetric()) {
            auto es = eigh(SymmetricMatrix(system_.generator()));
            modal_drive_ = es.vectors.transpose() * system_.drive();
            modes_ = std::move(es);
        }
    }

    const RateMatrix& system() const { return system_; }
    bool spectral() const { return modes_.has_value(); }
    const Eigensystem& modes() const { return *modes_; }

    Eigen::VectorXd advance(const Eigen::VectorXd& state, double duration) const {
        require(state.size() == system_.dimension(), "propagate_linear: state dimension mismatch");
        require(duration >= 0.0 && std::isfinite(duration), "propagate_linear: duration must be >= 0");
        if (duration == 0.0) return state;
        if (modes_) {
            Eigen::VectorXd y = modes_->vectors.transpose() * state;
            for (Eigen::Index k = 0; k < y.size(); ++k) {
                const double lambda = modes_->values[k];
                y[k] = std::exp(lambda * duration) * y[k] + expm1_ratio(lambda, duration) * modal_drive_[k];
            }
            return modes_->vectors * y;
        }
        const auto [a, b] = affine_map(duration);
        return a * state + b;
    }

    /// Returns (A, b) with x(t) = A x(0) + b.
    std::pair<Eigen::MatrixXd, Eigen::VectorXd> affine_map(double duration) const {
        require(duration >= 0.0 && std::isfinite(duration), "propagate_linear: duration must be >= 0");
        const Eigen::Index n = system_.dimension();
        if (modes_) {
            Eigen::VectorXd growth(n);
            Eigen::VectorXd integral(n);
            for (Eigen::Index k = 0; k < n; ++k) {
                growth[k] = std::exp(modes_->values[k] * duration);
                integral[k] = expm1_ratio(modes_->values[k], duration) * modal_drive_[k];
            }
            const auto& v = modes_->vectors;
            return {v * growth.asDiagonal() * v.transpose(), v * integral};
        }
        Eigen::MatrixXd augmented = Eigen::MatrixXd::Zero(n + 1, n + 1);
        augmented.topLeftCorner(n, n) = system_.generator() * duration;
        augmented.topRightCorner(n, 1) = system_.drive() * duration;
        const Eigen::MatrixXd e = augmented.exp();
        if (!e.allFinite()) fail(ErrorKind::numerical_failure, "propagate_linear: matrix exponential overflow");
        return {e.topLeftCorner(n, n), e.topRightCorner(n, 1)};
    }

private:
    RateMatrix system_;
    std::optional<Eigensystem> modes_;
    Eigen::VectorXd modal_drive_;
};

/// Solution of dx/dt = G x + d at t = duration.
inline Eigen::VectorXd propagate_linear(const RateMatrix& system, const Eigen::VectorXd& state0,
                                        double duration) {
    require(state0.size() == system.dimension(), "propagate_linear: state dimension mismatch");
    return LinearPropagator(system).advance(state0, duration);
}

} // namespace fieldqubit::numerics
