#pragma once

#include "fieldqubit/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

namespace fieldqubit::numerics {

/// Dense real symmetric matrix. Symmetry is checked exactly on construction.
class SymmetricMatrix {
public:
    explicit SymmetricMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
        require(entries_.rows() >= 1, "SymmetricMatrix: dimension must be >= 1");
        require(entries_.rows() == entries_.cols(), "SymmetricMatrix: matrix must be square");
        for (Eigen::Index i = 0; i < entries_.rows(); ++i)
            for (Eigen::Index j = i + 1; j < entries_.cols(); ++j)
                require(entries_(i, j) == entries_(j, i) ||
                            (std::isnan(entries_(i, j)) && std::isnan(entries_(j, i))),
                        "SymmetricMatrix: entries not symmetric at (" + std::to_string(i) +
                            ", " + std::to_string(j) + ")");
    }

    std::size_t dimension() const { return static_cast<std::size_t>(entries_.rows()); }
    const Eigen::MatrixXd& entries() const { return entries_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

private:
    Eigen::MatrixXd entries_;
};

struct Eigensystem {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // orthonormal columns
};

/// Eigen-decomposition of a symmetric matrix (Householder tridiagonalization
/// followed by implicit symmetric QR).
inline Eigensystem eigh(const SymmetricMatrix& m) {
    if (!m.entries().allFinite()) fail(ErrorKind::invalid_input, "eigh: non-finite entries");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.entries());
    if (solver.info() != Eigen::Success) fail(ErrorKind::numerical_failure, "eigh: no convergence");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Eigenvalues only; cheaper when vectors are not needed.
inline Eigen::VectorXd eigvalsh(const SymmetricMatrix& m) {
    if (!m.entries().allFinite()) fail(ErrorKind::invalid_input, "eigvalsh: non-finite entries");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.entries(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        fail(ErrorKind::numerical_failure, "eigvalsh: no convergence");
    return solver.eigenvalues();
}

} // namespace fieldqubit::numerics
