#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into Eigen's solvers.

#include "fieldqubit/numerics/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd random_symmetric(int n, std::uint64_t seed, double scale = 1.0) {
    fieldqubit::numerics::Rng rng(seed);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) m(i, j) = m(j, i) = scale * rng.uniform(-1.0, 1.0);
    return m;
}

/// det(A) by Gaussian elimination with partial pivoting.
inline double determinant(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
        if (a[pivot][c] == 0.0) return 0.0;
        if (pivot != c) {
            std::swap(a[pivot], a[c]);
            det = -det;
        }
        det *= a[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return det;
}

inline double characteristic(const Eigen::MatrixXd& m, double lambda) {
    const auto n = static_cast<std::size_t>(m.rows());
    std::vector<std::vector<double>> a(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a[i][j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - (i == j ? lambda : 0.0);
    return determinant(a);
}

/// Roots of det(M - lambda I) bracketed on a fine grid over the Gershgorin
/// interval and refined by bisection.
inline std::vector<double> eigenvalues_by_root_finding(const Eigen::MatrixXd& m, int grid = 200000) {
    double lo = 0.0, hi = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double radius = m.row(i).cwiseAbs().sum() - std::abs(m(i, i));
        lo = std::min(lo, m(i, i) - radius);
        hi = std::max(hi, m(i, i) + radius);
    }
    lo -= 1e-3;
    hi += 1e-3;
    std::vector<double> roots;
    double x0 = lo, f0 = characteristic(m, lo);
    for (int k = 1; k <= grid; ++k) {
        const double x1 = lo + (hi - lo) * k / grid;
        const double f1 = characteristic(m, x1);
        if (f0 == 0.0) roots.push_back(x0);
        else if ((f0 < 0.0) != (f1 < 0.0)) {
            double a = x0, b = x1, fa = f0;
            for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
                const double mid = 0.5 * (a + b);
                const double fm = characteristic(m, mid);
                if ((fm < 0.0) == (fa < 0.0)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    return roots;
}

/// Explicit Euler for dx/dt = G x + d with a fixed number of steps.
inline Eigen::VectorXd euler(const Eigen::MatrixXd& g, const Eigen::VectorXd& d, Eigen::VectorXd x, double t,
                             long steps) {
    const double h = t / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) x += h * (g * x + d);
    return x;
}

/// Classical RK4 with a fixed number of steps.
inline Eigen::VectorXd rk4(const Eigen::MatrixXd& g, const Eigen::VectorXd& d, Eigen::VectorXd x, double t,
                           long steps) {
    const double h = t / static_cast<double>(steps);
    auto f = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return g * y + d; };
    for (long s = 0; s < steps; ++s) {
        const Eigen::VectorXd k1 = f(x);
        const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
        const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
        const Eigen::VectorXd k4 = f(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

/// Lowest eigenvalues of a symmetric tridiagonal matrix (diag a, off-diag b)
/// by Sturm-sequence bisection.
inline std::vector<double> tridiagonal_lowest(const std::vector<double>& a, const std::vector<double>& b, int count) {
    const std::size_t n = a.size();
    double lo = a[0], hi = a[0];
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (i > 0 ? std::abs(b[i - 1]) : 0.0) + (i + 1 < n ? std::abs(b[i]) : 0.0);
        lo = std::min(lo, a[i] - r);
        hi = std::max(hi, a[i] + r);
    }
    // Number of eigenvalues strictly below x.
    auto below = [&](double x) {
        int count_neg = 0;
        double q = a[0] - x;
        if (q < 0) ++count_neg;
        for (std::size_t i = 1; i < n; ++i) {
            if (q == 0.0) q = 1e-300;
            q = a[i] - x - b[i - 1] * b[i - 1] / q;
            if (q < 0) ++count_neg;
        }
        return count_neg;
    };
    std::vector<double> out;
    for (int k = 0; k < count; ++k) {
        double l = lo, h = hi;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (l + h);
            if (below(mid) > k) h = mid;
            else l = mid;
        }
        out.push_back(0.5 * (l + h));
    }
    return out;
}

/// Fluxonium levels (GHz) from a second-order finite-difference
/// discretisation in phase on [-w, w] with `points` nodes:
/// H = -4 E_C d^2/dphi^2 + E_L/2 (phi - phi_ext)^2 - E_J cos(phi).
inline std::vector<double> phase_grid_levels(double ec, double el, double ej, double flux, int points, double half_width,
                                             int count = 3) {
    const double phi_ext = 2.0 * M_PI * flux;
    const double h = 2.0 * half_width / (points + 1);
    const double kinetic = 4.0 * ec / (h * h);
    std::vector<double> a(static_cast<std::size_t>(points)), b(static_cast<std::size_t>(points - 1), -kinetic);
    for (int i = 0; i < points; ++i) {
        const double phi = phi_ext - half_width + h * (i + 1);
        a[static_cast<std::size_t>(i)] = 2.0 * kinetic + 0.5 * el * (phi - phi_ext) * (phi - phi_ext) - ej * std::cos(phi);
    }
    return tridiagonal_lowest(a, b, count);
}

/// Richardson-extrapolated phase-grid levels (second-order scheme).
inline std::vector<double> phase_grid_levels_extrapolated(double ec, double el, double ej, double flux, int points,
                                                          double half_width, int count = 3) {
    const auto coarse = phase_grid_levels(ec, el, ej, flux, points, half_width, count);
    const auto fine = phase_grid_levels(ec, el, ej, flux, 2 * points + 1, half_width, count);
    std::vector<double> out;
    for (int k = 0; k < count; ++k) out.push_back((4.0 * fine[k] - coarse[k]) / 3.0);
    return out;
}

/// Simpson integration of f over [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + h * i) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

} // namespace oracle
