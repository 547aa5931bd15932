#pragma once

// Test-side oracles, independent of the implementation paths they check:
// Bessel characteristic equation for the clamped-ball eigenvalue, the
// partial-fraction closed form of the quadratic upper-bound integral, and
// dense eigensolves for coarse operator checks.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "quenchlab/operators.hpp"

namespace oracles {

/// Characteristic function of the clamped ball of radius 1 in dimension N:
/// with nu = N/2 - 1, radial eigenfunctions r^{-nu}(A J_nu(kr) + B I_nu(kr))
/// satisfy value and slope zero at r = 1 iff
/// J_nu(k) I_{nu+1}(k) + I_nu(k) J_{nu+1}(k) = 0; Lambda1 = k^4.
inline double clamped_ball_characteristic(int dimension, double k) {
    const double nu = 0.5 * dimension - 1.0;
    return std::cyl_bessel_j(nu, k) * std::cyl_bessel_i(nu + 1.0, k) +
           std::cyl_bessel_i(nu, k) * std::cyl_bessel_j(nu + 1.0, k);
}

/// First root of the characteristic equation by bisection (shooting oracle).
inline double clamped_ball_k1(int dimension) {
    double lo = 2.0, hi = 0.0;
    double flo = clamped_ball_characteristic(dimension, lo);
    for (double k = 2.1; k < 12.0; k += 0.1) {
        const double fk = clamped_ball_characteristic(dimension, k);
        if (flo * fk < 0.0) {
            hi = k;
            break;
        }
        lo = k;
        flo = fk;
    }
    if (hi == 0.0) throw std::runtime_error("no characteristic root found");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (clamped_ball_characteristic(dimension, lo) *
                clamped_ball_characteristic(dimension, mid) <=
            0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

inline double clamped_ball_lambda1(int dimension, double radius) {
    const double k = clamped_ball_k1(dimension);
    return std::pow(k / radius, 4.0);
}

/// Closed form of the integral of 1/H from psi0 to infinity when H is the
/// quadratic a eta^2 + b eta + cc with real roots r1 < r2 < psi0:
/// (1/(a (r2-r1))) log((psi0-r1)/(psi0-r2)).
inline double quadratic_tail_integral(double a, double b, double cc, double psi0) {
    const double disc = b * b - 4.0 * a * cc;
    if (!(a > 0.0) || !(disc > 0.0)) throw std::invalid_argument("not a two-root quadratic");
    const double root = std::sqrt(disc);
    const double r1 = (-b - root) / (2.0 * a);
    const double r2 = (-b + root) / (2.0 * a);
    if (!(psi0 > r2)) throw std::invalid_argument("psi0 must lie right of both roots");
    return std::log((psi0 - r1) / (psi0 - r2)) / (a * (r2 - r1));
}

/// Smallest generalized eigenvalue of the pencil (form, diag(weights)) by a
/// dense solve; coarse-resolution cross-check of the sparse path.
inline double dense_smallest_eigenvalue(const quenchlab::DiscreteOperator& op) {
    const Eigen::MatrixXd F = Eigen::MatrixXd(op.form());
    const Eigen::MatrixXd W = op.interior_weights().asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(F, W);
    if (es.info() != Eigen::Success) throw std::runtime_error("dense eigensolve failed");
    return es.eigenvalues()(0);
}

}  // namespace oracles
