#pragma once

#include <Eigen/Dense>

#include "avgctl/errors.hpp"

namespace avgctl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Controllability Gramian W(tau) = int_0^tau e^{-As} B B^T e^{-A^T s} ds,
// produced by two independent routes that must agree (see gramian()).
struct Gramian {
    double tau = 0.0;
    Matrix W;
    double cond_estimate = 0.0;  // sigma_max / sigma_min, +inf when singular
};

// e^{M t} by scaling-and-squaring over a degree-16 truncated series.
// Squaring count is taken from ||M t|| so the scaled norm is <= 1/2.
Matrix expm(const Matrix& M, double t = 1.0);

// Numerical rank of [B, AB, ..., A^{m-1}B]; singular values below
// max(m, m*k) * sigma_max * 1e-12 count as zero.
int kalman_rank(const Matrix& A, const Matrix& B);

// Dual-route Gramian: block-augmented exponential cross-checked against
// adaptive Gauss-Legendre quadrature to 1e-10 relative; disagreement raises
// NumericalFailure. The returned W is symmetrized.
Gramian gramian(const Matrix& A, const Matrix& B, double tau);

// Largest singular value.
double spectral_norm(const Matrix& M);

}  // namespace avgctl
