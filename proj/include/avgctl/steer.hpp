#pragma once

#include "avgctl/linops.hpp"

namespace avgctl {

// Gramian condition limit beyond which steering is refused.
inline constexpr double kSteerCondLimit = 1e12;

// Steering durations below this floor are not scheduled; W(tau) becomes
// numerically singular well before tau reaches machine scale.
inline constexpr double kMinSteerDuration = 1e-4;

// Minimum-energy open-loop segment: u(sigma) = B^T e^{-A^T sigma} xi drives
// the associated system from y_from to y_to over [0, duration].
struct SteerSegment {
    Vector xi;
    double duration = 0.0;
    Matrix A_ref;
    Matrix B_ref;
    Vector y_from;
    Vector y_to;
};

// Solves W(tau) xi = e^{-A tau} y_to - y_from through a symmetric
// eigen-factorization with one refinement pass.
SteerSegment steering_gain(const Matrix& A, const Matrix& B, const Vector& y_from,
                           const Vector& y_to, double tau);

Vector eval_steer_control(const SteerSegment& seg, double sigma);

// RK4-integrates the associated system under the segment control and returns
// the endpoint miss ||y(duration) - y_to||.
double steer_and_check(const Matrix& A, const Matrix& B, const SteerSegment& seg,
                       double rk4_step);

}  // namespace avgctl
