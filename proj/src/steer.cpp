#include "avgctl/steer.hpp"

#include <cmath>

#include "avgctl/integrate.hpp"

namespace avgctl {

SteerSegment steering_gain(const Matrix& A, const Matrix& B, const Vector& y_from,
                           const Vector& y_to, double tau) {
    if (y_from.size() != A.rows() || y_to.size() != A.rows())
        throw DimensionError("steering_gain: endpoint dimension mismatch");
    if (!(tau > 0.0)) throw DomainError("steering_gain: tau must be > 0");

    Gramian g = gramian(A, B, tau);
    if (!(g.cond_estimate <= kSteerCondLimit))
        throw SteeringIllConditioned(
            "steering Gramian condition estimate " + std::to_string(g.cond_estimate) +
            " exceeds " + std::to_string(kSteerCondLimit) + "; suggest a larger tau");

    Vector rhs = expm(A, -tau) * y_to - y_from;

    // Symmetric eigen-factorization with a relative pivot floor of 1e-14,
    // then one iterative-refinement pass.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g.W);
    const Vector& lam = eig.eigenvalues();
    const Matrix& Q = eig.eigenvectors();
    const double floor = 1e-14 * std::max(lam.cwiseAbs().maxCoeff(), 0.0);
    auto solve = [&](const Vector& b) {
        Vector c = Q.transpose() * b;
        for (Eigen::Index i = 0; i < c.size(); ++i)
            c(i) = (lam(i) > floor && lam(i) > 0.0) ? c(i) / lam(i) : 0.0;
        return Vector(Q * c);
    };
    Vector xi = solve(rhs);
    xi += solve(rhs - g.W * xi);

    SteerSegment seg;
    seg.xi = xi;
    seg.duration = tau;
    seg.A_ref = A;
    seg.B_ref = B;
    seg.y_from = y_from;
    seg.y_to = y_to;
    return seg;
}

Vector eval_steer_control(const SteerSegment& seg, double sigma) {
    const double slack = 1e-12 * std::max(1.0, seg.duration);
    if (sigma < -slack || sigma > seg.duration + slack)
        throw DomainError("eval_steer_control: sigma outside [0, duration]");
    return seg.B_ref.transpose() * expm(seg.A_ref, -sigma).transpose() * seg.xi;
}

double steer_and_check(const Matrix& A, const Matrix& B, const SteerSegment& seg,
                       double rk4_step) {
    if (!(rk4_step <= seg.duration / 10.0))
        throw DomainError("steer_and_check: rk4_step must be <= duration/10");
    auto f = [&](double sigma, const Vector& y) {
        return Vector(A * y + B * eval_steer_control(seg, sigma));
    };
    Vector y_end = rk4(f, seg.y_from, 0.0, seg.duration, rk4_step);
    return (y_end - seg.y_to).norm();
}

}  // namespace avgctl
