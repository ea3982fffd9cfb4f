#pragma once

#include "avgctl/track.hpp"

namespace avgctl {

// Piecewise-constant relaxed control: per piece, convex weights over
// (u_i, y_i) atoms; realizes dz/dt = sum_i lambda_i g(u_i, y_i, z).
struct RelaxedControl {
    std::vector<RelaxedPieceSpec> pieces;

    double horizon() const { return pieces.empty() ? 0.0 : pieces.back().t_end; }
};

ReferenceTrajectory solve_relaxed_ode(const SlowDynamics& slow, const Vector& z0,
                                      const RelaxedControl& rc, double step);

// Builds the scenario's reference trajectory (constant-derivative, relaxed
// schedule, or trajectory file) on a grid of step <= epsS/10.
ReferenceTrajectory build_reference(const Scenario& sc);

struct OptimizeResult {
    RelaxedControl control;
    double G_hat_star = 0.0;
    int starts = 0;
    long evaluations = 0;
};

// Minimizes G(z(T)) over piecewise-constant pure controls (u, y) in the
// scenario boxes via seeded multi-start coordinate pattern search.
// Deterministic given the scenario seed; a heuristic, so acceptance only
// uses problems with known analytic optima.
OptimizeResult optimize_terminal(const Scenario& sc, int pieces, long budget);

struct CorollaryReport {
    double G_hat_star = 0.0;
    double G_hat_eps = 0.0;
    double gap = 0.0;
    double budget = 0.0;  // Lipschitz(G) over the reachable ball x tracking bound
    double S = 0.0;
    double eps = 0.0;
    int starts = 0;
    double max_projection_dist = 0.0;
    bool ordering_ok = false;  // G_hat_eps >= G_hat_star - 1e-6
};

// Optimizer -> relaxed trajectory -> synthesized epsilon-system run; reports
// the terminal-value gap against its theoretical budget.
CorollaryReport corollary_compare(const Scenario& sc, int pieces = 4, long budget = 20000);

}  // namespace avgctl
