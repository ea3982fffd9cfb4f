#pragma once

#include "avgctl/control.hpp"
#include "avgctl/hull.hpp"

namespace avgctl {

// Weights below this are dropped (and the rest renormalized) before
// scheduling; windows shorter than 4*delta cannot host the dwell pattern.
inline constexpr double kMinScheduleWeight = 1e-3;

struct DwellSegment {
    enum class Kind { Move, Hold };
    Kind kind = Kind::Move;
    double duration = 0.0;
    int window = 0;  // index into DwellSchedule::windows
};

// Per-atom window [start, end) with its hold control u and target state y.
struct DwellWindow {
    Vector u;
    Vector y;
    double lambda = 0.0;
    double start = 0.0;
    double end = 0.0;
};

// Steer/hold alternation over [0, S]: window j gets an initial Move to y_j,
// then Hold(tau_hat)/Move cycles with move durations halving (floored at
// kMinSteerDuration), and a final Hold to the window end.
struct DwellSchedule {
    std::vector<DwellWindow> windows;
    std::vector<DwellSegment> segments;
    Vector y_start;          // state the first Move is compiled from
    double S = 0.0;
    double delta = 0.0;      // requested tolerance
    double delta_eff = 0.0;  // max(delta, half the largest per-window move measure)
    double min_window = 0.0;
    bool floored = false;  // some move duration hit the steering floor
};

// Fast-time drift bound: tau_hat = delta / c with
// c = ||A y_j + B u_j|| + ||A||_2 * delta + 1e-12, so that holding u_j from
// y_j keeps ||y(tau) - y_j|| <= delta for all tau <= tau_hat.
double hold_time(const FastSystem& fast, const Vector& u_j, const Vector& y_j, double delta);

DwellSchedule build_schedule(const ConvexCombination& comb, const VPolytope& P,
                             const Vector& y_start, double S, double delta,
                             const FastSystem& fast);

struct FastSample {
    double tau = 0.0;
    Vector y;
    Vector u;
    int segment = 0;
};

struct AverageResult {
    Vector achieved_average;
    Vector target;
    double error = 0.0;
    double bound = 0.0;  // a-priori: 4*M_g*delta_eff/min_window + L_y*delta
    ControlProgram control;  // fast-time program (epsilon = 1)
    Vector y_end;
    std::vector<FastSample> trajectory;
};

// Compiles Move entries to steering segments from the simulated state,
// integrates the associated system, and accumulates (1/S) int g(u, y, z)
// on the same RK4 grid with z frozen.
AverageResult realize_average(const DwellSchedule& sched, const FastSystem& fast,
                              const SlowDynamics& slow, const Vector& z_frozen,
                              double rk4_step);

// Drops weights below min_weight and renormalizes; returns the pruned
// combination and the exact barycenter perturbation it induced.
std::pair<ConvexCombination, double> prune_combination(const ConvexCombination& c,
                                                       const VPolytope& P, double min_weight);

}  // namespace avgctl
