#pragma once

#include <string>

#include "avgctl/average.hpp"
#include "avgctl/control.hpp"
#include "avgctl/model.hpp"

namespace avgctl {

// Grid t_l = l * (eps*S), l = 0..N with N = floor(T/(eps*S)), plus the tail
// [t_N, T] when the division is inexact.
struct Partition {
    double epsS = 0.0;
    int N = 0;
    double T = 0.0;

    double t(int l) const { return l * epsS; }
    double tail_length() const { return std::max(0.0, T - N * epsS); }
    bool has_tail() const { return tail_length() > 1e-12 * std::max(1.0, T); }
};

Partition make_partition(double T, double epsilon, double S);

// Sampled reference z(.) with piecewise-linear interpolation.
struct ReferenceTrajectory {
    std::vector<double> t;
    std::vector<Vector> z;

    double t_begin() const { return t.front(); }
    double t_end() const { return t.back(); }
    Vector at(double time) const;
};

ReferenceTrajectory reference_from_constant_derivative(const Vector& z0, const Vector& slope,
                                                       double T, double step);

// (z(t_b) - z(t_a)) / (t_b - t_a): exact for the integral of dz/dt.
Vector reference_interval_average(const ReferenceTrajectory& zref, double t_a, double t_b);

struct Bounds {
    double bound_paper = 0.0;  // L^{-1} e^{LT} (2 L M_g + 1) epsS + 2 M_g epsS
    double bound_limit = 0.0;  // L^{-1} (e^{LT} - 1) (2 L M_g + 1) epsS + 2 M_g epsS
    bool paper_finite = true;  // false iff L_z == 0
};

Bounds error_bound(double L_z, double T, double M_g, double epsS);

struct IntervalRecord {
    int l = 0;
    double t_l = 0.0;
    Vector w;  // reference interval average
    Vector v;  // its hull projection
    double projection_dist = 0.0;
    double average_error = 0.0;  // || v_l - (1/S) int g(u, y, z_l frozen) ||
    double average_bound = 0.0;  // schedule a-priori bound + pruning perturbation
    double z_err = 0.0;          // || z_eps(t_l) - zref(t_l) ||
    double delta_eff = 0.0;
};

struct TrackingReport {
    double sup_error = 0.0;
    double bound_paper = 0.0;
    double bound_limit = 0.0;
    bool bound_paper_finite = true;
    double eps = 0.0;
    double S = 0.0;
    int N = 0;
    double max_projection_dist = 0.0;
    bool pass = false;
    std::string fail_reason;
    std::vector<IntervalRecord> intervals;
};

// Uniformly resampled run output.
struct Trajectory {
    std::vector<double> t;
    std::vector<Vector> y;
    std::vector<Vector> z;
    std::vector<Vector> u;
    double out_dt = 0.0;
};

struct SynthesisResult {
    ControlProgram program;
    Trajectory trajectory;
    TrackingReport report;
};

// Full tracking synthesis: per interval, project the reference derivative
// average onto the hull rebuilt at z_eps(t_l), compile a dwell schedule
// whose averaging bound targets <= epsS, integrate the coupled system, and
// assemble the report against the tracking error bound.
SynthesisResult synthesize(const Scenario& sc, const ReferenceTrajectory& zref);

// RK4 in fast time on the joint (y, z) state under a compiled program,
// segment-boundary-aligned steps, resampled at out_dt.
Trajectory simulate_coupled(const FastSystem& fast, const SlowDynamics& slow, const Vector& z0,
                            const ControlProgram& program, double h_fast, double out_dt);

// Default fast-time integration step for a window of length S.
double default_fast_step(double S);

}  // namespace avgctl
