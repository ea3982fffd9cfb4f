#include "avgctl/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "avgctl/hull.hpp"
#include "avgctl/integrate.hpp"

namespace avgctl {

Partition make_partition(double T, double epsilon, double S) {
    if (!(T > 0.0)) throw DomainError("make_partition: T must be > 0");
    if (!(epsilon > 0.0)) throw DomainError("make_partition: epsilon must be > 0");
    if (!(S > 0.0)) throw DomainError("make_partition: S must be > 0");

    const double epsS = epsilon * S;
    const double q = T / epsS;
    if (q < 1.0 - 1e-9)
        throw DomainError("make_partition: S out of range, need S <= T/epsilon");
    int N = static_cast<int>(std::floor(q));
    if (q - N > 1.0 - 1e-9) ++N;  // q within rounding of the next integer
    if (N < 1) N = 1;

    Partition p;
    p.epsS = epsS;
    p.N = N;
    p.T = T;
    return p;
}

Vector ReferenceTrajectory::at(double time) const {
    if (t.size() < 2) throw DomainError("reference trajectory needs at least two samples");
    const double slack = 1e-9 * std::max(1.0, std::abs(t.back()));
    if (time < t.front() - slack || time > t.back() + slack)
        throw DomainError("reference lookup outside the sampled span");
    time = std::min(std::max(time, t.front()), t.back());
    auto it = std::upper_bound(t.begin(), t.end(), time);
    std::size_t hi = static_cast<std::size_t>(it - t.begin());
    if (hi == 0) hi = 1;
    if (hi >= t.size()) hi = t.size() - 1;
    std::size_t lo = hi - 1;
    double span = t[hi] - t[lo];
    double w = span > 0.0 ? (time - t[lo]) / span : 0.0;
    return (1.0 - w) * z[lo] + w * z[hi];
}

ReferenceTrajectory reference_from_constant_derivative(const Vector& z0, const Vector& slope,
                                                       double T, double step) {
    if (!(step > 0.0)) throw DomainError("reference step must be > 0");
    int count = std::max(1, static_cast<int>(std::ceil(T / step - 1e-12)));
    ReferenceTrajectory ref;
    ref.t.reserve(count + 1);
    ref.z.reserve(count + 1);
    for (int i = 0; i <= count; ++i) {
        double ti = (i == count) ? T : T * static_cast<double>(i) / count;
        ref.t.push_back(ti);
        ref.z.push_back(z0 + ti * slope);
    }
    return ref;
}

Vector reference_interval_average(const ReferenceTrajectory& zref, double t_a, double t_b) {
    if (!(t_a < t_b)) throw DomainError("reference_interval_average: need t_a < t_b");
    return (zref.at(t_b) - zref.at(t_a)) / (t_b - t_a);
}

Bounds error_bound(double L_z, double T, double M_g, double epsS) {
    if (L_z < 0.0 || T < 0.0 || M_g < 0.0)
        throw DomainError("error_bound: inputs must be >= 0");
    if (!(epsS > 0.0)) throw DomainError("error_bound: epsS must be > 0");

    Bounds b;
    const double tail = 2.0 * M_g * epsS;
    if (L_z > 0.0) {
        const double gain = 2.0 * L_z * M_g + 1.0;
        b.bound_paper = std::exp(L_z * T) / L_z * gain * epsS + tail;
        b.bound_limit = std::expm1(L_z * T) / L_z * gain * epsS + tail;
        b.paper_finite = true;
    } else {
        b.bound_paper = std::numeric_limits<double>::infinity();
        b.paper_finite = false;
        b.bound_limit = T * epsS + tail;  // continuous extension at L = 0
    }
    return b;
}

double default_fast_step(double S) {
    return std::min(std::max(S / 1000.0, 1e-7), 1e-2);
}

namespace {

struct RawTrace {
    std::vector<double> t;  // real time
    std::vector<Vector> y, z, u;

    void push(double time, Vector yy, Vector zz, Vector uu) {
        if (!t.empty() && time <= t.back() + 1e-15) {
            // Segment boundary revisited: keep the newer control value.
            y.back() = std::move(yy);
            z.back() = std::move(zz);
            u.back() = std::move(uu);
            return;
        }
        t.push_back(time);
        y.push_back(std::move(yy));
        z.push_back(std::move(zz));
        u.push_back(std::move(uu));
    }
};

Trajectory resample(const RawTrace& raw, double out_dt, double T) {
    Trajectory traj;
    traj.out_dt = out_dt;
    int count = std::max(1, static_cast<int>(std::floor(T / out_dt + 1e-9)));
    traj.t.reserve(count + 1);
    std::size_t cursor = 0;
    for (int i = 0; i <= count; ++i) {
        double ti = std::min(T, i * out_dt);
        while (cursor + 1 < raw.t.size() && raw.t[cursor + 1] <= ti) ++cursor;
        std::size_t lo = cursor;
        std::size_t hi = std::min(cursor + 1, raw.t.size() - 1);
        double span = raw.t[hi] - raw.t[lo];
        double w = span > 0.0 ? std::min(std::max((ti - raw.t[lo]) / span, 0.0), 1.0) : 0.0;
        traj.t.push_back(ti);
        traj.y.push_back((1.0 - w) * raw.y[lo] + w * raw.y[hi]);
        traj.z.push_back((1.0 - w) * raw.z[lo] + w * raw.z[hi]);
        traj.u.push_back((1.0 - w) * raw.u[lo] + w * raw.u[hi]);
    }
    return traj;
}

// Integrates the coupled (y, z) system plus the frozen-z accumulator across
// one compiled control segment, recording real-time samples.
struct IntervalRunner {
    const FastSystem& fast;
    const SlowDynamics& slow;
    double h_fast;
    RawTrace* raw = nullptr;

    // state: y (m), z (n), I (n, frozen-z integrand)
    void run_segment(const ControlSegment& cs, Vector& y, Vector& z, Vector& integral,
                     const Vector& z_frozen, double fast_origin) {
        const int m = fast.m();
        const int n = slow.n;
        const double eps = fast.epsilon;
        auto f = [&](double tau, const Vector& x) {
            Vector u = cs.control_at(tau - cs.start);
            Vector yy = x.head(m);
            Vector zz = x.segment(m, n);
            Vector dx(m + 2 * n);
            dx.head(m) = fast.A * yy + fast.B * u;
            dx.segment(m, n) = eps * eval_g(slow, u, yy, zz);
            dx.tail(n) = eval_g(slow, u, yy, z_frozen);
            return dx;
        };
        Vector x(m + 2 * n);
        x.head(m) = y;
        x.segment(m, n) = z;
        x.tail(n) = integral;
        x = rk4_observed(f, x, cs.start, cs.start + cs.duration, h_fast,
                         [&](double tau, const Vector& state) {
                             if (!raw) return;
                             double t_real = eps * (fast_origin + tau);
                             raw->push(t_real, state.head(m), state.segment(m, n),
                                       cs.control_at(std::min(tau - cs.start, cs.duration)));
                         });
        y = x.head(m);
        z = x.segment(m, n);
        integral = x.tail(n);
    }
};

}  // namespace

SynthesisResult synthesize(const Scenario& sc, const ReferenceTrajectory& zref) {
    const FastSystem& fast = sc.fast;
    const SlowDynamics& slow = sc.slow;
    const double eps = fast.epsilon;
    const double S = sc.S;
    const double T = sc.T;

    Partition part = make_partition(T, eps, S);
    const double epsS = part.epsS;
    if (zref.t_begin() > 1e-9 || zref.t_end() < T - 1e-9 * std::max(1.0, T))
        throw DomainError("synthesize: reference must span [0, T]");

    const double h_fast = default_fast_step(S);
    const double out_dt = epsS / 20.0;

    // Witness set sampled once at z0; later intervals re-evaluate g on the
    // same (u_i, y_i) grid at the current z_eps(t_l).
    VPolytope witness = sample_atoms(slow, sc.z0, sc.atoms_per_axis, sc.seed);

    SynthesisResult res;
    res.program.epsilon = eps;
    TrackingReport& rep = res.report;
    rep.eps = eps;
    rep.S = S;
    rep.N = part.N;
    Bounds bounds = error_bound(slow.L_z, T, slow.M_g, epsS);
    rep.bound_paper = bounds.bound_paper;
    rep.bound_limit = bounds.bound_limit;
    rep.bound_paper_finite = bounds.paper_finite;

    Vector y = fast.y0;
    Vector z = sc.z0;
    RawTrace raw;
    IntervalRunner runner{fast, slow, h_fast, &raw};

    // Windows shorter than four steering floors cannot host a move; their
    // weights are pruned and accounted in the interval bound.
    const double lambda_min = std::max(kMinScheduleWeight, 4.0 * kMinSteerDuration / S);

    double fast_cursor = 0.0;
    for (int l = 0; l < part.N; ++l) {
        const double t_l = part.t(l);
        const double t_next = part.t(l + 1);

        IntervalRecord rec;
        rec.l = l;
        rec.t_l = t_l;
        rec.z_err = (z - zref.at(t_l)).norm();

        rec.w = reference_interval_average(zref, t_l, std::min(t_next, zref.t_end()));
        VPolytope P_l = (l == 0) ? witness : reanchor(witness, slow, z);
        Projection proj = project(rec.w, P_l);
        ConvexCombination comb = caratheodory_reduce(proj.combination, P_l);
        rec.v = proj.point;
        rec.projection_dist = proj.dist;
        rep.max_projection_dist = std::max(rep.max_projection_dist, proj.dist);

        auto [pruned, perturbation] = prune_combination(comb, P_l, lambda_min);
        double min_lambda = pruned.weights.minCoeff();
        double ds_min = min_lambda * S;

        // Auto delta: the schedule's a-priori averaging bound targets epsS/2.
        double delta_l =
            std::min(epsS / (2.0 * (4.0 * slow.M_g / ds_min + slow.L_y)), ds_min / 8.0);

        DwellSchedule sched;
        try {
            sched = build_schedule(pruned, P_l, y, S, delta_l, fast);
        } catch (const Error& e) {
            throw ScheduleInfeasible("interval " + std::to_string(l) + ": " +
                                     std::string(e.what()));
        }
        rec.delta_eff = sched.delta_eff;

        const Vector z_frozen = z;
        Vector integral = Vector::Zero(slow.n);
        try {
            for (const DwellSegment& seg : sched.segments) {
                const DwellWindow& win = sched.windows[seg.window];
                ControlSegment cs;
                cs.start = fast_cursor;
                cs.duration = seg.duration;
                if (seg.kind == DwellSegment::Kind::Move) {
                    cs.kind = ControlSegment::Kind::Steer;
                    cs.steer = steering_gain(fast.A, fast.B, y, win.y, seg.duration);
                } else {
                    cs.kind = ControlSegment::Kind::Hold;
                    cs.u = win.u;
                }
                runner.run_segment(cs, y, z, integral, z_frozen, 0.0);
                fast_cursor += seg.duration;
                res.program.segments.push_back(std::move(cs));
            }
        } catch (const SteeringIllConditioned& e) {
            throw SteeringIllConditioned("interval " + std::to_string(l) + ": " +
                                         std::string(e.what()));
        } catch (const NumericalFailure& e) {
            throw NumericalFailure("interval " + std::to_string(l) + ": " +
                                   std::string(e.what()));
        }

        Vector achieved = integral / S;
        rec.average_error = (rec.v - achieved).norm();
        rec.average_bound = 4.0 * slow.M_g * sched.delta_eff / sched.min_window +
                            slow.L_y * sched.delta + perturbation;
        rep.intervals.push_back(std::move(rec));
    }

    // Tail [t_N, T]: hold the last used control value.
    if (part.has_tail()) {
        const ControlSegment& last = res.program.segments.back();
        ControlSegment cs;
        cs.kind = ControlSegment::Kind::Hold;
        cs.start = fast_cursor;
        cs.duration = part.tail_length() / eps;
        cs.u = last.control_at(last.duration);
        Vector integral = Vector::Zero(slow.n);
        runner.run_segment(cs, y, z, integral, z, 0.0);
        fast_cursor += cs.duration;
        res.program.segments.push_back(std::move(cs));
    }

    res.trajectory = resample(raw, out_dt, T);

    double sup = 0.0;
    for (std::size_t i = 0; i < res.trajectory.t.size(); ++i)
        sup = std::max(sup, (res.trajectory.z[i] - zref.at(res.trajectory.t[i])).norm());
    rep.sup_error = sup;

    const double bound_used = rep.bound_paper_finite ? rep.bound_paper : rep.bound_limit;
    rep.pass = true;
    if (rep.max_projection_dist > epsS / 10.0) {
        rep.pass = false;
        rep.fail_reason = "reference not inclusion-feasible at sampled resolution";
    } else if (!(sup <= bound_used)) {
        rep.pass = false;
        rep.fail_reason = "sup_error exceeds bound";
    }
    return res;
}

Trajectory simulate_coupled(const FastSystem& fast, const SlowDynamics& slow, const Vector& z0,
                            const ControlProgram& program, double h_fast, double out_dt) {
    if (program.segments.empty()) throw DomainError("simulate_coupled: empty program");
    RawTrace raw;
    IntervalRunner runner{fast, slow, h_fast, &raw};
    Vector y = fast.y0;
    Vector z = z0;
    for (const ControlSegment& cs : program.segments) {
        Vector unused_accumulator = Vector::Zero(slow.n);
        runner.run_segment(cs, y, z, unused_accumulator, z0, 0.0);
    }
    return resample(raw, out_dt, program.real_length());
}

}  // namespace avgctl
