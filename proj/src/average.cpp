#include "avgctl/average.hpp"

#include <cmath>

#include "avgctl/integrate.hpp"

namespace avgctl {

double hold_time(const FastSystem& fast, const Vector& u_j, const Vector& y_j, double delta) {
    if (!(delta > 0.0)) throw DomainError("hold_time: delta must be > 0");
    const double drift = (fast.A * y_j + fast.B * u_j).norm();
    const double c = drift + spectral_norm(fast.A) * delta + 1e-12;
    return delta / c;
}

std::pair<ConvexCombination, double> prune_combination(const ConvexCombination& c,
                                                       const VPolytope& P, double min_weight) {
    Vector before = combination_value(c, P);
    ConvexCombination kept;
    std::vector<double> w;
    for (std::size_t i = 0; i < c.indices.size(); ++i) {
        double lam = c.weights(static_cast<Eigen::Index>(i));
        if (lam >= min_weight) {
            kept.indices.push_back(c.indices[i]);
            w.push_back(lam);
        }
    }
    if (kept.indices.empty()) {
        // Keep the heaviest atom rather than returning nothing.
        Eigen::Index imax;
        c.weights.maxCoeff(&imax);
        kept.indices.push_back(c.indices[static_cast<std::size_t>(imax)]);
        w.push_back(1.0);
    }
    kept.weights = Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    kept.weights /= kept.weights.sum();
    double perturbation = (combination_value(kept, P) - before).norm();
    return {std::move(kept), perturbation};
}

DwellSchedule build_schedule(const ConvexCombination& comb, const VPolytope& P,
                             const Vector& y_start, double S, double delta,
                             const FastSystem& fast) {
    if (!(S > 0.0)) throw DomainError("build_schedule: S must be > 0");
    if (!(delta > 0.0)) throw DomainError("build_schedule: delta must be > 0");
    if (comb.indices.empty()) throw DomainError("build_schedule: empty combination");

    const int l = static_cast<int>(comb.indices.size());
    DwellSchedule sched;
    sched.S = S;
    sched.delta = delta;
    sched.y_start = y_start;

    // Window bounds S_j from the cumulative weights; the last is pinned to S.
    double cum = 0.0;
    double min_window = S;
    for (int j = 0; j < l; ++j) {
        double lam = comb.weights(j);
        if (lam < kMinScheduleWeight)
            throw ScheduleInfeasible("build_schedule: weight " + std::to_string(lam) +
                                     " below the scheduling floor; prune first");
        DwellWindow w;
        w.u = P.atoms[comb.indices[j]].u;
        w.y = P.atoms[comb.indices[j]].y;
        w.lambda = lam;
        w.start = cum * S;
        cum += lam;
        w.end = (j == l - 1) ? S : cum * S;
        min_window = std::min(min_window, w.end - w.start);
        sched.windows.push_back(std::move(w));
    }
    sched.min_window = min_window;

    if (!(delta < min_window / 4.0)) {
        int offender = 0;
        for (int j = 0; j < l; ++j)
            if (sched.windows[j].end - sched.windows[j].start <= min_window + 1e-15) offender = j;
        throw ScheduleInfeasible("build_schedule: delta " + std::to_string(delta) +
                                 " >= smallest window / 4 (lambda_" + std::to_string(offender + 1) +
                                 " = " + std::to_string(sched.windows[offender].lambda) + ")");
    }

    double max_move = 0.0;
    for (int j = 0; j < l; ++j) {
        const DwellWindow& w = sched.windows[j];
        const double window_len = w.end - w.start;
        const double tau_hat = hold_time(fast, w.u, w.y, delta);

        double d0 = std::min(std::max(delta, kMinSteerDuration), window_len / 4.0);
        if (d0 < kMinSteerDuration)
            throw ScheduleInfeasible("build_schedule: window " + std::to_string(j + 1) +
                                     " too short to host a steering move (lambda = " +
                                     std::to_string(w.lambda) + ")");
        double t = w.start + d0;
        sched.segments.push_back({DwellSegment::Kind::Move, d0, j});
        max_move = std::max(max_move, d0);

        double move_next = delta / 2.0;
        while (true) {
            if (sched.segments.size() > 200000)
                throw ScheduleInfeasible("build_schedule: segment cap exceeded");
            double rem = w.end - t;
            if (rem <= 1e-15) break;
            if (tau_hat >= rem) {
                sched.segments.push_back({DwellSegment::Kind::Hold, rem, j});
                break;
            }
            sched.segments.push_back({DwellSegment::Kind::Hold, tau_hat, j});
            t += tau_hat;
            rem = w.end - t;
            if (rem <= 1e-15) break;
            double d = std::min(move_next, rem / 2.0);
            move_next /= 2.0;
            if (d < kMinSteerDuration) {
                // Halving hit the steering floor: keep re-steering at the
                // floor so drift stays bounded by delta; the extra move
                // measure is folded into delta_eff below.
                d = kMinSteerDuration;
                move_next = 0.0;
                sched.floored = true;
                if (rem / 2.0 < d) {
                    sched.segments.push_back({DwellSegment::Kind::Hold, rem, j});
                    break;
                }
            }
            sched.segments.push_back({DwellSegment::Kind::Move, d, j});
            t += d;
            max_move = std::max(max_move, d);
        }
    }

    // Half the largest per-window move measure; >= delta when no flooring.
    double max_measure = 0.0;
    for (int j = 0; j < l; ++j) {
        double meas = 0.0;
        for (const DwellSegment& s : sched.segments)
            if (s.window == j && s.kind == DwellSegment::Kind::Move) meas += s.duration;
        max_measure = std::max(max_measure, meas);
    }
    sched.delta_eff = std::max({delta, max_move, 0.5 * max_measure});
    return sched;
}

AverageResult realize_average(const DwellSchedule& sched, const FastSystem& fast,
                              const SlowDynamics& slow, const Vector& z_frozen,
                              double rk4_step) {
    if (sched.segments.empty()) throw DomainError("realize_average: empty schedule");
    if (!(rk4_step > 0.0)) throw DomainError("realize_average: rk4_step must be > 0");

    const int m = fast.m();
    const int n = slow.n;

    AverageResult out;
    out.control.epsilon = 1.0;

    Vector y = sched.y_start.size() == m ? sched.y_start : fast.y0;
    Vector integral = Vector::Zero(n);
    double tau_cursor = 0.0;

    for (std::size_t si = 0; si < sched.segments.size(); ++si) {
        const DwellSegment& seg = sched.segments[si];
        const DwellWindow& win = sched.windows[seg.window];

        ControlSegment cs;
        cs.start = tau_cursor;
        cs.duration = seg.duration;
        if (seg.kind == DwellSegment::Kind::Move) {
            cs.kind = ControlSegment::Kind::Steer;
            cs.steer = steering_gain(fast.A, fast.B, y, win.y, seg.duration);
        } else {
            cs.kind = ControlSegment::Kind::Hold;
            cs.u = win.u;
        }

        // Joint state (y, I): dI/dtau = g(u, y, z_frozen).
        auto f = [&](double tau, const Vector& x) {
            Vector u = cs.control_at(tau - cs.start);
            Vector yy = x.head(m);
            Vector dx(m + n);
            dx.head(m) = fast.A * yy + fast.B * u;
            dx.tail(n) = eval_g(slow, u, yy, z_frozen);
            return dx;
        };
        Vector x(m + n);
        x.head(m) = y;
        x.tail(n) = integral;
        const int seg_idx = static_cast<int>(si);
        x = rk4_observed(f, x, cs.start, cs.start + cs.duration, rk4_step,
                         [&](double tau, const Vector& state) {
                             FastSample smp;
                             smp.tau = tau;
                             smp.y = state.head(m);
                             smp.u = cs.control_at(std::min(tau - cs.start, cs.duration));
                             smp.segment = seg_idx;
                             out.trajectory.push_back(std::move(smp));
                         });
        y = x.head(m);
        integral = x.tail(n);
        tau_cursor += seg.duration;
        out.control.segments.push_back(std::move(cs));
    }

    out.y_end = y;
    out.achieved_average = integral / sched.S;

    out.target = Vector::Zero(n);
    for (const DwellWindow& w : sched.windows)
        out.target += w.lambda * eval_g(slow, w.u, w.y, z_frozen);

    out.error = (out.achieved_average - out.target).norm();
    out.bound = 4.0 * slow.M_g * sched.delta_eff / sched.min_window + slow.L_y * sched.delta;
    return out;
}

}  // namespace avgctl
