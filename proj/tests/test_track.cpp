#include <doctest.h>

#include <cmath>

#include "avgctl/integrate.hpp"
#include "avgctl/relax.hpp"
#include "avgctl/track.hpp"

using namespace avgctl;

namespace {

const std::string kScenarioDir = AVGCTL_SCENARIO_DIR;

Vector vec1(double v) {
    Vector x(1);
    x << v;
    return x;
}

ControlProgram hold_program(double epsilon, const Vector& u, double fast_length) {
    ControlProgram prog;
    prog.epsilon = epsilon;
    ControlSegment cs;
    cs.kind = ControlSegment::Kind::Hold;
    cs.start = 0.0;
    cs.duration = fast_length;
    cs.u = u;
    prog.segments.push_back(cs);
    return prog;
}

}  // namespace

TEST_CASE("partition with exact division has no tail") {
    Partition p = make_partition(1.0, 0.5, 0.4);
    CHECK(p.epsS == doctest::Approx(0.2));
    CHECK(p.N == 5);
    CHECK(p.t(5) == doctest::Approx(1.0));
    CHECK_FALSE(p.has_tail());
}

TEST_CASE("partition floor leaves a tail") {
    Partition p = make_partition(1.0, 1.0, 0.3);
    CHECK(p.N == 3);
    CHECK(p.t(3) == doctest::Approx(0.9));
    CHECK(p.has_tail());
    CHECK(p.tail_length() == doctest::Approx(0.1));
}

TEST_CASE("partition rejects S beyond T/epsilon") {
    CHECK_THROWS_AS(make_partition(1.0, 2.0, 0.6), DomainError);
}

TEST_CASE("interval average of a linear reference") {
    ReferenceTrajectory ref = reference_from_constant_derivative(vec1(0), vec1(0.2), 1.0, 0.01);
    Vector avg = reference_interval_average(ref, 0.0, 0.1);
    CHECK(avg(0) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("interval average of a constant reference is zero") {
    ReferenceTrajectory ref = reference_from_constant_derivative(vec1(3), vec1(0), 1.0, 0.01);
    CHECK(reference_interval_average(ref, 0.2, 0.7).norm() <= 1e-14);
}

TEST_CASE("interval averages match the closed form for dz/dt = sin(t)") {
    // z(t) = 1 - cos(t), sampled exactly on a fine grid.
    const double pi = 3.14159265358979323846;
    ReferenceTrajectory ref;
    const int nodes = 4000;
    for (int i = 0; i <= nodes; ++i) {
        double t = pi * i / nodes;
        ref.t.push_back(t);
        ref.z.push_back(vec1(1.0 - std::cos(t)));
    }
    const double dt = pi / 10.0;
    for (int l = 0; l + 1 <= 9; ++l) {
        double a = l * dt, b = (l + 1) * dt;
        double expected = (std::cos(a) - std::cos(b)) / dt;
        Vector avg = reference_interval_average(ref, a, b);
        CHECK(avg(0) == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("reference lookups outside the span fail") {
    ReferenceTrajectory ref = reference_from_constant_derivative(vec1(0), vec1(1), 1.0, 0.1);
    CHECK_THROWS_AS(ref.at(-0.5), DomainError);
    CHECK_THROWS_AS(ref.at(1.5), DomainError);
    CHECK_THROWS_AS(reference_interval_average(ref, 0.5, 0.2), DomainError);
}

TEST_CASE("error bound formula at L = 1") {
    Bounds b = error_bound(1.0, 1.0, 1.0, 0.01);
    CHECK(b.paper_finite);
    CHECK(b.bound_paper ==
          doctest::Approx(std::exp(1.0) * 0.03 + 0.02).epsilon(1e-12));
    CHECK(b.bound_paper == doctest::Approx(0.10154845485377136).epsilon(1e-9));
    CHECK(b.bound_limit == doctest::Approx((std::exp(1.0) - 1.0) * 0.03 + 0.02).epsilon(1e-12));
}

TEST_CASE("error bound at L = 0 flags bound_paper and keeps the limit") {
    Bounds b = error_bound(0.0, 1.0, 1.0, 0.01);
    CHECK_FALSE(b.paper_finite);
    CHECK(std::isinf(b.bound_paper));
    CHECK(b.bound_limit == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("error bounds are linear in epsS") {
    Bounds b = error_bound(1.0, 1.0, 1.0, 1e-6);
    CHECK(b.bound_paper <= 1.1e-5);
    CHECK(b.bound_limit <= 1.1e-5);
    Bounds b2 = error_bound(1.0, 1.0, 1.0, 2e-6);
    CHECK(b2.bound_paper == doctest::Approx(2.0 * b.bound_paper).epsilon(1e-12));
}

TEST_CASE("free run matches a step-halved reference") {
    Scenario sc = load_scenario(kScenarioDir + "/sin_z.json");
    ControlProgram prog = hold_program(1.0, vec1(0), 1.0);
    Trajectory coarse = simulate_coupled(sc.fast, sc.slow, sc.z0, prog, 1e-3, 0.05);
    Trajectory fine = simulate_coupled(sc.fast, sc.slow, sc.z0, prog, 1e-5, 0.05);
    CHECK((coarse.z.back() - fine.z.back()).norm() <= 1e-8);
    // y frozen under u = 0 with A = 0
    CHECK((coarse.y.back() - sc.fast.y0).norm() <= 1e-14);
    // z decreasing toward sin(y0)/0.1 tanh balance from below? here z grows:
    // dz/dt = sin(1) - 0.1 tanh(z) > 0 on [0, 1]
    CHECK(coarse.z.back()(0) > coarse.z.front()(0));
}

TEST_CASE("RK4 order: halving the step cuts the endpoint error by 8x or more") {
    Scenario sc = load_scenario(kScenarioDir + "/sin_z.json");
    ControlProgram prog = hold_program(1.0, vec1(0), 1.0);
    Trajectory ref = simulate_coupled(sc.fast, sc.slow, sc.z0, prog, 1.0 / 3200.0, 0.5);
    Trajectory h1 = simulate_coupled(sc.fast, sc.slow, sc.z0, prog, 1.0 / 25.0, 0.5);
    Trajectory h2 = simulate_coupled(sc.fast, sc.slow, sc.z0, prog, 1.0 / 50.0, 0.5);
    double e1 = (h1.z.back() - ref.z.back()).norm();
    double e2 = (h2.z.back() - ref.z.back()).norm();
    CHECK(e1 >= 8.0 * e2);
}

TEST_CASE("epsilon scaling: y equals the associated system in stretched time") {
    Scenario sc = load_scenario(kScenarioDir + "/sin_flat.json");
    ControlProgram fast_prog = hold_program(1.0, vec1(0.3), 1.0);
    ControlProgram slow_prog = hold_program(2.0, vec1(0.3), 1.0);
    Trajectory t1 = simulate_coupled(sc.fast, sc.slow, sc.z0, fast_prog, 1e-3, 0.125);
    FastSystem fast2 = sc.fast;
    fast2.epsilon = 2.0;
    Trajectory t2 = simulate_coupled(fast2, sc.slow, sc.z0, slow_prog, 1e-3, 0.25);
    REQUIRE(t1.t.size() == t2.t.size());
    for (std::size_t i = 0; i < t1.t.size(); ++i) {
        CHECK(t2.t[i] == doctest::Approx(2.0 * t1.t[i]).epsilon(1e-12));
        CHECK((t1.y[i] - t2.y[i]).norm() <= 1e-12);
    }
}

TEST_CASE("SIN-FLAT tracking stays within bound_paper") {
    Scenario sc = load_scenario(kScenarioDir + "/sin_flat.json");
    ReferenceTrajectory zref =
        reference_from_constant_derivative(sc.z0, sc.reference.constant_value, sc.T,
                                           sc.fast.epsilon * sc.S / 10.0);
    SynthesisResult res = synthesize(sc, zref);
    CHECK(res.report.pass);
    CHECK(res.report.sup_error <= res.report.bound_paper);
    CHECK(res.report.max_projection_dist <= sc.fast.epsilon * sc.S / 10.0);
    CHECK(res.report.N == 20);
    // interval averaging errors sit within their reported bounds, and the
    // sup over the output grid dominates every recorded grid error
    for (const IntervalRecord& r : res.report.intervals) {
        CHECK(r.average_error <= r.average_bound + 1e-12);
        CHECK(r.z_err <= res.report.sup_error + 1e-15);
    }
}

TEST_CASE("constant reference is tracked to within 2 epsS") {
    Scenario sc = load_scenario(kScenarioDir + "/sin_flat.json");
    sc.reference.constant_value = vec1(0.0);
    ReferenceTrajectory zref = reference_from_constant_derivative(
        sc.z0, sc.reference.constant_value, sc.T, sc.fast.epsilon * sc.S / 10.0);
    SynthesisResult res = synthesize(sc, zref);
    CHECK(res.report.pass);
    CHECK(res.report.sup_error <= 2.0 * sc.fast.epsilon * sc.S);
}

TEST_CASE("infeasible reference derivative is flagged, not hidden") {
    Scenario sc = load_scenario(kScenarioDir + "/sin_flat.json");
    sc.reference.constant_value = vec1(2.0);  // outside co(sin image) = [-1, 1]
    ReferenceTrajectory zref = reference_from_constant_derivative(
        sc.z0, sc.reference.constant_value, sc.T, sc.fast.epsilon * sc.S / 10.0);
    SynthesisResult res = synthesize(sc, zref);
    CHECK_FALSE(res.report.pass);
    CHECK(res.report.fail_reason == "reference not inclusion-feasible at sampled resolution");
    for (const IntervalRecord& r : res.report.intervals) CHECK(r.projection_dist >= 1.0 - 1e-9);
}

TEST_CASE("program re-simulation reproduces the closed-loop trajectory") {
    Scenario sc = load_scenario(kScenarioDir + "/sin_flat.json");
    ReferenceTrajectory zref = reference_from_constant_derivative(
        sc.z0, sc.reference.constant_value, sc.T, sc.fast.epsilon * sc.S / 10.0);
    SynthesisResult res = synthesize(sc, zref);
    Trajectory replay = simulate_coupled(sc.fast, sc.slow, sc.z0, res.program,
                                         default_fast_step(sc.S), res.trajectory.out_dt);
    REQUIRE(replay.t.size() == res.trajectory.t.size());
    for (std::size_t i = 0; i < replay.t.size(); ++i) {
        CHECK((replay.y[i] - res.trajectory.y[i]).norm() <= 1e-12);
        CHECK((replay.z[i] - res.trajectory.z[i]).norm() <= 1e-12);
    }
    // program tiles [0, T] in real time
    double total = 0.0;
    for (const ControlSegment& cs : res.program.segments) total += cs.duration;
    CHECK(total * sc.fast.epsilon == doctest::Approx(sc.T).epsilon(1e-12));
}

TEST_CASE("halving S halves the bound and keeps runs passing") {
    Scenario sc = load_scenario(kScenarioDir + "/sin_flat.json");
    double prev_bound = 0.0;
    for (double S : {0.4, 0.2, 0.1}) {
        CAPTURE(S);
        Scenario run = sc;
        run.S = S;
        ReferenceTrajectory zref = reference_from_constant_derivative(
            run.z0, run.reference.constant_value, run.T, run.fast.epsilon * run.S / 10.0);
        SynthesisResult res = synthesize(run, zref);
        CHECK(res.report.pass);
        CHECK(res.report.sup_error <= res.report.bound_paper);
        if (prev_bound > 0.0)
            CHECK(res.report.bound_paper == doctest::Approx(prev_bound / 2.0).epsilon(1e-9));
        prev_bound = res.report.bound_paper;
    }
}

TEST_CASE("drifting holds: nonzero u witnesses still track within the bound") {
    // u_box = [-1, 1] makes every hold drift (dy/dtau = u), exercising the
    // tau_hat alternation and the floored re-steer path end to end.
    Scenario sc = load_scenario(kScenarioDir + "/sin_drift.json");
    ReferenceTrajectory zref = build_reference(sc);
    SynthesisResult res = synthesize(sc, zref);
    CHECK(res.report.pass);
    CHECK(res.report.sup_error <= res.report.bound_paper);
    for (const IntervalRecord& r : res.report.intervals)
        CHECK(r.average_error <= r.average_bound + 1e-12);
}

TEST_CASE("double-integrator fast state: 2-D steering inside the dwell loop") {
    Scenario sc = load_scenario(kScenarioDir + "/m2_tracking.json");
    ReferenceTrajectory zref = build_reference(sc);
    SynthesisResult res = synthesize(sc, zref);
    CHECK(res.report.pass);
    CHECK(res.report.sup_error <= res.report.bound_paper);
    CHECK(res.report.max_projection_dist <= 1e-9);
}

TEST_CASE("two-dimensional slow state: live hull projection in the plane") {
    Scenario sc = load_scenario(kScenarioDir + "/arc_tracking.json");
    ReferenceTrajectory zref = build_reference(sc);
    SynthesisResult res = synthesize(sc, zref);
    CHECK(res.report.pass);
    CHECK(res.report.sup_error <= res.report.bound_paper);
    // the interior target needs a genuine 2-D combination somewhere
    bool saw_multi_atom = false;
    for (const IntervalRecord& r : res.report.intervals)
        if (r.projection_dist <= 1e-9) saw_multi_atom = true;
    CHECK(saw_multi_atom);
}

TEST_CASE("a relaxed reference schedule is tracked end to end") {
    Scenario sc = load_scenario(kScenarioDir + "/sin_relaxed.json");
    ReferenceTrajectory zref = build_reference(sc);
    // piece 1: dz/dt = 0.6 - 0.4 = 0.2; piece 2: dz/dt = sin(-0.5)
    CHECK(zref.at(0.5)(0) == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(zref.at(1.0)(0) ==
          doctest::Approx(0.1 + 0.5 * std::sin(-0.5)).epsilon(1e-10));
    SynthesisResult res = synthesize(sc, zref);
    CHECK(res.report.pass);
    CHECK(res.report.sup_error <= res.report.bound_paper);
}

TEST_CASE("epsilon independence at fixed epsS") {
    Scenario sc = load_scenario(kScenarioDir + "/sin_flat.json");
    const double epsS = sc.fast.epsilon * sc.S;  // 0.05
    double bound = 0.0;
    for (double eps : {0.1, 1.0, 10.0}) {
        CAPTURE(eps);
        Scenario run = sc;
        run.fast.epsilon = eps;
        run.S = epsS / eps;
        ReferenceTrajectory zref = reference_from_constant_derivative(
            run.z0, run.reference.constant_value, run.T, epsS / 10.0);
        SynthesisResult res = synthesize(run, zref);
        CHECK(res.report.pass);
        if (bound == 0.0) bound = res.report.bound_paper;
        CHECK(res.report.bound_paper == doctest::Approx(bound).epsilon(1e-12));
        CHECK(res.report.sup_error <= bound);
    }
}
