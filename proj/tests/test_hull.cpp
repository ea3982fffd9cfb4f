#include <doctest.h>

#include <cmath>

#include "avgctl/hull.hpp"
#include "avgctl/rng.hpp"

using namespace avgctl;

namespace {

const double kPi = 3.14159265358979323846;

SlowDynamics scalar_sin(double y_lo, double y_hi) {
    SlowDynamics slow;
    slow.k = 1;
    slow.m = 1;
    slow.n = 1;
    slow.g_exprs.push_back(parse_dynamics("sin(y1)", expr::Dims{1, 1, 1}));
    slow.M_g = 1.0;
    slow.L_y = 1.0;
    slow.L_z = 0.0;
    slow.u_box.lo = Vector::Zero(1);
    slow.u_box.hi = Vector::Zero(1);
    slow.y_box.lo = Vector::Constant(1, y_lo);
    slow.y_box.hi = Vector::Constant(1, y_hi);
    return slow;
}

// Synthetic polytope straight from explicit g-values (witnesses unused by
// projection, so zeros are fine).
VPolytope explicit_atoms(const std::vector<Vector>& gs) {
    VPolytope P;
    P.z_anchor = Vector::Zero(gs[0].size());
    for (const Vector& g : gs) P.atoms.push_back(HullAtom{Vector::Zero(1), Vector::Zero(1), g});
    return P;
}

Vector vec1(double v) {
    Vector x(1);
    x << v;
    return x;
}

bool contains_g_value(const VPolytope& P, double v, double tol) {
    for (const HullAtom& a : P.atoms)
        if (std::abs(a.g(0) - v) <= tol) return true;
    return false;
}

}  // namespace

TEST_CASE("sampled sine atoms include the grid images") {
    SlowDynamics slow = scalar_sin(-kPi / 2, kPi / 2);
    VPolytope P = sample_atoms(slow, Vector::Zero(1), 3, 1);
    CHECK(contains_g_value(P, -1.0, 1e-12));
    CHECK(contains_g_value(P, 0.0, 1e-12));
    CHECK(contains_g_value(P, 1.0, 1e-12));
}

TEST_CASE("constant image collapses to a single atom") {
    SlowDynamics slow = scalar_sin(-1, 1);
    slow.g_exprs[0] = parse_dynamics("0.25", expr::Dims{1, 1, 1});
    VPolytope P = sample_atoms(slow, Vector::Zero(1), 4, 1);
    CHECK(P.atoms.size() == 1);
    CHECK(P.atoms[0].g(0) == doctest::Approx(0.25));
}

TEST_CASE("tanh extremes at grid endpoints") {
    SlowDynamics slow = scalar_sin(-3, 3);
    slow.g_exprs[0] = parse_dynamics("tanh(y1)", expr::Dims{1, 1, 1});
    VPolytope P = sample_atoms(slow, Vector::Zero(1), 5, 1);
    CHECK(contains_g_value(P, std::tanh(3.0), 1e-12));
    CHECK(contains_g_value(P, -std::tanh(3.0), 1e-12));
    CHECK(std::tanh(3.0) == doctest::Approx(0.99505475368673).epsilon(1e-10));
}

TEST_CASE("degenerate box is rejected") {
    SlowDynamics slow = scalar_sin(1.0, -1.0);
    CHECK_THROWS_AS(sample_atoms(slow, Vector::Zero(1), 3, 1), SchemaError);
}

TEST_CASE("sampling refuses atoms beyond the declared bound") {
    SlowDynamics slow = scalar_sin(-kPi / 2, kPi / 2);
    slow.g_exprs[0] = parse_dynamics("2*sin(y1)", expr::Dims{1, 1, 1});
    CHECK_THROWS_AS(sample_atoms(slow, Vector::Zero(1), 3, 1), BoundViolation);
}

TEST_CASE("projection onto an atom is that atom") {
    VPolytope P = explicit_atoms({vec1(-1), vec1(0.3), vec1(1)});
    Projection pr = project(vec1(0.3), P);
    CHECK(pr.dist <= 1e-12);
    CHECK(pr.point(0) == doctest::Approx(0.3));
    CHECK(pr.combination.indices.size() == 1);
}

TEST_CASE("1-D interior barycentric weights") {
    VPolytope P = explicit_atoms({vec1(-1), vec1(1)});
    Projection pr = project(vec1(0.2), P);
    CHECK(pr.dist <= 1e-12);
    CHECK(pr.point(0) == doctest::Approx(0.2).epsilon(1e-12));
    REQUIRE(pr.combination.indices.size() == 2);
    double w_minus = 0, w_plus = 0;
    for (std::size_t i = 0; i < pr.combination.indices.size(); ++i) {
        if (P.atoms[pr.combination.indices[i]].g(0) < 0)
            w_minus = pr.combination.weights(static_cast<Eigen::Index>(i));
        else
            w_plus = pr.combination.weights(static_cast<Eigen::Index>(i));
    }
    CHECK(w_minus == doctest::Approx(0.4).epsilon(1e-10));
    CHECK(w_plus == doctest::Approx(0.6).epsilon(1e-10));
}

TEST_CASE("projection onto an interval end") {
    VPolytope P = explicit_atoms({vec1(-1), vec1(1)});
    Projection pr = project(vec1(2.0), P);
    CHECK(pr.point(0) == doctest::Approx(1.0));
    CHECK(pr.dist == doctest::Approx(1.0));
}

TEST_CASE("caratheodory keeps small supports untouched") {
    VPolytope P = explicit_atoms({vec1(-1), vec1(1)});
    ConvexCombination c;
    c.indices = {0, 1};
    c.weights = Vector(2);
    c.weights << 0.25, 0.75;
    ConvexCombination r = caratheodory_reduce(c, P);
    CHECK(r.indices.size() == 2);
    CHECK((combination_value(r, P) - combination_value(c, P)).norm() <= 1e-12);
}

TEST_CASE("caratheodory reduces a 3-atom 1-D combination") {
    VPolytope P = explicit_atoms({vec1(-1), vec1(0), vec1(1)});
    ConvexCombination c;
    c.indices = {0, 1, 2};
    c.weights = Vector::Constant(3, 1.0 / 3.0);
    ConvexCombination r = caratheodory_reduce(c, P);
    CHECK(r.indices.size() <= 2);
    CHECK(combination_value(r, P).norm() <= 1e-10);
    CHECK(std::abs(r.weights.sum() - 1.0) <= 1e-12);
}

TEST_CASE("caratheodory on coplanar 2-D atoms preserves the barycenter") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vector> gs;
        for (int i = 0; i < 5; ++i) {
            Vector g(2);
            g << rng::uniform(gen, -1, 1), rng::uniform(gen, -1, 1);
            gs.push_back(g);
        }
        VPolytope P = explicit_atoms(gs);
        ConvexCombination c;
        Vector w(5);
        for (int i = 0; i < 5; ++i) {
            c.indices.push_back(i);
            w(i) = rng::uniform(gen, 0.05, 1.0);
        }
        c.weights = w / w.sum();
        Vector before = combination_value(c, P);
        ConvexCombination r = caratheodory_reduce(c, P);
        CHECK(static_cast<int>(r.indices.size()) <= 3);
        CHECK((combination_value(r, P) - before).norm() <= 1e-10);
    }
}

TEST_CASE("hausdorff of identical polytopes is zero") {
    SlowDynamics slow = scalar_sin(-kPi / 2, kPi / 2);
    VPolytope P = sample_atoms(slow, Vector::Zero(1), 4, 3);
    CHECK(hull_hausdorff(P, P, 16, 9) <= 1e-12);
}

TEST_CASE("hausdorff of nested intervals is the support gap") {
    VPolytope P1 = explicit_atoms({vec1(-1), vec1(1)});
    VPolytope P2 = explicit_atoms({vec1(-1), vec1(1.5)});
    CHECK(hull_hausdorff(P1, P2, 16, 9) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("hausdorff of a translated copy is the shift norm") {
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Vector> gs, gs_shift;
        Vector t(2);
        t << rng::uniform(gen, -1, 1), rng::uniform(gen, -1, 1);
        for (int i = 0; i < 6; ++i) {
            Vector g(2);
            g << rng::uniform(gen, -1, 1), rng::uniform(gen, -1, 1);
            gs.push_back(g);
            gs_shift.push_back(g + t);
        }
        CHECK(hull_hausdorff(explicit_atoms(gs), explicit_atoms(gs_shift), 32, 9) ==
              doctest::Approx(t.norm()).epsilon(1e-9));
    }
}

// Seeded projection property batch; the acceptance suite reruns it at the
// full 1000-case volume.
TEST_CASE("projection properties on seeded random cases") {
    std::mt19937_64 gen(101);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 1 + static_cast<int>(gen() % 3);
        int count = n + 1 + static_cast<int>(gen() % 12);
        std::vector<Vector> gs;
        for (int i = 0; i < count; ++i) {
            Vector g(n);
            for (int d = 0; d < n; ++d) g(d) = rng::uniform(gen, -1, 1);
            gs.push_back(g);
        }
        VPolytope P = explicit_atoms(gs);
        Vector w1(n), w2(n);
        for (int d = 0; d < n; ++d) {
            w1(d) = rng::uniform(gen, -2, 2);
            w2(d) = rng::uniform(gen, -2, 2);
        }
        Projection p1 = project(w1, P);
        Projection p2 = project(w2, P);

        // combination consistency
        CHECK((combination_value(p1.combination, P) - p1.point).norm() <= 1e-9);
        // support size after the fully corrective solve
        CHECK(static_cast<int>(p1.combination.indices.size()) <= n + 1);
        // idempotence
        CHECK(project(p1.point, P).dist <= 1e-9);
        // nonexpansiveness
        CHECK((p1.point - p2.point).norm() <= (w1 - w2).norm() + 1e-9);
        // weights on the simplex
        CHECK(std::abs(p1.combination.weights.sum() - 1.0) <= 1e-12);
        CHECK(p1.combination.weights.minCoeff() > 0.0);
    }
}

TEST_CASE("sampled hulls obey the Lipschitz bound under reanchoring") {
    SlowDynamics slow = scalar_sin(-kPi / 2, kPi / 2);
    slow.g_exprs[0] = parse_dynamics("sin(y1) - 0.1*tanh(z1)", expr::Dims{1, 1, 1});
    slow.M_g = 1.1;
    slow.L_z = 0.1;
    std::mt19937_64 gen(77);
    VPolytope base = sample_atoms(slow, Vector::Zero(1), 5, 21);
    for (int trial = 0; trial < 40; ++trial) {
        Vector z1 = vec1(rng::uniform(gen, -2, 2));
        Vector z2 = vec1(rng::uniform(gen, -2, 2));
        VPolytope P1 = reanchor(base, slow, z1);
        VPolytope P2 = reanchor(base, slow, z2);
        double dH = hull_hausdorff(P1, P2, 8, 5);
        CHECK(dH <= slow.L_z * (z1 - z2).norm() + 1e-9);
    }
}
