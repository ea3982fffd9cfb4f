#include "avgctl/hull.hpp"

#include <algorithm>
#include <cmath>

#include "avgctl/rng.hpp"

namespace avgctl {

namespace {

void append_atom(VPolytope& P, const SlowDynamics& slow, const Vector& u, const Vector& y,
                 const Vector& z) {
    Vector g = eval_g(slow, u, y, z);
    double gn = g.norm();
    if (gn > slow.M_g + 1e-12 * std::max(1.0, slow.M_g))
        throw BoundViolation("sampled atom with ||g|| = " + std::to_string(gn) +
                             " exceeds declared M_g = " + std::to_string(slow.M_g));
    for (const HullAtom& a : P.atoms)
        if ((a.g - g).norm() < 1e-12) return;  // dedup on the image value
    P.atoms.push_back(HullAtom{u, y, std::move(g)});
}

}  // namespace

VPolytope sample_atoms(const SlowDynamics& slow, const Vector& z, int atoms_per_axis,
                       std::uint64_t seed) {
    if (atoms_per_axis < 2) throw DomainError("sample_atoms: atoms_per_axis must be >= 2");
    for (int i = 0; i < slow.k; ++i)
        if (slow.u_box.lo(i) > slow.u_box.hi(i)) throw SchemaError("u_box is empty (lo > hi)");
    for (int i = 0; i < slow.m; ++i)
        if (slow.y_box.lo(i) > slow.y_box.hi(i)) throw SchemaError("y_box is empty (lo > hi)");

    VPolytope P;
    P.z_anchor = z;
    P.grid_per_axis = atoms_per_axis;
    P.seed = seed;

    const int axes = slow.k + slow.m;
    auto axis_lo = [&](int a) { return a < slow.k ? slow.u_box.lo(a) : slow.y_box.lo(a - slow.k); };
    auto axis_hi = [&](int a) { return a < slow.k ? slow.u_box.hi(a) : slow.y_box.hi(a - slow.k); };

    // Deterministic grid, u axes fastest.
    long grid_count = 1;
    for (int a = 0; a < axes; ++a) {
        grid_count *= atoms_per_axis;
        if (grid_count > 1000000)
            throw SchemaError("sample_atoms: atoms_per_axis^(k+m) exceeds 1e6 grid points");
    }
    for (long g = 0; g < grid_count; ++g) {
        Vector u(slow.k), y(slow.m);
        long rem = g;
        for (int a = 0; a < axes; ++a) {
            int i = static_cast<int>(rem % atoms_per_axis);
            rem /= atoms_per_axis;
            double lo = axis_lo(a), hi = axis_hi(a);
            double v = (atoms_per_axis == 1)
                           ? lo
                           : lo + (hi - lo) * static_cast<double>(i) / (atoms_per_axis - 1);
            if (a < slow.k) u(a) = v;
            else y(a - slow.k) = v;
        }
        append_atom(P, slow, u, y, z);
    }

    std::mt19937_64 gen(seed);
    for (long s = 0; s < grid_count; ++s) {
        Vector u = rng::in_box(gen, slow.u_box.lo, slow.u_box.hi);
        Vector y = rng::in_box(gen, slow.y_box.lo, slow.y_box.hi);
        append_atom(P, slow, u, y, z);
    }
    return P;
}

VPolytope reanchor(const VPolytope& P, const SlowDynamics& slow, const Vector& z_new) {
    VPolytope out;
    out.z_anchor = z_new;
    out.grid_per_axis = P.grid_per_axis;
    out.seed = P.seed;
    out.atoms.reserve(P.atoms.size());
    for (const HullAtom& a : P.atoms)
        out.atoms.push_back(HullAtom{a.u, a.y, eval_g(slow, a.u, a.y, z_new)});
    return out;
}

Vector combination_value(const ConvexCombination& c, const VPolytope& P) {
    if (c.indices.empty()) throw DomainError("combination_value: empty combination");
    Vector v = Vector::Zero(P.atoms[0].g.size());
    for (std::size_t i = 0; i < c.indices.size(); ++i)
        v += c.weights(static_cast<Eigen::Index>(i)) * P.atoms[c.indices[i]].g;
    return v;
}

namespace {

// Affine minimizer of ||sum mu_i a_i - w|| subject to sum mu_i = 1,
// through the bordered normal equations on the shifted atoms.
Vector affine_minimizer(const std::vector<int>& support, const VPolytope& P, const Vector& w) {
    const int s = static_cast<int>(support.size());
    const int n = static_cast<int>(w.size());
    Matrix B(n, s);
    for (int i = 0; i < s; ++i) B.col(i) = P.atoms[support[i]].g - w;
    Matrix K = Matrix::Zero(s + 1, s + 1);
    K.topLeftCorner(s, s) = B.transpose() * B;
    K.topRightCorner(s, 1).setOnes();
    K.bottomLeftCorner(1, s).setOnes();
    Vector rhs = Vector::Zero(s + 1);
    rhs(s) = 1.0;
    Vector sol = K.completeOrthogonalDecomposition().solve(rhs);
    return sol.head(s);
}

}  // namespace

Projection project(const Vector& w, const VPolytope& P) {
    if (P.atoms.empty()) throw DomainError("project: polytope has no atoms");
    const int n = static_cast<int>(w.size());
    const int N = static_cast<int>(P.atoms.size());
    const long max_iter = 10L * (n + 2) * N;
    const double gap_tol = 1e-10;

    // Start from the nearest single atom.
    int best = 0;
    double best_d = (P.atoms[0].g - w).squaredNorm();
    for (int i = 1; i < N; ++i) {
        double d = (P.atoms[i].g - w).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    std::vector<int> support = {best};
    Vector lambda = Vector::Ones(1);
    Vector v = P.atoms[best].g;

    long iter = 0;
    while (true) {
        if (++iter > max_iter)
            throw NumericalFailure("project: min-norm-point iteration cap exceeded");
        Vector d = v - w;

        int istar = 0;
        double best_dot = d.dot(P.atoms[0].g);
        for (int i = 1; i < N; ++i) {
            double dot = d.dot(P.atoms[i].g);
            if (dot < best_dot) {
                best_dot = dot;
                istar = i;
            }
        }
        double gap = d.dot(v) - best_dot;
        if (gap <= gap_tol) break;

        if (std::find(support.begin(), support.end(), istar) == support.end()) {
            support.push_back(istar);
            lambda.conservativeResize(lambda.size() + 1);
            lambda(lambda.size() - 1) = 0.0;
        }

        // Minor cycle: fully corrective reoptimization over the support.
        while (true) {
            if (++iter > max_iter)
                throw NumericalFailure("project: min-norm-point iteration cap exceeded");
            Vector mu = affine_minimizer(support, P, w);
            if (mu.minCoeff() >= -1e-12) {
                lambda = mu.cwiseMax(0.0);
                double sum = lambda.sum();
                if (sum <= 0.0) throw NumericalFailure("project: degenerate weights");
                lambda /= sum;
                break;
            }
            double theta = 1.0;
            for (Eigen::Index i = 0; i < mu.size(); ++i)
                if (mu(i) < 0.0) theta = std::min(theta, lambda(i) / (lambda(i) - mu(i)));
            lambda = lambda + theta * (mu - lambda);
            // Drop zeroed atoms, keeping the support affinely independent.
            std::vector<int> kept;
            std::vector<double> kept_w;
            for (std::size_t i = 0; i < support.size(); ++i)
                if (lambda(static_cast<Eigen::Index>(i)) > 1e-14) {
                    kept.push_back(support[i]);
                    kept_w.push_back(lambda(static_cast<Eigen::Index>(i)));
                }
            if (kept.empty()) {
                kept.push_back(support[0]);
                kept_w.push_back(1.0);
            }
            support = std::move(kept);
            lambda = Eigen::Map<Vector>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
            lambda /= lambda.sum();
        }

        v = Vector::Zero(n);
        for (std::size_t i = 0; i < support.size(); ++i)
            v += lambda(static_cast<Eigen::Index>(i)) * P.atoms[support[i]].g;
    }

    // Final cleanup: drop numerically-zero weights and renormalize.
    Projection out;
    std::vector<int> kept;
    std::vector<double> kept_w;
    for (std::size_t i = 0; i < support.size(); ++i)
        if (lambda(static_cast<Eigen::Index>(i)) > 1e-14) {
            kept.push_back(support[i]);
            kept_w.push_back(lambda(static_cast<Eigen::Index>(i)));
        }
    if (kept.empty()) {
        kept.push_back(support[0]);
        kept_w.push_back(1.0);
    }
    out.combination.indices = std::move(kept);
    out.combination.weights =
        Eigen::Map<Vector>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
    out.combination.weights /= out.combination.weights.sum();
    out.point = combination_value(out.combination, P);
    out.dist = (out.point - w).norm();
    return out;
}

ConvexCombination caratheodory_reduce(const ConvexCombination& c, const VPolytope& P) {
    ConvexCombination cur = c;
    if (cur.indices.empty()) return cur;
    const int n = static_cast<int>(P.atoms[0].g.size());

    while (static_cast<int>(cur.indices.size()) > n + 1) {
        const int s = static_cast<int>(cur.indices.size());
        // Affine dependence: nontrivial alpha with sum alpha_i a_i = 0 and
        // sum alpha_i = 0, i.e. a kernel vector of [A; 1^T].
        Matrix M(n + 1, s);
        for (int i = 0; i < s; ++i) {
            M.block(0, i, n, 1) = P.atoms[cur.indices[i]].g;
            M(n, i) = 1.0;
        }
        Eigen::FullPivLU<Matrix> lu(M);
        lu.setThreshold(1e-12);
        Matrix kernel = lu.kernel();
        if (kernel.cols() == 0 || kernel.col(0).norm() < 1e-14) break;
        Vector alpha = kernel.col(0);
        if (alpha.maxCoeff() <= 0.0) alpha = -alpha;

        double t = std::numeric_limits<double>::infinity();
        int drop = -1;
        for (int i = 0; i < s; ++i)
            if (alpha(i) > 1e-300) {
                double r = cur.weights(i) / alpha(i);
                if (r < t) {
                    t = r;
                    drop = i;
                }
            }
        if (drop < 0) break;
        Vector w2 = cur.weights - t * alpha;
        w2(drop) = 0.0;

        std::vector<int> kept;
        std::vector<double> kept_w;
        for (int i = 0; i < s; ++i)
            if (i != drop && w2(i) > 1e-15) {
                kept.push_back(cur.indices[i]);
                kept_w.push_back(w2(i));
            }
        if (kept.empty()) {
            kept.push_back(cur.indices[drop]);
            kept_w.push_back(1.0);
        }
        cur.indices = std::move(kept);
        cur.weights = Eigen::Map<Vector>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
        cur.weights /= cur.weights.sum();
    }
    return cur;
}

double hull_hausdorff(const VPolytope& P1, const VPolytope& P2, int probe_count,
                      std::uint64_t seed) {
    if (P1.atoms.empty() || P2.atoms.empty())
        throw DomainError("hull_hausdorff: empty polytope");
    const int n = static_cast<int>(P1.atoms[0].g.size());
    if (static_cast<int>(P2.atoms[0].g.size()) != n)
        throw DimensionError("hull_hausdorff: dimension mismatch");

    double h = 0.0;
    for (const HullAtom& a : P1.atoms) h = std::max(h, project(a.g, P2).dist);
    for (const HullAtom& a : P2.atoms) h = std::max(h, project(a.g, P1).dist);

    auto support = [&](const VPolytope& P, const Vector& d) {
        double s = d.dot(P.atoms[0].g);
        for (const HullAtom& a : P.atoms) s = std::max(s, d.dot(a.g));
        return s;
    };
    std::mt19937_64 gen(seed);
    for (int p = 0; p < probe_count; ++p) {
        Vector d = rng::unit_vector(gen, n);
        h = std::max(h, std::abs(support(P1, d) - support(P2, d)));
    }
    return h;
}

}  // namespace avgctl
