#pragma once

#include <cstdint>
#include <vector>

#include "avgctl/model.hpp"

namespace avgctl {

// One sampled witness (u_i, y_i) with its image g_i = g(u_i, y_i, z_anchor).
struct HullAtom {
    Vector u;
    Vector y;
    Vector g;
};

// Finite inner approximation of the closed convex hull of the g-image at a
// fixed z. g values are recomputable from the stored witnesses.
struct VPolytope {
    Vector z_anchor;
    std::vector<HullAtom> atoms;
    int grid_per_axis = 0;
    std::uint64_t seed = 0;
};

struct ConvexCombination {
    std::vector<int> indices;
    Vector weights;
};

struct Projection {
    Vector point;
    ConvexCombination combination;
    double dist = 0.0;
};

// Deterministic grid over u_box x y_box plus an equal count of seeded
// uniform samples; duplicate g-values (within 1e-12) are merged.
VPolytope sample_atoms(const SlowDynamics& slow, const Vector& z, int atoms_per_axis,
                       std::uint64_t seed);

// Rebuilds the polytope at a new anchor with the same witness set.
VPolytope reanchor(const VPolytope& P, const SlowDynamics& slow, const Vector& z_new);

// Min-norm-point projection of w onto co(atoms): fully corrective
// Frank-Wolfe, terminating when the duality gap is <= 1e-10. The returned
// support is affinely independent.
Projection project(const Vector& w, const VPolytope& P);

// Reduces the support to at most n+1 atoms by iterative affine-dependence
// elimination; the barycenter is preserved.
ConvexCombination caratheodory_reduce(const ConvexCombination& c, const VPolytope& P);

Vector combination_value(const ConvexCombination& c, const VPolytope& P);

// Hausdorff-distance estimate: exact directed distances over atoms (each
// atom projected onto the other hull) plus seeded support-function probes.
double hull_hausdorff(const VPolytope& P1, const VPolytope& P2, int probe_count,
                      std::uint64_t seed);

}  // namespace avgctl
