#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avgctl/expr.hpp"
#include "avgctl/linops.hpp"

namespace avgctl {

// Fast subsystem eps*dy/dt = A y + B u with its initial state. The Kalman
// rank condition is checked on scenario load.
struct FastSystem {
    double epsilon = 1.0;
    Matrix A;
    Matrix B;
    Vector y0;

    int m() const { return static_cast<int>(A.rows()); }
    int k() const { return static_cast<int>(B.cols()); }
};

struct Box {
    Vector lo;
    Vector hi;
};

// dz/dt = g(u, y, z), componentwise expression trees with user-declared
// bound and Lipschitz constants. The constants are falsified by sampling,
// never proven.
struct SlowDynamics {
    std::vector<expr::Tree> g_exprs;
    double M_g = 0.0;
    double L_z = 0.0;
    double L_y = 0.0;
    Box u_box;
    Box y_box;
    int k = 0, m = 0, n = 0;
};

Vector eval_g(const SlowDynamics& slow, const Vector& u, const Vector& y, const Vector& z);

struct RelaxedPieceSpec {
    double t_end = 0.0;
    std::vector<Vector> atoms_u;
    std::vector<Vector> atoms_y;
    Vector weights;
};

struct ReferenceSpec {
    enum class Type { ConstantDerivative, Relaxed, File };
    Type type = Type::ConstantDerivative;
    Vector constant_value;                   // ConstantDerivative
    std::vector<RelaxedPieceSpec> pieces;    // Relaxed
    std::string path;                        // File
};

struct Scenario {
    FastSystem fast;
    SlowDynamics slow;
    Vector z0;
    double T = 0.0;
    double S = 0.0;
    std::optional<double> delta;  // nullopt = "auto"
    int atoms_per_axis = 2;
    std::uint64_t seed = 0;
    ReferenceSpec reference;
    std::optional<expr::Tree> objective;
    std::string path;  // file it was loaded from, if any
};

struct ValidationReport {
    double max_g_observed = 0.0;
    double max_quotient_y = 0.0;
    double max_quotient_z = 0.0;
    bool pass = false;
    std::string witness;  // empty when pass
};

// Monte-Carlo falsification of M_g / L_y / L_z over u_box x y_box x a
// z-ball of the given radius. Throws BoundViolation on exceedance.
ValidationReport validate_declared_bounds(const SlowDynamics& slow, double z_radius,
                                          int samples, std::uint64_t seed);

// Parses one component expression against the scenario dimensions.
expr::Tree parse_dynamics(const std::string& text, expr::Dims dims);

// Loads and fully validates a scenario file (schema, rank condition,
// declared-bound sampling). Deterministic given file content.
Scenario load_scenario(const std::string& path);

// Radius of the z-ball used by bound validation: ||z0|| + M_g*T + 1, which
// contains every state reachable within the horizon.
double reachable_z_radius(const Scenario& sc);

}  // namespace avgctl
