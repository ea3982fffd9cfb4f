#include "avgctl/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "avgctl/rng.hpp"

namespace avgctl {

using nlohmann::json;

Vector eval_g(const SlowDynamics& slow, const Vector& u, const Vector& y, const Vector& z) {
    if (u.size() != slow.k || y.size() != slow.m || z.size() != slow.n)
        throw DimensionError("eval_g: argument dimensions do not match declared (k, m, n)");
    Vector out(slow.n);
    for (int i = 0; i < slow.n; ++i) out(i) = expr::eval(slow.g_exprs[i], u, y, z);
    return out;
}

expr::Tree parse_dynamics(const std::string& text, expr::Dims dims) {
    return expr::parse(text, dims);
}

namespace {

std::string fmt_vec(const Vector& v) {
    std::ostringstream os;
    os << "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) os << ", ";
        os << v(i);
    }
    os << "]";
    return os.str();
}

}  // namespace

ValidationReport validate_declared_bounds(const SlowDynamics& slow, double z_radius,
                                          int samples, std::uint64_t seed) {
    if (samples < 1000) throw DomainError("validate_declared_bounds: samples must be >= 1000");

    std::mt19937_64 gen(seed);
    ValidationReport rep;
    const double tol = 1e-12;

    auto check = [&](double observed, double declared, const char* what, const Vector& u,
                     const Vector& y, const Vector& z) {
        if (observed > declared + tol * std::max(1.0, declared)) {
            std::ostringstream os;
            os << what << " observed " << observed << " exceeds declared " << declared
               << " at u=" << fmt_vec(u) << " y=" << fmt_vec(y) << " z=" << fmt_vec(z);
            rep.witness = os.str();
            throw BoundViolation(rep.witness);
        }
    };

    for (int s = 0; s < samples; ++s) {
        Vector u = rng::in_box(gen, slow.u_box.lo, slow.u_box.hi);
        Vector y = rng::in_box(gen, slow.y_box.lo, slow.y_box.hi);
        Vector z = rng::in_ball(gen, slow.n, z_radius);

        Vector g0 = eval_g(slow, u, y, z);
        rep.max_g_observed = std::max(rep.max_g_observed, g0.norm());
        check(g0.norm(), slow.M_g, "||g||", u, y, z);

        // Difference quotients in y: alternate box-scale and local probes so
        // steep local slopes are not washed out.
        Vector y2;
        if (s % 2 == 0) {
            y2 = rng::in_box(gen, slow.y_box.lo, slow.y_box.hi);
        } else {
            Vector d = rng::unit_vector(gen, slow.m);
            y2 = y + 1e-4 * d;
            for (int i = 0; i < slow.m; ++i)
                y2(i) = std::min(std::max(y2(i), slow.y_box.lo(i)), slow.y_box.hi(i));
        }
        double dy = (y2 - y).norm();
        if (dy > 1e-9) {
            double q = (eval_g(slow, u, y2, z) - g0).norm() / dy;
            rep.max_quotient_y = std::max(rep.max_quotient_y, q);
            check(q, slow.L_y, "y-Lipschitz quotient", u, y, z);
        }

        Vector z2;
        if (s % 2 == 0) {
            z2 = rng::in_ball(gen, slow.n, z_radius);
        } else {
            z2 = z + 1e-4 * rng::unit_vector(gen, slow.n);
        }
        double dz = (z2 - z).norm();
        if (dz > 1e-9) {
            double q = (eval_g(slow, u, y, z2) - g0).norm() / dz;
            rep.max_quotient_z = std::max(rep.max_quotient_z, q);
            check(q, slow.L_z, "z-Lipschitz quotient", u, y, z);
        }
    }
    rep.pass = true;
    return rep;
}

double reachable_z_radius(const Scenario& sc) {
    return sc.z0.norm() + sc.slow.M_g * sc.T + 1.0;
}

namespace {

[[noreturn]] void schema_fail(const std::string& msg) { throw SchemaError(msg); }

void require_keys(const json& j, const std::set<std::string>& required,
                  const std::set<std::string>& optional, const std::string& where) {
    for (auto& [key, _] : j.items()) {
        if (!required.count(key) && !optional.count(key))
            schema_fail("unknown key \"" + key + "\" in " + where);
    }
    for (const auto& key : required)
        if (!j.contains(key)) schema_fail("missing key \"" + key + "\" in " + where);
}

double get_number(const json& j, const std::string& key) {
    if (!j.at(key).is_number()) schema_fail("\"" + key + "\" must be a number");
    return j.at(key).get<double>();
}

Vector get_vector(const json& j, const std::string& key) {
    const json& a = j.at(key);
    if (!a.is_array() || a.empty()) schema_fail("\"" + key + "\" must be a nonempty array");
    Vector v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) schema_fail("\"" + key + "\" must contain numbers");
        v(i) = a[i].get<double>();
    }
    return v;
}

Vector json_to_vector(const json& a, const std::string& where) {
    if (!a.is_array() || a.empty()) schema_fail(where + " must be a nonempty array");
    Vector v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) schema_fail(where + " must contain numbers");
        v(i) = a[i].get<double>();
    }
    return v;
}

Matrix get_matrix(const json& j, const std::string& key) {
    const json& a = j.at(key);
    if (!a.is_array() || a.empty()) schema_fail("\"" + key + "\" must be a nonempty nested array");
    std::size_t cols = 0;
    for (std::size_t r = 0; r < a.size(); ++r) {
        if (!a[r].is_array() || a[r].empty())
            schema_fail("\"" + key + "\" rows must be nonempty arrays");
        if (r == 0) cols = a[r].size();
        else if (a[r].size() != cols) schema_fail("\"" + key + "\" rows have unequal lengths");
    }
    Matrix M(a.size(), cols);
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            if (!a[r][c].is_number()) schema_fail("\"" + key + "\" must contain numbers");
            M(r, c) = a[r][c].get<double>();
        }
    return M;
}

Box get_box(const json& j, const std::string& key, int dim) {
    const json& b = j.at(key);
    if (!b.is_object()) schema_fail("\"" + key + "\" must be an object {lo, hi}");
    require_keys(b, {"lo", "hi"}, {}, "\"" + key + "\"");
    Box box;
    box.lo = json_to_vector(b.at("lo"), "\"" + key + ".lo\"");
    box.hi = json_to_vector(b.at("hi"), "\"" + key + ".hi\"");
    if (box.lo.size() != dim || box.hi.size() != dim)
        schema_fail("\"" + key + "\" must have " + std::to_string(dim) + " entries per side");
    for (int i = 0; i < dim; ++i)
        if (box.lo(i) > box.hi(i))
            schema_fail("\"" + key + "\" is empty: lo > hi at coordinate " + std::to_string(i + 1));
    return box;
}

ReferenceSpec get_reference(const json& j, int k, int m, int n, double T,
                            const std::filesystem::path& base_dir) {
    const json& r = j.at("reference");
    if (!r.is_object() || !r.contains("type") || !r.at("type").is_string())
        schema_fail("\"reference\" must be an object with a \"type\" string");
    ReferenceSpec spec;
    std::string type = r.at("type").get<std::string>();
    if (type == "constant_derivative") {
        require_keys(r, {"type", "value"}, {}, "\"reference\"");
        spec.type = ReferenceSpec::Type::ConstantDerivative;
        spec.constant_value = json_to_vector(r.at("value"), "\"reference.value\"");
        if (spec.constant_value.size() != n)
            schema_fail("\"reference.value\" must have n entries");
    } else if (type == "relaxed") {
        require_keys(r, {"type", "pieces"}, {}, "\"reference\"");
        spec.type = ReferenceSpec::Type::Relaxed;
        const json& pieces = r.at("pieces");
        if (!pieces.is_array() || pieces.empty())
            schema_fail("\"reference.pieces\" must be a nonempty array");
        double prev_end = 0.0;
        for (const json& p : pieces) {
            require_keys(p, {"t_end", "weights", "atoms_u", "atoms_y"}, {},
                         "\"reference.pieces[]\"");
            RelaxedPieceSpec ps;
            ps.t_end = get_number(p, "t_end");
            if (!(ps.t_end > prev_end))
                schema_fail("\"reference.pieces\" t_end values must be strictly increasing");
            prev_end = ps.t_end;
            ps.weights = json_to_vector(p.at("weights"), "\"weights\"");
            const json& au = p.at("atoms_u");
            const json& ay = p.at("atoms_y");
            if (!au.is_array() || !ay.is_array() ||
                au.size() != static_cast<std::size_t>(ps.weights.size()) ||
                ay.size() != static_cast<std::size_t>(ps.weights.size()))
                schema_fail("\"atoms_u\"/\"atoms_y\" must list one atom per weight");
            double wsum = 0.0;
            for (Eigen::Index i = 0; i < ps.weights.size(); ++i) {
                if (ps.weights(i) <= 0.0) schema_fail("relaxed weights must be > 0");
                wsum += ps.weights(i);
            }
            if (std::abs(wsum - 1.0) > 1e-9)
                schema_fail("relaxed weights must sum to 1");
            for (std::size_t i = 0; i < au.size(); ++i) {
                Vector u = json_to_vector(au[i], "\"atoms_u\"");
                Vector y = json_to_vector(ay[i], "\"atoms_y\"");
                if (u.size() != k || y.size() != m)
                    schema_fail("relaxed atoms must have dimensions (k, m)");
                ps.atoms_u.push_back(u);
                ps.atoms_y.push_back(y);
            }
            spec.pieces.push_back(std::move(ps));
        }
        if (std::abs(prev_end - T) > 1e-9)
            schema_fail("\"reference.pieces\" must end exactly at T");
    } else if (type == "file") {
        require_keys(r, {"type", "path"}, {}, "\"reference\"");
        spec.type = ReferenceSpec::Type::File;
        if (!r.at("path").is_string()) schema_fail("\"reference.path\" must be a string");
        std::filesystem::path p = r.at("path").get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        spec.path = p.string();
        if (!std::filesystem::exists(spec.path))
            schema_fail("referenced trajectory file does not exist: " + spec.path);
    } else {
        schema_fail("unknown reference type \"" + type + "\"");
    }
    return spec;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open scenario file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("scenario is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw SchemaError("scenario must be a JSON object");

    static const std::set<std::string> required = {
        "epsilon", "A", "B", "y0", "z0", "T", "S", "delta", "g",
        "M_g", "L_z", "L_y", "u_box", "y_box", "atoms_per_axis", "seed", "reference"};
    static const std::set<std::string> optional = {"objective"};
    require_keys(j, required, optional, "scenario");

    Scenario sc;
    sc.path = path;

    sc.fast.epsilon = get_number(j, "epsilon");
    if (!(sc.fast.epsilon > 0.0)) schema_fail("epsilon must be > 0");

    sc.fast.A = get_matrix(j, "A");
    sc.fast.B = get_matrix(j, "B");
    if (sc.fast.A.rows() != sc.fast.A.cols()) schema_fail("\"A\" must be square");
    if (sc.fast.B.rows() != sc.fast.A.rows())
        schema_fail("\"B\" must have as many rows as A");
    const int m = sc.fast.m();
    const int k = sc.fast.k();

    sc.fast.y0 = get_vector(j, "y0");
    if (sc.fast.y0.size() != m) schema_fail("\"y0\" must have m entries");

    sc.z0 = get_vector(j, "z0");
    const int n = static_cast<int>(sc.z0.size());

    sc.T = get_number(j, "T");
    if (!(sc.T > 0.0)) schema_fail("T must be > 0");
    sc.S = get_number(j, "S");
    if (!(sc.S > 0.0)) schema_fail("S must be > 0");
    if (sc.S > sc.T / sc.fast.epsilon * (1.0 + 1e-12))
        schema_fail("S must satisfy S <= T/epsilon");

    if (j.at("delta").is_string()) {
        if (j.at("delta").get<std::string>() != "auto")
            schema_fail("\"delta\" must be a positive number or \"auto\"");
        sc.delta = std::nullopt;
    } else if (j.at("delta").is_number()) {
        double d = j.at("delta").get<double>();
        if (!(d > 0.0)) schema_fail("\"delta\" must be > 0");
        sc.delta = d;
    } else {
        schema_fail("\"delta\" must be a positive number or \"auto\"");
    }

    const json& g = j.at("g");
    if (!g.is_array() || g.empty()) schema_fail("\"g\" must be a nonempty array of strings");
    if (g.size() != static_cast<std::size_t>(n))
        schema_fail("\"g\" must have one expression per z component");
    expr::Dims dims{k, m, n};
    for (const json& e : g) {
        if (!e.is_string()) schema_fail("\"g\" entries must be strings");
        sc.slow.g_exprs.push_back(parse_dynamics(e.get<std::string>(), dims));
    }

    sc.slow.M_g = get_number(j, "M_g");
    if (!(sc.slow.M_g > 0.0)) schema_fail("M_g must be > 0");
    sc.slow.L_z = get_number(j, "L_z");
    if (sc.slow.L_z < 0.0) schema_fail("L_z must be >= 0");
    sc.slow.L_y = get_number(j, "L_y");
    if (sc.slow.L_y < 0.0) schema_fail("L_y must be >= 0");

    sc.slow.u_box = get_box(j, "u_box", k);
    sc.slow.y_box = get_box(j, "y_box", m);
    sc.slow.k = k;
    sc.slow.m = m;
    sc.slow.n = n;

    if (!j.at("atoms_per_axis").is_number_integer())
        schema_fail("\"atoms_per_axis\" must be an integer");
    sc.atoms_per_axis = j.at("atoms_per_axis").get<int>();
    if (sc.atoms_per_axis < 2) schema_fail("atoms_per_axis must be >= 2");

    if (!j.at("seed").is_number_integer()) schema_fail("\"seed\" must be an integer");
    if (j.at("seed").is_number_integer() && !j.at("seed").is_number_unsigned() &&
        j.at("seed").get<long long>() < 0)
        schema_fail("\"seed\" must be >= 0");
    sc.seed = j.at("seed").get<std::uint64_t>();

    std::filesystem::path base_dir = std::filesystem::path(path).parent_path();
    sc.reference = get_reference(j, k, m, n, sc.T, base_dir);

    if (j.contains("objective")) {
        if (!j.at("objective").is_string()) schema_fail("\"objective\" must be a string");
        sc.objective = expr::parse(j.at("objective").get<std::string>(), expr::Dims{0, 0, n});
    }

    int rank = kalman_rank(sc.fast.A, sc.fast.B);
    if (rank < m)
        throw RankError("rank condition fails: rank " + std::to_string(rank) + " < " +
                        std::to_string(m));

    validate_declared_bounds(sc.slow, reachable_z_radius(sc), 2000, sc.seed);
    return sc;
}

}  // namespace avgctl
