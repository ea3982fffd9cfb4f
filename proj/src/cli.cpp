#include "avgctl/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <future>
#include <iostream>
#include <sstream>

#include "avgctl/io.hpp"

namespace avgctl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitInputError = 2;
constexpr int kExitNumerical = 3;

std::string fmt_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.empty()) continue;
        out.push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (out.empty()) throw SchemaError("empty numeric list: \"" + text + "\"");
    return out;
}

Vector parse_vector(const std::string& text) {
    std::vector<double> vals = parse_list(text);
    return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Scenario load_with_seed_override(const std::string& path) {
    Scenario sc = load_scenario(path);
    if (const char* env = std::getenv("AVGCTL_SEED")) {
        sc.seed = std::strtoull(env, nullptr, 10);
    }
    return sc;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const std::string& scenario, const json& params, std::uint64_t seed,
                    double wall_s, int exit_status) {
    json j;
    j["command"] = command;
    j["scenario"] = scenario;
    j["parameters"] = params;
    j["seed"] = seed;
    j["output_dir"] = dir.string();
    j["wall_time_s"] = wall_s;
    j["exit_status"] = exit_status;
    write_file_atomic((dir / "manifest.json").string(), j.dump(2) + "\n");
}

struct TrackRunResult {
    int exit_code = kExitPass;
    std::string message;
};

TrackRunResult run_one_track(const Scenario& base, double S, double eps, const fs::path& dir) {
    Scenario sc = base;
    sc.S = S;
    sc.fast.epsilon = eps;
    TrackRunResult rr;
    try {
        make_partition(sc.T, eps, S);  // surface DomainError before working
        ReferenceTrajectory zref = build_reference(sc);
        SynthesisResult res = synthesize(sc, zref);

        write_file_atomic((dir / "trajectory.csv").string(),
                          trajectory_csv(res.trajectory, zref));
        write_file_atomic((dir / "report.json").string(),
                          tracking_report_json(res.report).dump(2) + "\n");

        std::ostringstream line;
        line << "track S=" << fmt_g(S) << " eps=" << fmt_g(eps)
             << " sup_error=" << fmt_g(res.report.sup_error) << " bound_paper="
             << (res.report.bound_paper_finite ? fmt_g(res.report.bound_paper) : "inf")
             << " pass=" << (res.report.pass ? "yes" : "no");
        rr.message = line.str();
        rr.exit_code = res.report.pass ? kExitPass : kExitVerifyFail;
        if (!res.report.pass && !res.report.fail_reason.empty())
            rr.message += " (" + res.report.fail_reason + ")";
    } catch (const ScheduleInfeasible& e) {
        rr.exit_code = kExitNumerical;
        rr.message = std::string("schedule infeasible: ") + e.what();
    } catch (const SteeringIllConditioned& e) {
        rr.exit_code = kExitNumerical;
        rr.message = std::string("steering ill-conditioned: ") + e.what();
    } catch (const NumericalFailure& e) {
        rr.exit_code = kExitNumerical;
        rr.message = std::string("numerical failure: ") + e.what();
    }
    return rr;
}

int cmd_check(const std::string& scenario_path, std::ostream& out) {
    Scenario sc;
    try {
        sc = load_with_seed_override(scenario_path);
    } catch (const RankError& e) {
        out << "FAIL " << e.what() << "\n";
        return kExitVerifyFail;
    } catch (const BoundViolation& e) {
        out << "FAIL " << e.what() << "\n";
        return kExitVerifyFail;
    }

    const int m = sc.fast.m();
    out << "rank " << kalman_rank(sc.fast.A, sc.fast.B) << "/" << m << "\n";
    Gramian g = gramian(sc.fast.A, sc.fast.B, sc.S);
    out << "gramian cond at tau=S: " << fmt_g(g.cond_estimate) << "\n";
    ValidationReport vr =
        validate_declared_bounds(sc.slow, reachable_z_radius(sc), 2000, sc.seed);
    out << "bounds: max ||g|| " << fmt_g(vr.max_g_observed) << " <= M_g "
        << fmt_g(sc.slow.M_g) << ", max y-quotient " << fmt_g(vr.max_quotient_y)
        << " <= L_y " << fmt_g(sc.slow.L_y) << ", max z-quotient "
        << fmt_g(vr.max_quotient_z) << " <= L_z " << fmt_g(sc.slow.L_z) << "\n";
    out << "check: PASS\n";
    return kExitPass;
}

int cmd_track(const std::string& scenario_path, const std::string& out_dir,
              const std::vector<double>& S_list, const std::vector<double>& eps_list,
              unsigned jobs, std::ostream& out) {
    Scenario base = load_with_seed_override(scenario_path);
    const double epsS0 = base.fast.epsilon * base.S;

    struct RunSpec {
        double S, eps;
        fs::path dir;
    };
    std::vector<RunSpec> runs;
    std::vector<double> S_values = S_list.empty() ? std::vector<double>{base.S} : S_list;
    if (!eps_list.empty()) {
        // eps sweep keeps the scenario's eps*S product fixed: S = epsS0/eps.
        for (double eps : eps_list)
            for (double S : (S_list.empty() ? std::vector<double>{epsS0 / eps} : S_list))
                runs.push_back({S, eps, {}});
    } else {
        for (double S : S_values) runs.push_back({S, base.fast.epsilon, {}});
    }

    fs::path root(out_dir);
    fs::create_directories(root);
    const bool single = runs.size() == 1;
    for (RunSpec& r : runs) {
        r.dir = single ? root
                       : root / (std::string("S") + fmt_g(r.S) + "_eps" + fmt_g(r.eps));
        fs::create_directories(r.dir);
    }

    // Validate every requested partition up front so input errors exit 2.
    for (const RunSpec& r : runs) make_partition(base.T, r.eps, r.S);

    std::vector<TrackRunResult> results(runs.size());
    const unsigned fanout = std::max(1u, jobs);
    for (std::size_t i = 0; i < runs.size(); i += fanout) {
        std::vector<std::future<TrackRunResult>> futs;
        for (std::size_t j = i; j < std::min(runs.size(), i + fanout); ++j)
            futs.push_back(std::async(std::launch::async, [&, j] {
                auto start = std::chrono::steady_clock::now();
                TrackRunResult rr = run_one_track(base, runs[j].S, runs[j].eps, runs[j].dir);
                double wall =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
                json params;
                params["S"] = runs[j].S;
                params["eps"] = runs[j].eps;
                write_manifest(runs[j].dir, "track", scenario_path, params, base.seed, wall,
                               rr.exit_code);
                return rr;
            }));
        for (std::size_t j = i; j < std::min(runs.size(), i + fanout); ++j)
            results[j] = futs[j - i].get();
    }

    int exit_code = kExitPass;
    for (const TrackRunResult& rr : results) {
        out << rr.message << "\n";
        if (rr.exit_code == kExitNumerical) exit_code = kExitNumerical;
        else if (rr.exit_code != kExitPass && exit_code == kExitPass)
            exit_code = rr.exit_code;
    }
    return exit_code;
}

int cmd_steer(const std::string& scenario_path, const std::string& out_dir,
              const std::string& from_str, const std::string& to_str, double tau,
              std::ostream& out) {
    Scenario sc = load_with_seed_override(scenario_path);
    Vector y_from = from_str.empty() ? sc.fast.y0 : parse_vector(from_str);
    Vector y_to = to_str.empty() ? Vector(Vector::Zero(sc.fast.m())) : parse_vector(to_str);
    if (tau <= 0.0) tau = std::min(sc.S, 0.5);
    if (y_from.size() != sc.fast.m() || y_to.size() != sc.fast.m())
        throw SchemaError("steer endpoints must have m entries");

    auto start = std::chrono::steady_clock::now();
    SteerSegment seg = steering_gain(sc.fast.A, sc.fast.B, y_from, y_to, tau);
    double err = steer_and_check(sc.fast.A, sc.fast.B, seg, tau / 5000.0);
    Gramian g = gramian(sc.fast.A, sc.fast.B, tau);

    json j;
    j["tau"] = tau;
    j["endpoint_error"] = err;
    j["xi_norm"] = seg.xi.norm();
    j["gramian_cond"] = g.cond_estimate;
    j["pass"] = err <= 1e-6;
    fs::path dir(out_dir);
    write_file_atomic((dir / "steer_report.json").string(), j.dump(2) + "\n");
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json params;
    params["tau"] = tau;
    int code = err <= 1e-6 ? kExitPass : kExitVerifyFail;
    write_manifest(dir, "steer", scenario_path, params, sc.seed, wall, code);
    out << "steer endpoint error " << fmt_g(err) << " (tau=" << fmt_g(tau) << ")\n";
    return code;
}

int cmd_average(const std::string& scenario_path, const std::string& out_dir,
                const std::string& target_str, std::ostream& out) {
    Scenario sc = load_with_seed_override(scenario_path);
    const double epsS = sc.fast.epsilon * sc.S;

    auto start = std::chrono::steady_clock::now();
    Vector target;
    if (!target_str.empty()) {
        target = parse_vector(target_str);
        if (target.size() != sc.slow.n) throw SchemaError("--target must have n entries");
    } else {
        ReferenceTrajectory zref = build_reference(sc);
        target = reference_interval_average(zref, 0.0, std::min(epsS, sc.T));
    }

    VPolytope P = sample_atoms(sc.slow, sc.z0, sc.atoms_per_axis, sc.seed);
    Projection proj = project(target, P);
    ConvexCombination comb = caratheodory_reduce(proj.combination, P);
    auto [pruned, perturbation] = prune_combination(
        comb, P, std::max(kMinScheduleWeight, 4.0 * kMinSteerDuration / sc.S));

    double ds_min = pruned.weights.minCoeff() * sc.S;
    double delta = sc.delta ? *sc.delta
                            : std::min(epsS / (2.0 * (4.0 * sc.slow.M_g / ds_min + sc.slow.L_y)),
                                       ds_min / 8.0);

    DwellSchedule sched = build_schedule(pruned, P, sc.fast.y0, sc.S, delta, sc.fast);
    AverageResult res =
        realize_average(sched, sc.fast, sc.slow, sc.z0, default_fast_step(sc.S));

    double total_bound = res.bound + perturbation + proj.dist;
    double error_vs_request = (res.achieved_average - target).norm();

    json j;
    j["target"] = json::array();
    for (Eigen::Index i = 0; i < target.size(); ++i) j["target"].push_back(target(i));
    j["achieved"] = json::array();
    for (Eigen::Index i = 0; i < res.achieved_average.size(); ++i)
        j["achieved"].push_back(res.achieved_average(i));
    j["projection_dist"] = proj.dist;
    j["error"] = res.error;
    j["error_vs_request"] = error_vs_request;
    j["bound"] = res.bound;
    j["bound_total"] = total_bound;
    j["delta"] = sched.delta;
    j["delta_eff"] = sched.delta_eff;
    j["schedule"] = schedule_json(sched);
    fs::path dir(out_dir);
    write_file_atomic((dir / "average_report.json").string(), j.dump(2) + "\n");

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json params;
    params["delta"] = sched.delta;
    int code = (res.error <= res.bound + perturbation) ? kExitPass : kExitVerifyFail;
    write_manifest(dir, "average", scenario_path, params, sc.seed, wall, code);
    out << "average error " << fmt_g(res.error) << " vs bound " << fmt_g(res.bound)
        << " (delta=" << fmt_g(sched.delta) << ")\n";
    return code;
}

int cmd_optimize(const std::string& scenario_path, const std::string& out_dir, int pieces,
                 long budget, std::ostream& out) {
    Scenario sc = load_with_seed_override(scenario_path);
    auto start = std::chrono::steady_clock::now();
    CorollaryReport rep = corollary_compare(sc, pieces, budget);

    fs::path dir(out_dir);
    write_file_atomic((dir / "corollary_report.json").string(),
                      corollary_report_json(rep).dump(2) + "\n");
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json params;
    params["pieces"] = pieces;
    params["budget"] = budget;
    int code = (rep.ordering_ok && rep.gap <= rep.budget) ? kExitPass : kExitVerifyFail;
    write_manifest(dir, "optimize", scenario_path, params, sc.seed, wall, code);
    out << "G*_hat=" << fmt_g(rep.G_hat_star) << " G_eps_hat=" << fmt_g(rep.G_hat_eps)
        << " gap=" << fmt_g(rep.gap) << " budget=" << fmt_g(rep.budget) << "\n";
    return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"avgctl: steering, averaging, tracking and relaxation runs over scenario files"};
    app.require_subcommand(1);

    std::string scenario, out_dir = "out", sweep, eps_sweep, from_str, to_str, target_str;
    double tau = 0.0, S_flag = 0.0;
    int pieces = 4;
    long budget = 20000;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    CLI::App* check = app.add_subcommand("check", "validate a scenario file");
    check->add_option("scenario", scenario)->required();

    CLI::App* steer = app.add_subcommand("steer", "steer the associated system y_from -> y_to");
    steer->add_option("scenario", scenario)->required();
    steer->add_option("--out", out_dir);
    steer->add_option("--from", from_str);
    steer->add_option("--to", to_str);
    steer->add_option("--tau", tau);

    CLI::App* average = app.add_subcommand("average", "realize a hull point as a time average");
    average->add_option("scenario", scenario)->required();
    average->add_option("--out", out_dir);
    average->add_option("--target", target_str);

    CLI::App* track = app.add_subcommand("track", "synthesize and verify a tracking run");
    track->add_option("scenario", scenario)->required();
    track->add_option("--out", out_dir);
    track->add_option("--S", S_flag);
    track->add_option("--sweep", sweep, "comma-separated S values");
    track->add_option("--eps-sweep", eps_sweep,
                      "comma-separated eps values; keeps eps*S fixed");
    track->add_option("--jobs", jobs);

    CLI::App* optimize = app.add_subcommand("optimize", "corollary comparison run");
    optimize->add_option("scenario", scenario)->required();
    optimize->add_option("--out", out_dir);
    optimize->add_option("--pieces", pieces);
    optimize->add_option("--budget", budget);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help and friends
            out << app.help();
            return kExitPass;
        }
        err << "argument error: " << e.what() << "\n";
        return kExitInputError;
    }

    try {
        if (check->parsed()) return cmd_check(scenario, out);
        if (steer->parsed()) return cmd_steer(scenario, out_dir, from_str, to_str, tau, out);
        if (average->parsed()) return cmd_average(scenario, out_dir, target_str, out);
        if (track->parsed()) {
            std::vector<double> S_list, eps_list;
            if (!sweep.empty()) S_list = parse_list(sweep);
            if (S_flag > 0.0) S_list.push_back(S_flag);
            if (!eps_sweep.empty()) eps_list = parse_list(eps_sweep);
            return cmd_track(scenario, out_dir, S_list, eps_list, jobs, out);
        }
        if (optimize->parsed()) return cmd_optimize(scenario, out_dir, pieces, budget, out);
    } catch (const SchemaError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const ParseError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const DomainError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const RankError& e) {
        err << "validation failure: " << e.what() << "\n";
        return kExitVerifyFail;
    } catch (const BoundViolation& e) {
        err << "validation failure: " << e.what() << "\n";
        return kExitVerifyFail;
    } catch (const ScheduleInfeasible& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const SteeringIllConditioned& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    err << "no subcommand\n";
    return kExitInputError;
}

}  // namespace avgctl
