#include "avgctl/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace avgctl {

using nlohmann::json;

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DomainError("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json vec_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj, const ReferenceTrajectory& zref) {
    if (traj.t.empty()) throw DomainError("trajectory_csv: empty trajectory");
    const int m = static_cast<int>(traj.y[0].size());
    const int n = static_cast<int>(traj.z[0].size());
    const int k = static_cast<int>(traj.u[0].size());

    std::string out = "t";
    for (int i = 1; i <= m; ++i) out += ",y_" + std::to_string(i);
    for (int i = 1; i <= n; ++i) out += ",z_" + std::to_string(i);
    for (int i = 1; i <= k; ++i) out += ",u_" + std::to_string(i);
    for (int i = 1; i <= n; ++i) out += ",zref_" + std::to_string(i);
    out += "\n";

    for (std::size_t r = 0; r < traj.t.size(); ++r) {
        out += fmt17(traj.t[r]);
        for (int i = 0; i < m; ++i) out += "," + fmt17(traj.y[r](i));
        for (int i = 0; i < n; ++i) out += "," + fmt17(traj.z[r](i));
        for (int i = 0; i < k; ++i) out += "," + fmt17(traj.u[r](i));
        Vector zr = zref.at(std::min(traj.t[r], zref.t_end()));
        for (int i = 0; i < n; ++i) out += "," + fmt17(zr(i));
        out += "\n";
    }
    return out;
}

json tracking_report_json(const TrackingReport& rep) {
    json j;
    j["sup_error"] = rep.sup_error;
    j["bound_paper"] = rep.bound_paper_finite ? json(rep.bound_paper) : json();  // null at L_z=0
    j["bound_limit"] = rep.bound_limit;
    j["eps"] = rep.eps;
    j["S"] = rep.S;
    j["N"] = rep.N;
    j["pass"] = rep.pass;
    if (!rep.fail_reason.empty()) j["fail_reason"] = rep.fail_reason;
    j["max_projection_dist"] = rep.max_projection_dist;
    json intervals = json::array();
    for (const IntervalRecord& r : rep.intervals) {
        json ji;
        ji["l"] = r.l;
        ji["t_l"] = r.t_l;
        ji["projection_dist"] = r.projection_dist;
        ji["average_error"] = r.average_error;
        ji["average_bound"] = r.average_bound;
        ji["z_err"] = r.z_err;
        ji["delta_eff"] = r.delta_eff;
        intervals.push_back(std::move(ji));
    }
    j["intervals"] = std::move(intervals);
    return j;
}

json corollary_report_json(const CorollaryReport& rep) {
    json j;
    j["G_hat_star"] = rep.G_hat_star;
    j["G_hat_eps"] = rep.G_hat_eps;
    j["gap"] = rep.gap;
    j["budget"] = rep.budget;
    j["S"] = rep.S;
    j["eps"] = rep.eps;
    j["starts"] = rep.starts;
    j["max_projection_dist"] = rep.max_projection_dist;
    j["ordering_ok"] = rep.ordering_ok;
    return j;
}

json schedule_json(const DwellSchedule& sched) {
    json segs = json::array();
    for (const DwellSegment& s : sched.segments) {
        json js;
        js["kind"] = s.kind == DwellSegment::Kind::Move ? "move" : "hold";
        js["duration"] = s.duration;
        const DwellWindow& w = sched.windows[s.window];
        if (s.kind == DwellSegment::Kind::Move) js["target"] = vec_json(w.y);
        else js["u"] = vec_json(w.u);
        segs.push_back(std::move(js));
    }
    return segs;
}

}  // namespace avgctl
