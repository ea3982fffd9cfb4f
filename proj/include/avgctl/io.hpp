#pragma once

#include <json.hpp>
#include <string>

#include "avgctl/relax.hpp"
#include "avgctl/track.hpp"

namespace avgctl {

// Writes content to path via a temp file + rename so partial files never
// appear under the final name.
void write_file_atomic(const std::string& path, const std::string& content);

// CSV with header "t,y_1..y_m,z_1..z_n,u_1..u_k,zref_1..zref_n", values at
// 17 significant digits.
std::string trajectory_csv(const Trajectory& traj, const ReferenceTrajectory& zref);

nlohmann::json tracking_report_json(const TrackingReport& rep);
nlohmann::json corollary_report_json(const CorollaryReport& rep);

// Schedule dump (diagnostic): list of {kind, duration, target|u}.
nlohmann::json schedule_json(const DwellSchedule& sched);

}  // namespace avgctl
