#pragma once

// CSV artifacts. Every file starts with one comment line
//   # mad-csv schema_version=1 <compact JSON config snapshot>
// followed by a header row. Readers skip lines starting with '#'.

#include <string>
#include <vector>

#include <json.hpp>

#include "mad/nnscore.hpp"
#include "mad/sampler.hpp"
#include "mad/types.hpp"

namespace mad {

inline constexpr int kCsvSchemaVersion = 1;

/// index, x0, x1, ...
void write_points_csv(const std::string& path, const std::vector<Vec>& points, const nlohmann::json& config);
std::vector<Vec> read_points_csv(const std::string& path);

/// step, t, gamma, m, x0, ... with one row per iterate; the final row (t_N = 0)
/// leaves gamma and m empty.
void write_trajectory_csv(const std::string& path, const Trajectory& traj, const nlohmann::json& config);

/// iteration, loss, learning_rate
void write_train_log_csv(const std::string& path, const std::vector<TrainRecord>& curve, const nlohmann::json& config);

/// Shortest decimal that round-trips.
std::string format_double(double v);

}  // namespace mad
