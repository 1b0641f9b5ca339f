#pragma once

#include <string>
#include <vector>

#include "mlam/engine.hpp"

namespace mlam {

// shortest exact decimal representation; round-trips to the same double
std::string format_double(double v);

// RFC-4180 CSV (CRLF line endings, quoted fields where needed)
std::string csv_escape(const std::string& field);
void write_csv(const std::string& path, const std::vector<std::vector<std::string>>& rows);

// Trajectory CSV schema shared by the engine and the baselines:
// method,outer_t,global_loss,metric. Row outer_t=0 is the state before the
// first outer iteration.
void write_trajectory_csv(const std::string& path, const std::string& method,
                          const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const std::string& method,
                          const std::vector<double>& losses, const std::vector<double>& metrics);

// sidecar with the configuration and seed that produced a trajectory
void write_trajectory_sidecar(const std::string& path, const MLAMConfig& cfg,
                              uint64_t problem_seed, const std::string& method);

std::string config_to_json(const MLAMConfig& cfg);
MLAMConfig config_from_json(const std::string& text);

}  // namespace mlam
