#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "singarc/integrate.hpp"

namespace singarc {

/// CSV header for a system with `n` degrees of freedom:
/// t,q1..qn,qd1..qdn,u1..un[,l1..l2n].
std::string trajectory_header(int n, bool with_costates);

/// Sidecar metadata path: "run.csv" -> "run.meta.json".
std::filesystem::path metadata_path(const std::filesystem::path& csv_path);

/// Writes the CSV (17 significant digits, so values round-trip exactly) and
/// the JSON sidecar.
void write_trajectory(const std::filesystem::path& csv_path, const Trajectory& traj);

/// Parses and validates a trajectory CSV. Costate columns are optional; when
/// absent the trajectory is flagged "no_costates". A sidecar, if present,
/// supplies metadata. Throws SchemaError, MonotonicityError or NaNError.
Trajectory ingest(const std::filesystem::path& csv_path);

/// Writes a tidy CSV: one header row, one row per entry of `columns`.
void write_series_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns);

/// %.17g formatting.
std::string format_double(double value);

}  // namespace singarc
