#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgd/cubic_forms.hpp"
#include "kgd/kg_solver.hpp"

namespace kgd {

inline constexpr const char* kToolVersion = "0.3.0";

/// A fully resolved simulation config. `normalized` holds every effective
/// setting (defaults filled in) and is what the run id hashes.
///
///     system { builtin = complex_cubic_dissipative  params = [0, 1] }
///     grid   { dx = 0.02  cfl = 0.5  t_final = 400 }
///     data   { a = [1, 0]  b = [0, 0]  epsilon = 0.1  support_radius = 1 }
///     output { sample_every = 10  p = [4]  snapshot_every = 0 }
///     scheme = leapfrog_pc
///
/// `system` may instead be an inline block (n, label, term ...).
struct RunConfig {
  nlohmann::json normalized;
  CubicSystem system{1, {}, "free"};
  DataProfile data;
  GridSpec grid;
  RunOptions options;
  std::int64_t snapshot_every = 0;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig parse_run_config(const std::string& text);

/// Resolves a `system` block: {builtin, params} or an inline system.
CubicSystem system_from_config(const nlohmann::json& j);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

/// First 16 hex digits of the SHA-256 of the canonical normalized config.
std::string run_id(const RunConfig& cfg);

struct RunResult {
  std::string run_id;
  std::filesystem::path dir;
  bool blew_up = false;
  double blow_up_time = 0.0;
  std::string blow_up_message;
  NormSeries series;
};

/// Runs into <out_root>/runs/<run_id>/: manifest.json, norms.csv and, with
/// snapshot_every > 0, snapshots/step_<n>.bin. A blow-up is recorded in the
/// manifest and reported through the result, not thrown.
RunResult execute_run(const RunConfig& cfg, const std::filesystem::path& out_root);

/// manifest.json of a run directory.
nlohmann::json read_manifest(const std::filesystem::path& run_dir);

/// Config of a stored run, rebuilt from its manifest.
RunConfig load_run_config(const std::filesystem::path& run_dir);

/// Snapshot files of a run in time order.
std::vector<std::filesystem::path> list_snapshots(const std::filesystem::path& run_dir);

/// Current UTC time, ISO 8601.
std::string utc_timestamp();

}  // namespace kgd
