#include "kgd/run_registry.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "kgd/errors.hpp"
#include "kgd/kvtree.hpp"

namespace kgd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kTopKeys{"system", "grid", "data", "output", "scheme"};

void reject_unknown(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw InputError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

json block(const json& j, const std::string& key) {
  if (!j.contains(key)) return json::object();
  if (!j[key].is_object()) throw InputError("config: '" + key + "' must be a block");
  return j[key];
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw InputError(where + "." + key + " must be a number");
  return j[key].get<double>();
}

std::vector<double> numbers(const json& j, const std::string& key, const std::string& where) {
  std::vector<double> out;
  if (!j.contains(key)) return out;
  const json& v = j[key];
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw InputError(where + "." + key + " must be a list of numbers");
  for (const auto& e : v) {
    if (e.is_number()) {
      out.push_back(e.get<double>());
    } else if (e.is_string() && (e == "inf" || e == "Inf")) {
      out.push_back(std::numeric_limits<double>::infinity());
    } else {
      throw InputError(where + "." + key + " must be a list of numbers");
    }
  }
  return out;
}

json p_list_json(const std::vector<double>& ps) {
  json out = json::array();
  for (double p : ps) {
    if (std::isinf(p)) {
      out.push_back("inf");
    } else {
      out.push_back(p);
    }
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

class SnapshotWriter : public RunObserver {
 public:
  SnapshotWriter(fs::path dir, std::int64_t every, std::int64_t last) : dir_(std::move(dir)), every_(every), last_(last) {}
  void on_sample(const FieldState& state, const NormRecord&) override {
    if (state.step_index % every_ != 0 && state.step_index != last_) return;
    write_snapshot((dir_ / fmt::format("step_{:010d}.bin", state.step_index)).string(), state);
  }

 private:
  fs::path dir_;
  std::int64_t every_;
  std::int64_t last_;
};

}  // namespace

CubicSystem system_from_config(const json& j) {
  if (!j.is_object()) throw InputError("config: 'system' must be a block");
  if (j.contains("builtin")) {
    reject_unknown(j, {"builtin", "params"}, "system");
    if (!j["builtin"].is_string()) throw InputError("system.builtin must be a name");
    const auto params = numbers(j, "params", "system");
    return builtin_system(j["builtin"].get<std::string>(), params);
  }
  return system_from_json(j);
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw InputError("config must be a key-value block");
  reject_unknown(j, kTopKeys, "config");
  if (!j.contains("system")) throw InputError("config: missing 'system' block");

  RunConfig cfg;
  cfg.system = system_from_config(j["system"]);
  const int n = cfg.system.n();

  const json g = block(j, "grid");
  reject_unknown(g, {"dx", "cfl", "t_final"}, "grid");
  const double dx = number_or(g, "dx", 0.02, "grid");
  const double cfl = number_or(g, "cfl", 0.5, "grid");
  const double t_final = number_or(g, "t_final", 400.0, "grid");

  const json d = block(j, "data");
  reject_unknown(d, {"a", "b", "epsilon", "support_radius"}, "data");
  cfg.data.a = numbers(d, "a", "data");
  cfg.data.b = numbers(d, "b", "data");
  if (cfg.data.a.empty()) {
    cfg.data.a.assign(static_cast<std::size_t>(n), 0.0);
    cfg.data.a[0] = 1.0;
  }
  if (cfg.data.b.empty()) cfg.data.b.assign(static_cast<std::size_t>(n), 0.0);
  if (cfg.data.a.size() != static_cast<std::size_t>(n) || cfg.data.b.size() != static_cast<std::size_t>(n)) {
    throw InputError(fmt::format("data.a and data.b need {} entries", n));
  }
  cfg.data.epsilon = number_or(d, "epsilon", 0.1, "data");
  cfg.data.support_radius = number_or(d, "support_radius", 1.0, "data");
  if (!(cfg.data.support_radius > 0.0)) throw InputError("data.support_radius must be positive");
  if (!(dx > 0.0) || !(t_final > 0.0) || !(cfl > 0.0)) {
    throw InputError("grid.dx, grid.cfl and grid.t_final must be positive");
  }

  cfg.grid = GridSpec::for_cone(cfg.data.support_radius, dx, cfl, t_final);
  validate_grid(cfg.grid, cfg.data.support_radius);

  const json o = block(j, "output");
  reject_unknown(o, {"sample_every", "p", "snapshot_every"}, "output");
  const std::int64_t steps = cfg.grid.steps();
  std::int64_t sample_every = std::max<std::int64_t>(1, steps / 2000);
  if (o.contains("sample_every")) {
    if (!o["sample_every"].is_number_integer()) throw InputError("output.sample_every must be an integer");
    sample_every = o["sample_every"].get<std::int64_t>();
  }
  if (sample_every < 1) throw InputError("output.sample_every must be >= 1");
  if (o.contains("snapshot_every")) {
    if (!o["snapshot_every"].is_number_integer()) throw InputError("output.snapshot_every must be an integer");
    cfg.snapshot_every = o["snapshot_every"].get<std::int64_t>();
  }
  if (cfg.snapshot_every < 0 || (cfg.snapshot_every > 0 && cfg.snapshot_every % sample_every != 0)) {
    throw InputError("output.snapshot_every must be a nonnegative multiple of sample_every");
  }
  cfg.options.sample_every = sample_every;
  cfg.options.p_list = numbers(o, "p", "output");
  for (double p : cfg.options.p_list) {
    if (!(p >= 2.0)) throw InputError("output.p entries must be >= 2");
  }

  std::string scheme = "leapfrog_pc";
  if (j.contains("scheme")) {
    if (!j["scheme"].is_string()) throw InputError("scheme must be a name");
    scheme = j["scheme"].get<std::string>();
  }
  cfg.options.scheme = scheme_from_string(scheme);

  cfg.normalized = {
      {"system", system_to_json(cfg.system)},
      {"grid",
       {{"dx", dx},
        {"cfl", cfl},
        {"dt", cfg.grid.dt},
        {"t_final", t_final},
        {"x_min", cfg.grid.x_min},
        {"x_max", cfg.grid.x_max},
        {"n_points", cfg.grid.n_points}}},
      {"data",
       {{"a", cfg.data.a},
        {"b", cfg.data.b},
        {"epsilon", cfg.data.epsilon},
        {"support_radius", cfg.data.support_radius}}},
      {"output",
       {{"sample_every", sample_every}, {"p", p_list_json(cfg.options.p_list)}, {"snapshot_every", cfg.snapshot_every}}},
      {"scheme", to_string(cfg.options.scheme)}};
  return cfg;
}

RunConfig parse_run_config(const std::string& text) { return run_config_from_json(parse_config_text(text)); }

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 failed");
  }
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string run_id(const RunConfig& cfg) { return sha256_hex(canonical_json(cfg.normalized)).substr(0, 16); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunResult execute_run(const RunConfig& cfg, const fs::path& out_root) {
  RunResult result;
  result.run_id = run_id(cfg);
  result.dir = out_root / "runs" / result.run_id;
  fs::create_directories(result.dir);
  const fs::path snap_dir = result.dir / "snapshots";
  fs::remove_all(snap_dir);
  if (cfg.snapshot_every > 0) fs::create_directories(snap_dir);

  const std::string started = utc_timestamp();
  {
    std::ofstream csv(result.dir / "norms.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw InputError("cannot write norms.csv in " + result.dir.string());
    CsvNormWriter writer(csv, cfg.options.p_list);
    std::vector<RunObserver*> observers{&writer};
    SnapshotWriter snaps(snap_dir, std::max<std::int64_t>(1, cfg.snapshot_every), cfg.grid.steps());
    if (cfg.snapshot_every > 0) observers.push_back(&snaps);
    try {
      result.series = run(cfg.system, cfg.data, cfg.grid, cfg.options, observers);
    } catch (const BlowUpError& e) {
      result.blew_up = true;
      result.blow_up_time = e.time();
      result.blow_up_message = e.what();
    }
  }

  json manifest = {{"run_id", result.run_id},
                   {"tool_version", kToolVersion},
                   {"label", cfg.system.label()},
                   {"config", cfg.normalized},
                   {"status", result.blew_up ? "blow_up" : "ok"},
                   {"samples", result.series.rows.size()},
                   {"timestamps", {{"started", started}, {"finished", utc_timestamp()}}}};
  if (result.blew_up) manifest["blow_up"] = {{"t", result.blow_up_time}, {"message", result.blow_up_message}};
  write_file(result.dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

json read_manifest(const fs::path& run_dir) {
  const fs::path p = run_dir / "manifest.json";
  if (!fs::exists(p)) throw InputError("no manifest.json in '" + run_dir.string() + "'");
  try {
    return json::parse(read_text_file(p.string()));
  } catch (const json::parse_error& e) {
    throw InputError("manifest.json: " + std::string(e.what()));
  }
}

RunConfig load_run_config(const fs::path& run_dir) {
  const json m = read_manifest(run_dir);
  if (!m.contains("config")) throw InputError("manifest has no config");
  json c = m["config"];
  // dt and extents are derived; drop them before re-resolving
  for (const char* k : {"dt", "x_min", "x_max", "n_points"}) c["grid"].erase(k);
  return run_config_from_json(c);
}

std::vector<fs::path> list_snapshots(const fs::path& run_dir) {
  std::vector<fs::path> out;
  const fs::path dir = run_dir / "snapshots";
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".bin") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace kgd
