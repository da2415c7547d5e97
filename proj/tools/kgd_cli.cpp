// kgd: command-line front end.
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "kgd/analysis.hpp"
#include "kgd/certificate.hpp"
#include "kgd/cubic_forms.hpp"
#include "kgd/errors.hpp"
#include "kgd/kvtree.hpp"
#include "kgd/profile_ode.hpp"
#include "kgd/resonant_average.hpp"
#include "kgd/run_registry.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kgd;

namespace {

enum Exit { kOk = 0, kUsage = 1, kNumerical = 2, kConsistency = 3, kNotPassed = 4 };

struct Global {
  std::string out = ".";
  int threads = 0;
  std::uint64_t seed = 0;
};

struct SystemArgs {
  std::string builtin;
  std::string file;
  std::vector<double> params;
  std::optional<double> mu1, mu2;

  void add(CLI::App* cmd) {
    cmd->add_option("--builtin", builtin, "builtin system name");
    cmd->add_option("--system", file, "system spec file (key-value tree or JSON)");
    cmd->add_option("--params", params, "builtin parameters")->delimiter(',');
    cmd->add_option("--mu1", mu1, "mu1 for complex_cubic_dissipative (default 0)");
    cmd->add_option("--mu2", mu2, "mu2 for complex_cubic_dissipative (default 1)");
  }

  CubicSystem resolve() const {
    if (builtin.empty() == file.empty()) throw InputError("give exactly one of --builtin or --system");
    if (!file.empty()) return parse_system(read_text_file(file));
    if (builtin == "complex_cubic_dissipative" && params.empty()) {
      const double p[2] = {mu1.value_or(0.0), mu2.value_or(1.0)};
      return builtin_system(builtin, p);
    }
    if (mu1 || mu2) throw InputError("--mu1/--mu2 only apply to complex_cubic_dissipative");
    return builtin_system(builtin, params);
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

std::string vector_text(const ComplexVector& v) {
  std::string s = "(";
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j) s += ", ";
    s += format_complex(v[j]);
  }
  return s + ")";
}

json vector_json(const ComplexVector& v) {
  json a = json::array();
  for (const auto& c : v) a.push_back({c.real(), c.imag()});
  return a;
}

Eigen::MatrixXcd parse_matrix(const std::string& text, int n) {
  std::vector<ComplexVector> rows;
  std::size_t start = 0;
  while (true) {
    const std::size_t semi = text.find(';', start);
    rows.push_back(parse_complex_list(text.substr(start, semi == std::string::npos ? std::string::npos : semi - start)));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  if (static_cast<int>(rows.size()) != n) throw InputError(fmt::format("--A needs {} rows", n));
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n) throw InputError(fmt::format("--A needs {} columns", n));
    for (int j = 0; j < n; ++j) a(i, j) = rows[i][j];
  }
  return a;
}

std::pair<double, double> parse_window(const std::vector<double>& w) {
  if (w.size() != 2) throw InputError("--window takes two numbers: lo,hi");
  return {w[0], w[1]};
}

NormSeries load_series(const std::string& source, std::string& label) {
  const fs::path p(source);
  if (fs::is_directory(p)) {
    const json m = read_manifest(p);
    label = m.value("label", std::string());
    if (label.empty()) label = m.value("run_id", p.filename().string());
    return read_norms_csv((p / "norms.csv").string());
  }
  label = p.stem().string();
  return read_norms_csv(source);
}

// phi
struct PhiCmd {
  SystemArgs sys;
  std::string y = "";
  double z = 0.0;
  int nodes = kDefaultPhiNodes;
  bool as_json = false;

  int run(const Global&) const {
    const CubicSystem s = sys.resolve();
    const ComplexVector yv = parse_complex_list(y);
    if (static_cast<int>(yv.size()) != s.n()) throw InputError(fmt::format("--Y needs {} entries", s.n()));
    const HyperbolaPoint w = HyperbolaPoint::at(z);
    const PhiExpression expr = phi_closed_form(s);
    const ComplexVector closed = eval_phi_expression(expr, yv, w);
    const ComplexVector quad = phi_quadrature(s, yv, w, nodes);
    double diff = 0.0;
    for (std::size_t j = 0; j < closed.size(); ++j) diff = std::max(diff, std::abs(closed[j] - quad[j]));
    if (as_json) {
      std::cout << json{{"system", s.label()},
                        {"z", z},
                        {"Y", vector_json(yv)},
                        {"phi_closed_form", vector_json(closed)},
                        {"phi_quadrature", vector_json(quad)},
                        {"max_discrepancy", diff},
                        {"expression", to_json(expr)}}
                       .dump(2)
                << '\n';
    } else {
      std::cout << "Phi closed form: " << vector_text(closed) << '\n'
                << "Phi quadrature:  " << vector_text(quad) << '\n'
                << fmt::format("max discrepancy: {:.3e}\n", diff) << "expression:\n"
                << to_text(expr);
    }
    if (diff > 1e-10) throw ConsistencyError(fmt::format("closed form and quadrature differ by {:.3e}", diff));
    return kOk;
  }
};

// certify
struct CertifyCmd {
  SystemArgs sys;
  int k = 0;
  std::string a;
  bool search = false;
  CertOptions opts;
  std::string report;

  int run(const Global& g) {
    const CubicSystem s = sys.resolve();
    if (k != 0 && k != 1 && k != 3) throw InputError("--k must be 0, 1 or 3");
    opts.seed = g.seed;
    const PhiExpression expr = phi_closed_form(s);
    CertReport r;
    if (search) {
      if (!a.empty()) throw InputError("--A and --search are exclusive");
      r = search_certificate(expr, k, opts).report;
    } else {
      const Eigen::MatrixXcd m =
          a.empty() ? Eigen::MatrixXcd::Identity(s.n(), s.n()) : parse_matrix(a, s.n());
      r = check_condition(expr, hermitian_validate(m), k, opts);
    }
    json j = to_json(r);
    j["system"] = s.label();
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!report.empty()) write_text(report, text);
    return r.passed ? kOk : kNotPassed;
  }
};

// simulate
struct SimulateCmd {
  std::string config;

  int run(const Global& g) const {
    const RunConfig cfg = parse_run_config(read_text_file(config));
    const RunResult res = execute_run(cfg, g.out);
    std::cout << "run_id " << res.run_id << '\n' << "dir " << res.dir.string() << '\n';
    if (res.blew_up) {
      std::cerr << "kgd: " << res.blow_up_message << '\n';
      return kNumerical;
    }
    return kOk;
  }
};

// profile
struct ProfileCmd {
  SystemArgs sys;
  std::string alpha;
  double z = 0.0;
  double tau0 = 4.0;
  double tau1 = 1000.0;
  std::string mode = "resonant";
  double kappa = 2.0;
  double support_radius = 1.0;
  ProfileOptions opts;
  std::string from_run;
  std::string name = "profile";

  int run(const Global& g) const {
    ProfileTrajectory traj;
    json meta;
    if (!from_run.empty()) {
      if (!fs::is_directory(from_run)) throw InputError("no run directory '" + from_run + "'");
      const RunConfig cfg = load_run_config(from_run);
      const HyperbolicChart chart(cfg.data.support_radius, tau0);
      std::vector<FieldState> states;
      for (const auto& p : list_snapshots(from_run)) states.push_back(read_snapshot(p.string(), cfg.grid));
      if (states.empty()) throw InputError("run '" + from_run + "' has no snapshots");
      traj = extract_alpha(states, chart, ChiWeight(kappa), z);
      meta = {{"source", "run"}, {"run_id", read_manifest(from_run).value("run_id", "")}, {"system", cfg.system.label()}};
    } else {
      const CubicSystem s = sys.resolve();
      const ComplexVector a0 = parse_complex_list(alpha);
      if (static_cast<int>(a0.size()) != s.n()) throw InputError(fmt::format("--alpha needs {} entries", s.n()));
      const HyperbolicChart chart(support_radius, tau0);
      traj = integrate_profile(s, ChiWeight(kappa), a0, z, chart.tau0, tau1, profile_mode_from_string(mode), opts);
      meta = {{"source", "ode"}, {"system", s.label()}, {"tau1", tau1}, {"alpha0", vector_json(a0)}};
    }
    meta["z"] = z;
    meta["mode"] = to_string(traj.mode);
    meta["tol"] = opts.tol;
    meta["kappa"] = kappa;
    meta["tau0"] = tau0;
    meta["samples"] = traj.tau.size();
    const fs::path base = fs::path(g.out) / name;
    write_text(base.string() + ".csv", trajectory_csv(traj));
    write_text(base.string() + ".json", meta.dump(2) + "\n");
    std::cout << base.string() << ".csv\n";
    return kOk;
  }
};

// fit
struct FitCmd {
  std::vector<std::string> sources;
  std::string p = "inf";
  std::vector<double> window;
  std::string name = "fit_report.json";

  int run(const Global& g) const {
    const double pv = p_from_string(p);
    if (!(pv >= 2.0)) throw InputError("p must satisfy 2 <= p <= inf");
    std::vector<DecayFit> fits;
    for (const auto& src : sources) {
      std::string label;
      const NormSeries s = load_series(src, label);
      DecayFit f = fit_decay(s, pv, window.empty() ? default_window(s) : parse_window(window));
      f.label = label;
      fmt::print("{} p={} window=[{}, {}] gamma={:.6f} C={:.6f} residual_rms={:.3e}\n", f.label, p,
                 f.window.first, f.window.second, f.gamma, f.C, f.residual_rms);
      fits.push_back(std::move(f));
    }
    fs::create_directories(g.out);
    export_report(fits, {}, (fs::path(g.out) / name).string());
    return kOk;
  }
};

// report
struct ReportCmd {
  std::vector<std::string> runs;
  std::string p = "inf";
  std::vector<double> window;
  std::string name = "report.json";

  int run(const Global& g) const {
    const double pv = p_from_string(p);
    if (!(pv >= 2.0)) throw InputError("p must satisfy 2 <= p <= inf");
    std::vector<DecayFit> fits;
    std::vector<RatioSeries> ratios;
    std::vector<NormSeries> series;
    std::vector<std::string> labels;
    for (const auto& src : runs) {
      std::string label;
      series.push_back(load_series(src, label));
      labels.push_back(label);
      DecayFit f = fit_decay(series.back(), pv, window.empty() ? default_window(series.back()) : parse_window(window));
      f.label = label;
      fits.push_back(std::move(f));
    }
    for (std::size_t i = 1; i < series.size(); ++i) {
      RatioSeries r = compare_runs(series[i], series[0], pv);
      r.label = labels[i] + "/" + labels[0];
      ratios.push_back(std::move(r));
    }
    fs::create_directories(g.out);
    const fs::path path = fs::path(g.out) / name;
    export_report(fits, ratios, path.string());
    std::cout << path.string() << '\n';
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for cubic nonlinear Klein-Gordon systems in 1D"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "seed for randomized searches");

  PhiCmd phi;
  auto* c_phi = app.add_subcommand("phi", "resonant average Phi(Y, omega(z))");
  phi.sys.add(c_phi);
  c_phi->add_option("--Y", phi.y, "comma-separated complex entries, e.g. 1,0.5-2i")->required();
  c_phi->add_option("--z", phi.z, "rapidity");
  c_phi->add_option("--nodes", phi.nodes, "quadrature nodes (>= 8)");
  c_phi->add_flag("--json", phi.as_json, "JSON output");

  CertifyCmd cert;
  auto* c_cert = app.add_subcommand("certify", "check or search a dissipative certificate");
  cert.sys.add(c_cert);
  c_cert->add_option("--k", cert.k, "condition order: 0, 1 or 3");
  c_cert->add_option("--A", cert.a, "Hermitian matrix, rows separated by ';', e.g. \"2,1i;-1i,2\"");
  c_cert->add_flag("--search", cert.search, "search for A instead of checking one");
  c_cert->add_option("--z-max", cert.opts.z_max);
  c_cert->add_option("--z-step", cert.opts.z_step);
  c_cert->add_option("--starts", cert.opts.starts, "sphere minimization starts");
  c_cert->add_option("--report", cert.report, "also write the report JSON here");

  SimulateCmd sim;
  auto* c_sim = app.add_subcommand("simulate", "run the PDE solver from a config file");
  c_sim->add_option("config", sim.config, "run config (key-value tree or JSON)")->required();

  ProfileCmd prof;
  auto* c_prof = app.add_subcommand("profile", "integrate the profile ODE or extract alpha from a run");
  prof.sys.add(c_prof);
  c_prof->add_option("--alpha", prof.alpha, "alpha at tau0, comma-separated complex entries");
  c_prof->add_option("--z", prof.z, "rapidity of the ray");
  c_prof->add_option("--tau0", prof.tau0)->capture_default_str();
  c_prof->add_option("--tau1", prof.tau1)->capture_default_str();
  c_prof->add_option("--mode", prof.mode, "resonant or full")->capture_default_str();
  c_prof->add_option("--tol", prof.opts.tol)->capture_default_str();
  c_prof->add_option("--max-step", prof.opts.full_mode_max_step, "step cap in full mode")->capture_default_str();
  c_prof->add_option("--samples", prof.opts.samples)->capture_default_str();
  c_prof->add_option("--kappa", prof.kappa)->capture_default_str();
  c_prof->add_option("--B", prof.support_radius, "support radius of the chart")->capture_default_str();
  c_prof->add_option("--from-run", prof.from_run, "run directory with snapshots");
  c_prof->add_option("--name", prof.name, "output file stem under --out")->capture_default_str();

  FitCmd fit;
  auto* c_fit = app.add_subcommand("fit", "fit the log-improved decay law");
  c_fit->add_option("sources", fit.sources, "run directories or norms CSV files")->required();
  c_fit->add_option("--p", fit.p, "norm exponent, 2..inf")->capture_default_str();
  c_fit->add_option("--window", fit.window, "lo,hi (default [t_final/10, t_final])")->delimiter(',');
  c_fit->add_option("--name", fit.name)->capture_default_str();

  ReportCmd rep;
  auto* c_rep = app.add_subcommand("report", "fits and ratios against the first run");
  c_rep->add_option("runs", rep.runs, "run directories or norms CSV files")->required();
  c_rep->add_option("--p", rep.p)->capture_default_str();
  c_rep->add_option("--window", rep.window)->delimiter(',');
  c_rep->add_option("--name", rep.name)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (c_phi->parsed()) return phi.run(g);
    if (c_cert->parsed()) return cert.run(g);
    if (c_sim->parsed()) return sim.run(g);
    if (c_prof->parsed()) return prof.run(g);
    if (c_fit->parsed()) return fit.run(g);
    if (c_rep->parsed()) return rep.run(g);
  } catch (const InputError& e) {
    std::cerr << "kgd: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "kgd: numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const ConsistencyError& e) {
    std::cerr << "kgd: consistency failure: " << e.what() << '\n';
    return kConsistency;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "kgd: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
