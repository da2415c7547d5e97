// Acceptance runner: one PASS/FAIL line per criterion.
//
//   kgd_acceptance [--only N] [--work DIR]

#include <fmt/core.h>
#include <omp.h>
#include <sys/wait.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>

#include <json.hpp>

#include "kgd/analysis.hpp"
#include "kgd/certificate.hpp"
#include "kgd/kg_solver.hpp"
#include "kgd/kvtree.hpp"
#include "kgd/profile_ode.hpp"
#include "kgd/resonant_average.hpp"
#include "kgd/run_registry.hpp"

using namespace kgd;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double max_diff(const ComplexVector& a, const ComplexVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ComplexVector random_y(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  ComplexVector y(n);
  for (auto& v : y) v = Complex(g(rng), g(rng));
  return y;
}

double norm1(const ComplexVector& y) {
  double s = 0.0;
  for (const auto& v : y) s += std::abs(v);
  return s;
}

CubicSystem complex_cubic(double mu1, double mu2) {
  const double p[] = {mu1, mu2};
  return builtin_system("complex_cubic_dissipative", p);
}

CubicSystem random_system(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(1, 3), kd(0, 2), td(1, 4);
  std::uniform_real_distribution<double> cd(-1.0, 1.0);
  const int n = nd(rng);
  std::uniform_int_distribution<int> id(1, n);
  std::vector<CubicMonomial> terms;
  const int count = td(rng);
  for (int t = 0; t < count; ++t) {
    std::map<Slot, int> powers;
    for (int f = 0; f < 3; ++f) ++powers[Slot{static_cast<SlotKind>(kd(rng)), id(rng)}];
    std::vector<SlotPower> factors;
    for (const auto& [s, p] : powers) factors.push_back({s, p});
    terms.push_back({id(rng), factors, cd(rng)});
  }
  return CubicSystem(n, terms, "random");
}

const HarmonicTerm* find_term(const PhiExpression& e, int j, const std::vector<int>& a, const std::vector<int>& b,
                              int p) {
  for (const auto& t : e.terms()) {
    if (t.component == j && t.a == a && t.b == b && t.p == p && t.q == 0) return &t;
  }
  return nullptr;
}

DataProfile data_for(int n, double eps) {
  DataProfile d;
  d.a.assign(n, 0.0);
  d.b.assign(n, 0.0);
  d.a[0] = 1.0;
  d.epsilon = eps;
  return d;
}

// 1. closed forms of Phi
Verdict c1(const fs::path&) {
  const auto t0 = Clock::now();
  const double mu1 = 0.7, mu2 = 1.3;
  const PhiExpression cc = phi_closed_form(complex_cubic(mu1, mu2));
  const PhiExpression r1 = phi_closed_form(builtin_system("remark1"));
  struct Row {
    int j;
    std::vector<int> a, b;
    double weight;
  };
  const Row cc_rows[] = {{1, {2, 0}, {1, 0}, 3}, {1, {1, 1}, {0, 1}, 2}, {1, {0, 2}, {1, 0}, 1},
                         {2, {0, 2}, {0, 1}, 3}, {2, {1, 1}, {1, 0}, 2}, {2, {2, 0}, {0, 1}, 1}};
  const Row r1_rows[] = {{1, {2, 0}, {1, 0}, 1}, {1, {1, 1}, {0, 1}, 2}, {1, {0, 2}, {1, 0}, -1},
                         {2, {0, 2}, {0, 1}, 1}, {2, {1, 1}, {1, 0}, 2}, {2, {2, 0}, {0, 1}, -1}};
  bool exact = cc.terms().size() == 12 && r1.terms().size() == 6;
  for (const auto& r : cc_rows) {
    const auto* re = find_term(cc, r.j, r.a, r.b, 0);
    const auto* im = find_term(cc, r.j, r.a, r.b, 3);
    exact = exact && re && im && re->coefficient == Complex(r.weight * mu1 / 8, 0) &&
            im->coefficient == Complex(0, -r.weight * mu2 / 8);
  }
  for (const auto& r : r1_rows) {
    const auto* t = find_term(r1, r.j, r.a, r.b, 1);
    exact = exact && t && t->coefficient == Complex(0, -r.weight / 8);
  }

  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> zd(-3.0, 3.0);
  const CubicSystem systems[] = {complex_cubic(mu1, mu2), builtin_system("remark1")};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    for (int s = 0; s < 2; ++s) {
      const PhiExpression& e = s == 0 ? cc : r1;
      const ComplexVector y = random_y(rng, 2);
      const HyperbolaPoint w = HyperbolaPoint::at(zd(rng));
      const double scale = std::pow(w.omega0, 3) * std::pow(norm1(y), 3);
      worst = std::max(worst, max_diff(eval_phi_expression(e, y, w), phi_quadrature(systems[s], y, w)) / scale);
    }
  }
  const double secs = seconds_since(t0);
  return {exact && worst <= 1e-12 && secs < 1.0,
          fmt::format("terms exact={} max relative closed-form/quadrature gap {:.2e} in {:.2f}s", exact, worst, secs)};
}

// 2. -Im<Phi, Y> identities with A = I
Verdict c2(const fs::path&) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> zd(-3.0, 3.0);
  const double mu2 = 1.0;
  const PhiExpression cc = phi_closed_form(complex_cubic(0.4, mu2));
  const PhiExpression r1 = phi_closed_form(builtin_system("remark1"));
  double worst_cc = 0.0, worst_r1 = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const ComplexVector y = random_y(rng, 2);
    const HyperbolaPoint w = HyperbolaPoint::at(zd(rng));
    const double a1 = std::norm(y[0]), a2 = std::norm(y[1]);
    const double scale = (a1 + a2) * (a1 + a2);
    auto neg_im = [&](const PhiExpression& e) {
      const ComplexVector phi = eval_phi_expression(e, y, w);
      return -(phi[0] * std::conj(y[0]) + phi[1] * std::conj(y[1])).imag();
    };
    const double cc_expect = mu2 * std::pow(w.omega0, 3) / 8 *
                             (2 * a1 * a1 + 2 * a2 * a2 + 4 * a1 * a2 + std::norm(y[0] * y[0] + y[1] * y[1]));
    const double r1_expect = w.omega0 / 8 * (4 * a1 * a2 + std::norm(y[0] * y[0] - y[1] * y[1]));
    worst_cc = std::max(worst_cc, std::abs(neg_im(cc) - cc_expect) / (scale * std::pow(w.omega0, 3)));
    worst_r1 = std::max(worst_r1, std::abs(neg_im(r1) - r1_expect) / (scale * w.omega0));
  }
  return {worst_cc <= 1e-12 && worst_r1 <= 1e-12,
          fmt::format("max relative gap {:.2e} (complex_cubic), {:.2e} (remark1)", worst_cc, worst_r1)};
}

// 3. certificate margins
Verdict c3(const fs::path&) {
  const HermitianCert id = hermitian_validate(Eigen::MatrixXcd::Identity(2, 2));
  const PhiExpression r1 = phi_closed_form(builtin_system("remark1"));
  auto timed = [](auto f, double& secs) {
    const auto t0 = Clock::now();
    auto r = f();
    secs = seconds_since(t0);
    return r;
  };
  double ta = 0, tb = 0, tc = 0;
  const CertReport a = timed([&] { return check_condition(phi_closed_form(complex_cubic(0, 1)), id, 3); }, ta);
  const CertReport b = timed([&] { return check_condition(r1, id, 1); }, tb);
  const CertReport c = timed([&] { return check_condition(r1, id, 3); }, tc);
  const bool ok = a.passed && std::abs(a.inf_margin - 0.25) <= 0.005 && b.passed &&
                  std::abs(b.inf_margin - 0.125) <= 0.005 && !c.passed && std::abs(c.asymptotic_margin) < 1e-6 &&
                  std::max({ta, tb, tc}) < 30.0;
  return {ok, fmt::format("complex_cubic k=3 inf {:.5f}; remark1 k=1 inf {:.5f}; remark1 k=3 passed={} "
                          "asymptotic {:.2e}; slowest {:.2f}s",
                          a.inf_margin, b.inf_margin, c.passed, c.asymptotic_margin, std::max({ta, tb, tc}))};
}

// 4. mode structure, gauge covariance, homogeneity
Verdict c4(const fs::path&) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> zd(-1.5, 1.5), ud(-2.0, 2.0);
  double worst_mode = 0.0, worst_gauge = 0.0, worst_hom = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const CubicSystem s = random_system(rng);
    const PhiExpression e = phi_closed_form(s);
    const ComplexVector y = random_y(rng, s.n());
    const HyperbolaPoint w = HyperbolaPoint::at(zd(rng));
    for (int n : {1, -1, 3, -3, 4, -5, 5}) {
      for (const auto& m : fourier_mode(s, y, w, n)) worst_mode = std::max(worst_mode, std::abs(m));
    }
    const Complex g = std::polar(1.0, ud(rng) * 2);
    const Complex c(ud(rng), ud(rng));
    ComplexVector gy = y, cy = y;
    for (auto& v : gy) v *= g;
    for (auto& v : cy) v *= c;
    const ComplexVector base = eval_phi_expression(e, y, w);
    ComplexVector eg = base, ec = base;
    for (auto& v : eg) v *= g;
    for (auto& v : ec) v *= std::norm(c) * c;
    const double scale = std::pow(w.omega0, 3) * std::pow(norm1(y), 3);
    worst_gauge = std::max(worst_gauge, max_diff(eval_phi_expression(e, gy, w), eg) / scale);
    worst_hom = std::max(worst_hom, max_diff(eval_phi_expression(e, cy, w), ec) / (scale * std::pow(std::abs(c), 3)));
  }
  return {worst_mode <= 1e-12 && worst_gauge <= 1e-12 && worst_hom <= 1e-12,
          fmt::format("max |mode| {:.2e}; gauge gap {:.2e}; homogeneity gap {:.2e}", worst_mode, worst_gauge,
                      worst_hom)};
}

// 5. profile ODE closed forms
Verdict c5(const fs::path&) {
  const double tau0 = 4.0, tau1 = 4.0e4;
  ProfileOptions opts;
  opts.tol = 1e-11;
  const ComplexVector a0{Complex(0.8, 0.6)};
  const auto d = integrate_profile(builtin_system("single_ut3_dissipative"), ChiWeight(2.0), a0, 0.0, tau0, tau1,
                                   ProfileMode::resonant, opts);
  const double m0 = std::norm(a0[0]);
  const double expect = m0 / (1.0 + m0 * 0.75 * std::log(tau1 / tau0));
  const double got = std::norm(d.alpha.back()[0]);
  const double rel_d = std::abs(got - expect) / expect;

  const auto u = integrate_profile(builtin_system("single_u3"), ChiWeight(2.0), a0, 0.0, tau0, tau1,
                                   ProfileMode::resonant, opts);
  double mod_gap = 0.0, phase_gap = 0.0;
  for (std::size_t k = 0; k < u.tau.size(); ++k) {
    const Complex a = u.alpha[k][0];
    mod_gap = std::max(mod_gap, std::abs(std::abs(a) - 1.0));
    const Complex expect_a = a0[0] * std::polar(1.0, -0.375 * m0 * std::log(u.tau[k] / tau0));
    phase_gap = std::max(phase_gap, std::abs(std::arg(a / expect_a)));
  }
  return {rel_d <= 1e-6 && mod_gap <= 1e-8 && phase_gap <= 1e-6,
          fmt::format("dissipative |alpha|^2 relative error {:.2e} at tau/tau0=1e4; single_u3 modulus drift "
                      "{:.2e}, phase error {:.2e}",
                      rel_d, mod_gap, phase_gap)};
}

// 6. solver soundness
Verdict c6(const fs::path&) {
  std::vector<std::string> notes;
  bool ok = true;

  // free energy drift and cone leak
  const double eps = 0.1;
  const GridSpec g = GridSpec::for_cone(1.0, 0.02, 0.5, 100.0);
  RunOptions o;
  o.sample_every = 10;
  const NormSeries free = run(CubicSystem(1, {}, "free"), data_for(1, eps), g, o);
  double drift = 0.0, leak = 0.0;
  for (const auto& r : free.rows) {
    drift = std::max(drift, std::abs(r.energy - free.rows.front().energy) / free.rows.front().energy);
    leak = std::max(leak, r.cone_leak);
  }
  const bool drift_ok = drift <= 1e-6;
  const bool leak_ok = leak <= 1e-8 * eps;
  notes.push_back(fmt::format("energy drift {:.2e} [{}]", drift, drift_ok ? "ok" : "fail"));
  notes.push_back(fmt::format("cone_leak/eps {:.2e} [{}]", leak / eps, leak_ok ? "ok" : "fail"));
  ok = ok && drift_ok && leak_ok;

  // grid convergence at t = 10 against a fine free-run reference, dt/dx fixed, on a wide bump
  {
    const double radius = 4.0;
    const CubicSystem sys(2, {}, "free");
    DataProfile d = data_for(2, 0.5);
    d.a = {1.0, 0.3};
    d.b = {0.2, -0.4};
    d.support_radius = radius;
    std::vector<FieldState> states;
    for (double dx : {0.02, 0.01, 0.0025}) {
      GridSpec gs = GridSpec::for_cone(radius, dx, 0.5, 10.0);
      FieldState s = init_state(sys, d, gs);
      KgSolver solver(sys, Scheme::leapfrog_pc, radius);
      for (std::int64_t k = 0; k < gs.steps(); ++k) solver.step(s);
      states.push_back(std::move(s));
    }
    auto error = [&](const FieldState& a, const FieldState& ref) {
      double m = 0.0;
      for (int i = 0; i < a.grid.n_points; ++i) {
        const double x = a.grid.x(i);
        const int ib = static_cast<int>(std::lround((x - ref.grid.x_min) / ref.grid.dx));
        if (ib < 0 || ib >= ref.grid.n_points || std::abs(ref.grid.x(ib) - x) > 1e-9) continue;
        for (int j = 0; j < 2; ++j) m = std::max(m, std::abs(a.u_at(j, i) - ref.u_at(j, ib)));
      }
      return m;
    };
    const double e1 = error(states[0], states[2]), e2 = error(states[1], states[2]);
    const double factor = e1 / e2;
    const bool conv_ok = factor >= 3.5 && factor <= 4.5;
    notes.push_back(fmt::format("convergence factor {:.3f} [{}]", factor, conv_ok ? "ok" : "fail"));
    ok = ok && conv_ok;
  }

  // dissipative energy, step by step
  {
    const GridSpec gs = GridSpec::for_cone(1.0, 0.02, 0.5, 50.0);
    double worst = -1.0;
    for (const char* name : {"single_ut3_dissipative", "remark1"}) {
      const CubicSystem sys = builtin_system(name);
      DataProfile d = data_for(sys.n(), 0.3);
      d.b[0] = 0.5;
      FieldState s = init_state(sys, d, gs);
      KgSolver solver(sys);
      double prev = energy(s);
      for (std::int64_t k = 0; k < gs.steps(); ++k) {
        solver.step(s);
        const double e = energy(s);
        worst = std::max(worst, e - prev);
        prev = e;
      }
    }
    const bool mono_ok = worst <= 1e-10;
    notes.push_back(fmt::format("max energy change per step {:.2e} [{}]", worst, mono_ok ? "ok" : "fail"));
    ok = ok && mono_ok;
  }

  // U(1) equivariance
  {
    const CubicSystem sys = complex_cubic(0.5, 1.0);
    const GridSpec gs = GridSpec::for_cone(1.0, 0.02, 0.5, 20.0);
    const double phi = 0.7, c = std::cos(phi), s = std::sin(phi);
    DataProfile d = data_for(2, 0.5);
    d.a = {1.0, 0.3};
    d.b = {0.2, -0.4};
    DataProfile r = d;
    r.a = {c * d.a[0] - s * d.a[1], s * d.a[0] + c * d.a[1]};
    r.b = {c * d.b[0] - s * d.b[1], s * d.b[0] + c * d.b[1]};
    FieldState x = init_state(sys, d, gs), y = init_state(sys, r, gs);
    KgSolver sx(sys), sy(sys);
    for (std::int64_t k = 0; k < gs.steps(); ++k) {
      sx.step(x);
      sy.step(y);
    }
    double m = 0.0;
    for (int i = 0; i < gs.n_points; ++i) {
      m = std::max(m, std::abs(c * x.u_at(0, i) - s * x.u_at(1, i) - y.u_at(0, i)));
      m = std::max(m, std::abs(s * x.u_at(0, i) + c * x.u_at(1, i) - y.u_at(1, i)));
    }
    const bool eq_ok = m <= 1e-10;
    notes.push_back(fmt::format("U(1) gap {:.2e} [{}]", m, eq_ok ? "ok" : "fail"));
    ok = ok && eq_ok;
  }

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {ok, detail};
}

// 7. free decay exponent
Verdict c7(const fs::path&) {
  const GridSpec g = GridSpec::for_cone(1.0, 0.02, 0.5, 200.0);
  RunOptions o;
  o.sample_every = 10;
  const NormSeries s = run(CubicSystem(1, {}, "free"), data_for(1, 0.1), g, o);
  const PowerFit f = fit_power_law(norm_column(s, kInfP), {20.0, 200.0});
  return {f.exponent >= 0.45 && f.exponent <= 0.55, fmt::format("exponent {:.4f} on [20, 200]", f.exponent)};
}

// 8. log-improved decay, property form
Verdict c8(const fs::path& work) {
  const GridSpec g = GridSpec::for_cone(1.0, 0.02, 0.5, 400.0);
  RunOptions o;
  o.sample_every = 20;
  const DataProfile d = data_for(2, 0.3);
  const NormSeries diss = run(complex_cubic(0.0, 1.0), d, g, o);
  const NormSeries free = run(CubicSystem(2, {}, "free"), d, g, o);
  DecayFit fd = fit_decay(diss, kInfP, default_window(diss));
  DecayFit ff = fit_decay(free, kInfP, default_window(free));
  fd.label = "complex_cubic_dissipative";
  ff.label = "free";
  RatioSeries r = compare_runs(diss, free, kInfP);
  r.label = "dissipative/free";
  const std::vector<double> means = decade_means(r);
  bool mono = true;
  for (std::size_t k = 1; k < means.size(); ++k) mono = mono && means[k] <= means[k - 1];
  fs::create_directories(work);
  export_report({fd, ff}, {r}, (work / "report.json").string());
  std::string ms;
  for (double m : means) ms += fmt::format("{}{:.4f}", ms.empty() ? "" : ", ", m);
  return {fd.gamma - ff.gamma >= 0.1 && mono,
          fmt::format("gamma dissipative {:.4f}, free {:.4f}; decade means of ratio [{}]", fd.gamma, ff.gamma, ms)};
}

// 9. PDE vs profile ODE along z = 0
Verdict c9(const fs::path&) {
  const GridSpec g = GridSpec::for_cone(1.0, 0.02, 0.5, 200.0);
  RunOptions o;
  o.sample_every = 10;
  const HyperbolicChart chart(1.0, 4.0);
  const ChiWeight w(2.0);
  auto mod = [](const ComplexVector& a) {
    double s = 0.0;
    for (const auto& v : a) s += std::norm(v);
    return std::sqrt(s);
  };
  bool ok = true;
  std::string detail;
  for (const CubicSystem& sys : {complex_cubic(0.0, 1.0), builtin_system("single_ut3_dissipative")}) {
    RayProbe probe(chart, w, 0.0);
    std::vector<RunObserver*> obs{&probe};
    DataProfile d = data_for(sys.n(), 0.3);
    if (sys.n() == 2) d.b = {0.0, 0.6};
    run(sys, d, g, o, obs);
    const ProfileTrajectory& tr = probe.trajectory();
    std::size_t k20 = 0;
    while (k20 < tr.tau.size() && tr.tau[k20] < 20.0) ++k20;
    std::size_t k200 = k20;
    while (k200 < tr.tau.size() && tr.tau[k200] < 200.0) ++k200;
    if (k200 >= tr.tau.size()) return {false, "ray samples do not reach tau = 200"};
    const std::vector<double> taus{tr.tau[k20], tr.tau[k200]};
    const ProfileRhs rhs(sys, w, 0.0, ProfileMode::resonant);
    const ProfileTrajectory ode = integrate_profile_at(rhs, tr.alpha[k20], taus, {});
    const double pde = mod(tr.alpha[k200]), ref = mod(ode.alpha.back());
    const double rel = std::abs(pde - ref) / ref;
    ok = ok && rel < 0.2;
    detail += fmt::format("{}{}: |alpha| at tau={:.2f} PDE {:.5f}, ODE {:.5f}, relative gap {:.4f} (seed {:.5f})",
                          detail.empty() ? "" : "; ", sys.label(), tr.tau[k200], pde, ref, rel,
                          mod(tr.alpha[k20]));
  }
  return {ok, detail};
}

// 10. CLI determinism
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(KGD_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

// Every file under `dir`, with the directory path and manifest timestamps removed.
std::map<std::string, std::string> collect(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).string();
    std::string text = read_text_file(e.path().string());
    if (e.path().filename() == "manifest.json") {
      auto j = nlohmann::json::parse(text);
      j.erase("timestamps");
      text = j.dump(2);
    }
    out[rel] = replace_all(text, dir.string(), "<out>");
  }
  return out;
}

Verdict c10(const fs::path& work) {
  fs::create_directories(work);
  const fs::path cfg = work / "sim.kv";
  {
    std::ofstream f(cfg);
    f << "system { builtin = complex_cubic_dissipative params = [0, 1] }\n"
         "grid { dx = 0.04 t_final = 40 }\n"
         "data { a = [1, 0.5] b = [0, -0.3] epsilon = 0.3 }\n"
         "output { sample_every = 5 p = [4] snapshot_every = 50 }\n";
  }
  const fs::path free_cfg = work / "free.kv";
  {
    std::ofstream f(free_cfg);
    f << "system { n = 2 }\n"
         "grid { dx = 0.04 t_final = 40 }\n"
         "data { a = [1, 0.5] b = [0, -0.3] epsilon = 0.3 }\n"
         "output { sample_every = 5 p = [4] }\n";
  }
  std::vector<std::map<std::string, std::string>> results;
  std::vector<std::string> failures;
  for (int threads : {1, 8}) {
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = work / fmt::format("t{}_r{}", threads, rep);
      fs::remove_all(out);
      fs::create_directories(out / "logs");
      const std::string pre = fmt::format("--threads {} --out {} ", threads, out.string());
      auto step = [&](const std::string& name, const std::string& args, int expect) {
        const int code = run_cli(pre + args, out / "logs" / (name + ".txt"));
        if (code != expect) failures.push_back(fmt::format("{} exit {} at {} threads", name, code, threads));
      };
      step("phi", "phi --builtin complex_cubic_dissipative --mu1 1 --mu2 2 --Y 1,0 --z 0.3", 0);
      step("phi_json", "phi --builtin remark1 --Y 1+2i,-0.5i --z -1 --json", 0);
      step("certify", "certify --builtin remark1 --k 1 --report " + (out / "cert.json").string(), 0);
      step("certify_fail", "certify --builtin remark1 --k 3", 4);
      step("certify_search", "certify --builtin complex_cubic_dissipative --k 3 --search --starts 8", 0);
      step("simulate", "simulate " + cfg.string(), 0);
      step("simulate_free", "simulate " + free_cfg.string(), 0);
      std::vector<fs::path> runs;
      for (const auto& e : fs::directory_iterator(out / "runs")) runs.push_back(e.path());
      std::sort(runs.begin(), runs.end());
      std::string run_args;
      for (const auto& r : runs) run_args += " " + r.string();
      for (const auto& r : runs) {
        if (!list_snapshots(r).empty()) step("profile_run", "profile --from-run " + r.string() + " --name from_run", 0);
      }
      step("profile", "profile --builtin single_ut3_dissipative --alpha 0.5-0.5i --tau1 1e4", 0);
      step("profile_full", "profile --builtin remark1 --alpha 1,0.5i --tau1 200 --mode full --name full", 0);
      step("fit", "fit" + run_args + " --window 4,40", 0);
      step("report", "report" + run_args + " --window 4,40", 0);
      results.push_back(collect(out));
    }
  }
  std::set<std::string> diffs;
  for (std::size_t k = 1; k < results.size(); ++k) {
    for (const auto& [name, text] : results[0]) {
      auto it = results[k].find(name);
      if (it == results[k].end() || it->second != text) diffs.insert(name);
    }
    if (results[k].size() != results[0].size()) diffs.insert("<file set>");
  }
  std::string detail = fmt::format("{} files compared across 4 invocations", results[0].size());
  for (const auto& f : failures) detail += "; " + f;
  for (const auto& d : diffs) detail += "; differs: " + d;
  return {failures.empty() && diffs.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  std::string work = "acceptance_work";
  app.add_option("--only", only, "run a single criterion (1-10)");
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Verdict(const fs::path&)>> checks{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10};
  int failed = 0;
  for (int i = 1; i <= static_cast<int>(checks.size()); ++i) {
    if (only != 0 && only != i) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = checks[i - 1](fs::path(work));
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    fmt::print("{} criterion {}: {} ({:.1f}s)\n", v.pass ? "PASS" : "FAIL", i, v.detail, seconds_since(t0));
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
