#include "kgd/kg_solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "kgd/errors.hpp"

namespace kgd {

namespace {

// Updated region: light cone plus this margin (cells beyond it stay 0).
constexpr double kActiveMargin = 4.0;

}  // namespace

GridSpec GridSpec::for_cone(double support_radius, double dx, double cfl, double t_final) {
  GridSpec g;
  const double half = support_radius + t_final + kConeMargin;
  const int half_cells = static_cast<int>(std::ceil(half / dx - 1e-9));
  g.dx = dx;
  g.n_points = 2 * half_cells + 1;
  g.x_min = -half_cells * dx;
  g.x_max = half_cells * dx;
  g.dt = cfl * dx;
  g.t_final = t_final;
  return g;
}

std::int64_t GridSpec::steps() const {
  return static_cast<std::int64_t>(std::llround(t_final / dt));
}

void validate_grid(const GridSpec& g, double support_radius) {
  if (!(g.dx > 0.0) || !(g.dt > 0.0) || g.n_points < 3) {
    throw InputError("grid needs dx > 0, dt > 0 and at least 3 points");
  }
  if (!(g.t_final >= 0.0)) throw InputError("t_final must be nonnegative");
  if (std::abs(g.x_min + (g.n_points - 1) * g.dx - g.x_max) > 1e-9 * std::max(1.0, std::abs(g.x_max))) {
    throw InputError("grid: x_max != x_min + (n_points - 1) dx");
  }
  if (g.dt > GridSpec::kMaxCfl * g.dx * (1.0 + 1e-12)) {
    throw InputError(fmt::format("CFL violated: dt = {} exceeds {} dx = {}", g.dt, GridSpec::kMaxCfl,
                                 GridSpec::kMaxCfl * g.dx));
  }
  const double reach = support_radius + g.t_final + GridSpec::kConeMargin;
  if (g.x_max < reach - 1e-9 || g.x_min > -reach + 1e-9) {
    throw InputError(fmt::format(
        "grid [{}, {}] does not contain the light cone margin [-{}, {}]", g.x_min, g.x_max, reach, reach));
  }
}

double bump(double x, double support_radius) {
  const double r = x / support_radius;
  if (std::abs(r) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

FieldState init_state(const CubicSystem& sys, const DataProfile& data, const GridSpec& grid) {
  const int n = sys.n();
  if (data.a.size() != static_cast<std::size_t>(n) || data.b.size() != static_cast<std::size_t>(n)) {
    throw InputError("data amplitudes must have one entry per component");
  }
  if (!(data.support_radius > 0.0) || !(data.epsilon >= 0.0)) {
    throw InputError("data needs B > 0 and epsilon >= 0");
  }
  validate_grid(grid, data.support_radius);
  FieldState s;
  s.n_components = n;
  s.grid = grid;
  const std::size_t np = grid.n_points;
  s.u.assign(n * np, 0.0);
  s.v.assign(n * np, 0.0);
  for (std::size_t i = 0; i < np; ++i) {
    const double b = bump(grid.x(static_cast<int>(i)), data.support_radius);
    if (b == 0.0) continue;
    for (int j = 0; j < n; ++j) {
      s.u[j * np + i] = data.epsilon * data.a[j] * b;
      s.v[j * np + i] = data.epsilon * data.b[j] * b;
    }
  }
  return s;
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "rk4") return Scheme::rk4;
  if (name == "leapfrog_pc") return Scheme::leapfrog_pc;
  throw InputError("unknown scheme '" + name + "' (expected rk4 or leapfrog_pc)");
}

const char* to_string(Scheme scheme) {
  return scheme == Scheme::rk4 ? "rk4" : "leapfrog_pc";
}

KgSolver::KgSolver(const CubicSystem& sys, Scheme scheme, double support_radius)
    : f_(sys), scheme_(scheme), support_radius_(support_radius) {}

void KgSolver::active_range(const FieldState& s, int& lo, int& hi) const {
  const auto& g = s.grid;
  const double reach = support_radius_ + s.t + g.dt + kActiveMargin;
  lo = std::max(1, static_cast<int>(std::floor((-reach - g.x_min) / g.dx)) - 1);
  hi = std::min(g.n_points - 2, static_cast<int>(std::ceil((reach - g.x_min) / g.dx)) + 1);
}

void KgSolver::acceleration(const FieldState& shape, const double* u, const double* v, double* out,
                            int lo, int hi) {
  const int n = shape.n_components;
  const std::size_t np = shape.grid.n_points;
  const double inv_dx2 = 1.0 / (shape.grid.dx * shape.grid.dx);
  const double inv_2dx = 0.5 / shape.grid.dx;
  const bool nonlinear = !f_.empty();
#pragma omp parallel for schedule(static)
  for (int i = lo; i <= hi; ++i) {
    double args[48];
    double fval[16];
    for (int j = 0; j < n; ++j) {
      const double* uj = u + j * np;
      out[j * np + i] = (uj[i + 1] - 2.0 * uj[i] + uj[i - 1]) * inv_dx2 - uj[i];
      args[j] = uj[i];
      args[n + j] = v[j * np + i];
      args[2 * n + j] = (uj[i + 1] - uj[i - 1]) * inv_2dx;
    }
    if (nonlinear) {
      f_.eval(args, fval);
      for (int j = 0; j < n; ++j) out[j * np + i] += fval[j];
    }
  }
}

void KgSolver::step(FieldState& s) {
  const int n = s.n_components;
  if (n > 16) throw InputError("solver supports at most 16 components");
  const std::size_t np = s.grid.n_points;
  const std::size_t total = n * np;
  const double dt = s.grid.dt;
  int lo = 0, hi = 0;
  active_range(s, lo, hi);

  auto ensure = [total](std::vector<double>& w) {
    if (w.size() != total) w.assign(total, 0.0);
  };

  if (scheme_ == Scheme::rk4) {
    for (int r = 0; r < 4; ++r) {
      ensure(k_u_[r]);
      ensure(k_v_[r]);
    }
    ensure(tmp_u_);
    ensure(tmp_v_);
    const double stage_scale[3] = {0.5 * dt, 0.5 * dt, dt};
    const double* cu = s.u.data();
    const double* cv = s.v.data();
    for (int r = 0; r < 4; ++r) {
      // k_u = v at stage point, k_v = acceleration at stage point
      const double* su = r == 0 ? cu : tmp_u_.data();
      const double* sv = r == 0 ? cv : tmp_v_.data();
      for (int j = 0; j < n; ++j) {
        std::copy(sv + j * np + lo, sv + j * np + hi + 1, k_u_[r].data() + j * np + lo);
      }
      acceleration(s, su, sv, k_v_[r].data(), lo, hi);
      if (r < 3) {
        const double h = stage_scale[r];
        for (int j = 0; j < n; ++j) {
          for (int i = lo; i <= hi; ++i) {
            const std::size_t p = j * np + i;
            tmp_u_[p] = cu[p] + h * k_u_[r][p];
            tmp_v_[p] = cv[p] + h * k_v_[r][p];
          }
        }
      }
    }
    const double w = dt / 6.0;
    for (int j = 0; j < n; ++j) {
      for (int i = lo; i <= hi; ++i) {
        const std::size_t p = j * np + i;
        s.u[p] += w * (k_u_[0][p] + 2.0 * k_u_[1][p] + 2.0 * k_u_[2][p] + k_u_[3][p]);
        s.v[p] += w * (k_v_[0][p] + 2.0 * k_v_[1][p] + 2.0 * k_v_[2][p] + k_v_[3][p]);
      }
    }
  } else {
    ensure(acc0_);
    ensure(acc1_);
    ensure(tmp_u_);
    ensure(tmp_v_);
    acceleration(s, s.u.data(), s.v.data(), acc0_.data(), lo, hi);
    for (int j = 0; j < n; ++j) {
      for (int i = lo; i <= hi; ++i) {
        const std::size_t p = j * np + i;
        tmp_u_[p] = s.u[p] + dt * s.v[p] + 0.5 * dt * dt * acc0_[p];
        tmp_v_[p] = s.v[p] + dt * acc0_[p];
      }
    }
    for (int c = 0; c < 2; ++c) {
      acceleration(s, tmp_u_.data(), tmp_v_.data(), acc1_.data(), lo, hi);
      for (int j = 0; j < n; ++j) {
        for (int i = lo; i <= hi; ++i) {
          const std::size_t p = j * np + i;
          tmp_v_[p] = s.v[p] + 0.5 * dt * (acc0_[p] + acc1_[p]);
        }
      }
    }
    for (int j = 0; j < n; ++j) {
      std::copy(tmp_u_.begin() + j * np + lo, tmp_u_.begin() + j * np + hi + 1, s.u.begin() + j * np + lo);
      std::copy(tmp_v_.begin() + j * np + lo, tmp_v_.begin() + j * np + hi + 1, s.v.begin() + j * np + lo);
    }
  }

  s.step_index += 1;
  s.t = static_cast<double>(s.step_index) * dt;

  for (int j = 0; j < n; ++j) {
    for (int i = lo; i <= hi; ++i) {
      const std::size_t p = j * np + i;
      const double a = std::abs(s.u[p]), b = std::abs(s.v[p]);
      if (!(a <= kBlowUpCap) || !(b <= kBlowUpCap)) throw BlowUpError("solution blew up", s.t);
    }
  }
}

FieldState step(const FieldState& state, const CubicSystem& sys, Scheme scheme) {
  FieldState out = state;
  KgSolver solver(sys, scheme);
  solver.step(out);
  return out;
}

double dx_centered(const FieldState& s, int j, int i) {
  const int np = s.grid.n_points;
  if (i == 0) return (s.u_at(j, 1) - s.u_at(j, 0)) / s.grid.dx;
  if (i == np - 1) return (s.u_at(j, np - 1) - s.u_at(j, np - 2)) / s.grid.dx;
  return (s.u_at(j, i + 1) - s.u_at(j, i - 1)) / (2.0 * s.grid.dx);
}

NormRecord norms(const FieldState& s, std::span<const double> p_list, double support_radius) {
  for (double p : p_list) {
    if (!(p >= 2.0) || std::isinf(p)) throw InputError("L^p norms need finite p >= 2");
  }
  const int n = s.n_components;
  const int np = s.grid.n_points;
  const double dx = s.grid.dx;
  NormRecord r;
  r.t = s.t;
  std::vector<double> lp_sum(p_list.size(), 0.0);
  double l2_sum = 0.0;
  for (int i = 0; i < np; ++i) {
    double uu = 0.0, vv = 0.0, xx = 0.0;
    for (int j = 0; j < n; ++j) {
      const double u = s.u_at(j, i), v = s.v_at(j, i), ux = dx_centered(s, j, i);
      uu += u * u;
      vv += v * v;
      xx += ux * ux;
    }
    l2_sum += uu;
    const double mag = std::sqrt(uu);
    r.linf = std::max(r.linf, mag);
    r.linf_dtu = std::max(r.linf_dtu, std::sqrt(vv));
    r.linf_dxu = std::max(r.linf_dxu, std::sqrt(xx));
    if (mag > 0.0) {
      for (std::size_t k = 0; k < p_list.size(); ++k) lp_sum[k] += std::pow(mag, p_list[k]);
    }
  }
  r.l2 = std::sqrt(l2_sum * dx);
  for (std::size_t k = 0; k < p_list.size(); ++k) r.lp.push_back(std::pow(lp_sum[k] * dx, 1.0 / p_list[k]));
  r.energy = energy(s);
  r.cone_leak = support_check(s, support_radius);
  return r;
}

double physical_energy(const FieldState& s) {
  const int n = s.n_components;
  const int np = s.grid.n_points;
  const double dx = s.grid.dx;
  double sum = 0.0;
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = s.u_at(j, i), v = s.v_at(j, i);
      const double grad = i + 1 < np ? (s.u_at(j, i + 1) - u) / dx : 0.0;
      sum += v * v + grad * grad + u * u;
    }
  }
  return 0.5 * sum * dx;
}

double energy(const FieldState& s) {
  const int n = s.n_components;
  const int np = s.grid.n_points;
  const double dx = s.grid.dx;
  const double inv_dx2 = 1.0 / (dx * dx);
  double corr = 0.0;
  for (int i = 1; i + 1 < np; ++i) {
    for (int j = 0; j < n; ++j) {
      const double ku = s.u_at(j, i) - (s.u_at(j, i + 1) - 2.0 * s.u_at(j, i) + s.u_at(j, i - 1)) * inv_dx2;
      corr += ku * ku;
    }
  }
  return physical_energy(s) - 0.125 * s.grid.dt * s.grid.dt * corr * dx;
}

double support_check(const FieldState& s, double support_radius) {
  const double edge = support_radius + s.t + 2.0 * s.grid.dx;
  double leak = 0.0;
  for (int i = 0; i < s.grid.n_points; ++i) {
    if (std::abs(s.grid.x(i)) <= edge) continue;
    for (int j = 0; j < s.n_components; ++j) leak = std::max(leak, std::abs(s.u_at(j, i)));
  }
  return leak;
}

std::string norms_csv_header(std::span<const double> p_list) {
  std::string h = "t,L2,Linf";
  for (double p : p_list) h += fmt::format(",Lp_{}", p);
  h += ",Linf_dtu,Linf_dxu,energy,cone_leak";
  return h;
}

std::string norms_csv_row(const NormRecord& r) {
  std::string row = fmt::format("{},{},{}", r.t, r.l2, r.linf);
  for (double v : r.lp) row += fmt::format(",{}", v);
  row += fmt::format(",{},{},{},{}", r.linf_dtu, r.linf_dxu, r.energy, r.cone_leak);
  return row;
}

CsvNormWriter::CsvNormWriter(std::ostream& out, std::span<const double> p_list) : out_(out) {
  out_ << norms_csv_header(p_list) << '\n';
}

void CsvNormWriter::on_sample(const FieldState&, const NormRecord& record) {
  out_ << norms_csv_row(record) << '\n';
}

NormSeries run(const CubicSystem& sys, const DataProfile& data, const GridSpec& grid,
               const RunOptions& options, std::span<RunObserver* const> observers) {
  if (options.sample_every < 1) throw InputError("sample_every must be >= 1");
  FieldState state = init_state(sys, data, grid);
  KgSolver solver(sys, options.scheme, data.support_radius);
  NormSeries series;
  series.p_list = options.p_list;
  auto sample = [&] {
    NormRecord r = norms(state, options.p_list, data.support_radius);
    for (auto* obs : observers) obs->on_sample(state, r);
    series.rows.push_back(std::move(r));
  };
  sample();
  const std::int64_t steps = grid.steps();
  for (std::int64_t k = 1; k <= steps; ++k) {
    solver.step(state);
    if (k % options.sample_every == 0 || k == steps) sample();
  }
  return series;
}

namespace {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes little-endian");

}  // namespace

void write_snapshot(const std::string& path, const FieldState& s) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write snapshot '" + path + "'");
  char header[32] = {'K', 'G', 'D', '1'};
  const std::uint32_t n = static_cast<std::uint32_t>(s.n_components);
  const std::uint64_t np = static_cast<std::uint64_t>(s.grid.n_points);
  std::memcpy(header + 4, &n, 4);
  std::memcpy(header + 8, &np, 8);
  std::memcpy(header + 16, &s.t, 8);
  out.write(header, sizeof header);
  out.write(reinterpret_cast<const char*>(s.u.data()), static_cast<std::streamsize>(s.u.size() * 8));
  out.write(reinterpret_cast<const char*>(s.v.data()), static_cast<std::streamsize>(s.v.size() * 8));
  if (!out) throw InputError("failed writing snapshot '" + path + "'");
}

FieldState read_snapshot(const std::string& path, const GridSpec& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open snapshot '" + path + "'");
  char header[32];
  in.read(header, sizeof header);
  if (!in || std::memcmp(header, "KGD1", 4) != 0) throw InputError("'" + path + "' is not a KGD1 snapshot");
  std::uint32_t n = 0;
  std::uint64_t np = 0;
  FieldState s;
  std::memcpy(&n, header + 4, 4);
  std::memcpy(&np, header + 8, 8);
  std::memcpy(&s.t, header + 16, 8);
  if (np != static_cast<std::uint64_t>(grid.n_points)) {
    throw InputError("snapshot grid size does not match the run manifest");
  }
  s.n_components = static_cast<int>(n);
  s.grid = grid;
  s.step_index = std::llround(s.t / grid.dt);
  s.u.resize(static_cast<std::size_t>(n) * np);
  s.v.resize(static_cast<std::size_t>(n) * np);
  in.read(reinterpret_cast<char*>(s.u.data()), static_cast<std::streamsize>(s.u.size() * 8));
  in.read(reinterpret_cast<char*>(s.v.data()), static_cast<std::streamsize>(s.v.size() * 8));
  if (!in) throw InputError("truncated snapshot '" + path + "'");
  return s;
}

}  // namespace kgd
