#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kgd/cubic_forms.hpp"

namespace kgd {

/// Uniform grid x_i = x_min + i dx, i = 0..n_points-1, and time stepping.
struct GridSpec {
  double x_min = 0.0;
  double x_max = 0.0;
  double dx = 0.0;
  int n_points = 0;
  double dt = 0.0;
  double t_final = 0.0;

  static constexpr double kMaxCfl = 0.9;
  // Spatial margin beyond the light cone B + t_final.
  static constexpr double kConeMargin = 5.0;

  /// Symmetric grid just wide enough for the cone invariant.
  static GridSpec for_cone(double support_radius, double dx, double cfl, double t_final);

  double x(int i) const { return x_min + i * dx; }
  std::int64_t steps() const;
};

/// Throws InputError unless dt <= 0.9 dx and the grid contains
/// [-(B + t_final + 5), B + t_final + 5].
void validate_grid(const GridSpec& grid, double support_radius);

/// Initial data u_j = eps a_j bump_B(x), u_t,j = eps b_j bump_B(x).
struct DataProfile {
  std::vector<double> a;
  std::vector<double> b;
  double support_radius = 1.0;
  double epsilon = 0.1;
};

/// exp(1 - 1/(1 - (x/B)^2)) for |x| < B, else 0; peak value 1 at x = 0.
double bump(double x, double support_radius);

/// u and v = u_t, component-major: u[j * n_points + i].
struct FieldState {
  double t = 0.0;
  std::int64_t step_index = 0;
  int n_components = 0;
  GridSpec grid;
  std::vector<double> u;
  std::vector<double> v;

  double u_at(int j, int i) const { return u[static_cast<std::size_t>(j) * grid.n_points + i]; }
  double v_at(int j, int i) const { return v[static_cast<std::size_t>(j) * grid.n_points + i]; }
};

FieldState init_state(const CubicSystem& sys, const DataProfile& data, const GridSpec& grid);

enum class Scheme {
  rk4,          // classical Runge-Kutta in time, 3-point Laplacian in space
  leapfrog_pc,  // velocity-Verlet leapfrog with two corrections for F(u_t)
};

Scheme scheme_from_string(const std::string& name);
const char* to_string(Scheme scheme);

/// Explicit integrator for (d_t^2 - d_x^2 + 1) u_j = F_j(u, u_t, u_x) with
/// homogeneous Dirichlet boundaries. Only points within the light cone
/// plus a margin are updated; the rest stay exactly zero.
class KgSolver {
 public:
  KgSolver(const CubicSystem& sys, Scheme scheme = Scheme::leapfrog_pc, double support_radius = 1.0);

  /// Advances one dt in place. Throws BlowUpError on NaN/Inf or
  /// |u|, |u_t| > 1e6.
  void step(FieldState& state);

  Scheme scheme() const { return scheme_; }

  static constexpr double kBlowUpCap = 1e6;

 private:
  void acceleration(const FieldState& shape, const double* u, const double* v, double* out, int lo,
                    int hi);
  void active_range(const FieldState& state, int& lo, int& hi) const;

  CompiledCubic f_;
  Scheme scheme_;
  double support_radius_;
  std::vector<double> k_u_[4], k_v_[4], tmp_u_, tmp_v_, acc0_, acc1_;
};

/// One-step convenience form; returns the advanced copy.
FieldState step(const FieldState& state, const CubicSystem& sys, Scheme scheme = Scheme::leapfrog_pc);

/// u_x by centered differences, one-sided at the two boundary cells.
double dx_centered(const FieldState& state, int j, int i);

struct NormRecord {
  double t = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  std::vector<double> lp;
  double linf_dtu = 0.0;
  double linf_dxu = 0.0;
  double energy = 0.0;
  double cone_leak = 0.0;
};

/// L^p norms of the pointwise Euclidean length |u(x)| by the rectangle
/// rule; p_list entries must be >= 2. Sums run in grid order.
NormRecord norms(const FieldState& state, std::span<const double> p_list, double support_radius);

/// 1/2 sum (|u_t|^2 + |D+ u|^2 + |u|^2) dx with forward differences D+.
double physical_energy(const FieldState& state);

/// Discrete energy of the leapfrog scheme: physical_energy minus
/// dt^2/8 sum |K u|^2 dx, K = 1 - D+D-. Exactly conserved by the free
/// leapfrog step, within O(dt^2) of the physical energy.
double energy(const FieldState& state);

/// max |u_j(x)| over |x| > B + t + 2 dx.
double support_check(const FieldState& state, double support_radius);

struct NormSeries {
  std::vector<double> p_list;
  std::vector<NormRecord> rows;
};

/// Receives every sampled state; snapshots are only valid during the call.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_sample(const FieldState& state, const NormRecord& record) = 0;
};

/// Writes the norms CSV: t, L2, Linf, Lp_<p>..., Linf_dtu, Linf_dxu,
/// energy, cone_leak.
class CsvNormWriter : public RunObserver {
 public:
  CsvNormWriter(std::ostream& out, std::span<const double> p_list);
  void on_sample(const FieldState& state, const NormRecord& record) override;

 private:
  std::ostream& out_;
};

std::string norms_csv_header(std::span<const double> p_list);
std::string norms_csv_row(const NormRecord& record);

struct RunOptions {
  std::int64_t sample_every = 1;
  std::vector<double> p_list;
  Scheme scheme = Scheme::leapfrog_pc;
};

/// Integrates to grid.t_final, sampling at step 0, every sample_every
/// steps, and at the final step.
NormSeries run(const CubicSystem& sys, const DataProfile& data, const GridSpec& grid,
               const RunOptions& options, std::span<RunObserver* const> observers = {});

/// Binary snapshot: 32-byte header {"KGD1", uint32 N, uint64 n_points,
/// float64 t, 8 reserved bytes}, then u and u_t as little-endian float64,
/// component-major.
void write_snapshot(const std::string& path, const FieldState& state);
FieldState read_snapshot(const std::string& path, const GridSpec& grid);

}  // namespace kgd
