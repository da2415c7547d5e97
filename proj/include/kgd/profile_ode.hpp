#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgd/cubic_forms.hpp"
#include "kgd/kg_solver.hpp"
#include "kgd/resonant_average.hpp"

namespace kgd {

/// Hyperbolic coordinates t + 2B = tau cosh z, x = tau sinh z inside the
/// shifted light cone.
struct HyperbolicChart {
  double support_radius = 1.0;
  double tau0 = 4.0;

  HyperbolicChart() = default;
  HyperbolicChart(double support_radius, double tau0);

  double time_shift() const { return 2.0 * support_radius; }
};

/// (tau, z) of a point with |x| < t + 2B.
std::pair<double, double> cart_to_hyper(const HyperbolicChart& chart, double t, double x);

/// (t, x) of tau >= tau0.
std::pair<double, double> hyper_to_cart(const HyperbolicChart& chart, double tau, double z);

/// chi(z) = cosh(z)^(-kappa).
struct ChiWeight {
  double kappa = 2.0;

  ChiWeight() = default;
  explicit ChiWeight(double kappa);
};

struct ChiValue {
  double chi;
  double d1;
  double d2;
};

ChiValue chi_weight(const ChiWeight& w, double z);

enum class ProfileMode { resonant, full };

ProfileMode profile_mode_from_string(const std::string& name);
const char* to_string(ProfileMode mode);

/// Right-hand side of the profile equation along a fixed ray z.
///
/// Resonant: -(i chi^2 / tau) Phi(alpha, omega(z)).
/// Full: additionally -(i chi^2 / tau) (H_{-2} e^{-2i tau} + H_{2} e^{2i tau}
/// + H_{-4} e^{-4i tau}); the O(1/tau^2) remainder is not modeled.
class ProfileRhs {
 public:
  ProfileRhs(const CubicSystem& sys, const ChiWeight& weight, double z, ProfileMode mode);

  ComplexVector operator()(double tau, std::span<const Complex> alpha) const;

  int n() const { return phi_.n(); }
  double z() const { return w_.z; }
  ProfileMode mode() const { return mode_; }

 private:
  PhiExpression phi_;
  NonresonantForms modes_;
  HyperbolaPoint w_;
  double chi2_;
  ProfileMode mode_;
};

ComplexVector reduced_rhs(const CubicSystem& sys, const ChiWeight& weight,
                          std::span<const Complex> alpha, double tau, double z, ProfileMode mode);

struct ProfileTrajectory {
  double z = 0.0;
  ProfileMode mode = ProfileMode::resonant;
  std::vector<double> tau;
  std::vector<ComplexVector> alpha;
};

struct ProfileOptions {
  double tol = 1e-9;
  // Upper step bound in full mode, resolving e^{4 i tau}.
  double full_mode_max_step = 0.05;
  int samples = 200;
  double initial_step = 1e-3;
};

/// Dormand-Prince 5(4) with error control and continuous output at
/// logarithmically spaced tau in [tau0, tau1]. Throws NumericalError on
/// step-size underflow.
ProfileTrajectory integrate_profile(const CubicSystem& sys, const ChiWeight& weight,
                                    std::span<const Complex> alpha0, double z, double tau0,
                                    double tau1, ProfileMode mode, const ProfileOptions& opts = {});

/// Same integrator on an explicit set of output times (strictly increasing,
/// first entry is the start time).
ProfileTrajectory integrate_profile_at(const ProfileRhs& rhs, std::span<const Complex> alpha0,
                                       std::span<const double> taus, const ProfileOptions& opts);

/// alpha = e^{-i tau}(v - i d_tau v) with v = sqrt(tau) u / chi, read off a
/// field state along the ray z by linear interpolation in x. Throws if the
/// ray point is outside the grid or tau < tau0.
ComplexVector alpha_from_state(const FieldState& state, const HyperbolicChart& chart,
                               const ChiWeight& weight, double z);

/// alpha samples along z from a sequence of snapshots; snapshots whose ray
/// point lies before tau0 are skipped.
ProfileTrajectory extract_alpha(std::span<const FieldState> snapshots, const HyperbolicChart& chart,
                                const ChiWeight& weight, double z);

/// Records alpha along one ray during a solver run.
class RayProbe : public RunObserver {
 public:
  RayProbe(HyperbolicChart chart, ChiWeight weight, double z);
  void on_sample(const FieldState& state, const NormRecord& record) override;
  const ProfileTrajectory& trajectory() const { return traj_; }

 private:
  HyperbolicChart chart_;
  ChiWeight weight_;
  ProfileTrajectory traj_;
};

std::string trajectory_csv(const ProfileTrajectory& traj);

}  // namespace kgd
