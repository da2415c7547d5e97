#include "kgd/profile_ode.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "kgd/errors.hpp"

namespace kgd {

HyperbolicChart::HyperbolicChart(double support_radius_in, double tau0_in)
    : support_radius(support_radius_in), tau0(tau0_in) {
  if (!(support_radius > 0.0)) throw InputError("chart needs B > 0");
  if (!(tau0 > 1.0 + 2.0 * support_radius)) {
    throw InputError(fmt::format("chart needs tau0 > 1 + 2B = {}", 1.0 + 2.0 * support_radius));
  }
}

std::pair<double, double> cart_to_hyper(const HyperbolicChart& chart, double t, double x) {
  const double s = t + chart.time_shift();
  if (!(std::abs(x) < s)) throw InputError("point lies on or outside the shifted light cone");
  return {std::sqrt((s - x) * (s + x)), std::atanh(x / s)};
}

std::pair<double, double> hyper_to_cart(const HyperbolicChart& chart, double tau, double z) {
  if (tau < chart.tau0) throw InputError("tau below the chart's tau0");
  return {tau * std::cosh(z) - chart.time_shift(), tau * std::sinh(z)};
}

ChiWeight::ChiWeight(double k) : kappa(k) {
  if (!(kappa >= 1.0)) throw InputError("chi weight needs kappa >= 1");
}

ChiValue chi_weight(const ChiWeight& w, double z) {
  const double th = std::tanh(z);
  const double sech2 = 1.0 - th * th;
  // cosh^{-kappa} = exp(-kappa log cosh z), written to avoid overflow
  const double az = std::abs(z);
  const double log_cosh = az + std::log1p(std::exp(-2.0 * az)) - std::log(2.0);
  const double chi = std::exp(-w.kappa * log_cosh);
  return {chi, -w.kappa * th * chi, chi * (w.kappa * w.kappa * th * th - w.kappa * sech2)};
}

ProfileMode profile_mode_from_string(const std::string& name) {
  if (name == "resonant") return ProfileMode::resonant;
  if (name == "full") return ProfileMode::full;
  throw InputError("unknown profile mode '" + name + "' (expected resonant or full)");
}

const char* to_string(ProfileMode mode) {
  return mode == ProfileMode::resonant ? "resonant" : "full";
}

ProfileRhs::ProfileRhs(const CubicSystem& sys, const ChiWeight& weight, double z, ProfileMode mode)
    : phi_(phi_closed_form(sys)),
      modes_(sys),
      w_(HyperbolaPoint::at(z)),
      chi2_(std::pow(chi_weight(weight, z).chi, 2)),
      mode_(mode) {}

ComplexVector ProfileRhs::operator()(double tau, std::span<const Complex> alpha) const {
  if (!(tau > 0.0)) throw InputError("profile equation needs tau > 0");
  const Complex factor(0.0, -chi2_ / tau);
  ComplexVector out = eval_phi_expression(phi_, alpha, w_);
  if (mode_ == ProfileMode::full) {
    const ComplexVector m2 = eval_harmonic(modes_.h_minus2, alpha, w_);
    const ComplexVector p2 = eval_harmonic(modes_.h_plus2, alpha, w_);
    const ComplexVector m4 = eval_harmonic(modes_.h_minus4, alpha, w_);
    const Complex e_m2 = std::polar(1.0, -2.0 * tau);
    const Complex e_p2 = std::polar(1.0, 2.0 * tau);
    const Complex e_m4 = std::polar(1.0, -4.0 * tau);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += m2[j] * e_m2 + p2[j] * e_p2 + m4[j] * e_m4;
  }
  for (auto& v : out) v *= factor;
  return out;
}

ComplexVector reduced_rhs(const CubicSystem& sys, const ChiWeight& weight,
                          std::span<const Complex> alpha, double tau, double z, ProfileMode mode) {
  return ProfileRhs(sys, weight, z, mode)(tau, alpha);
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

void check_finite(const ComplexVector& y) {
  for (const auto& v : y) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw NumericalError("profile integration produced a non-finite value");
    }
  }
}

}  // namespace

ProfileTrajectory integrate_profile_at(const ProfileRhs& rhs, std::span<const Complex> alpha0,
                                       std::span<const double> taus, const ProfileOptions& opts) {
  const std::size_t n = alpha0.size();
  if (n != static_cast<std::size_t>(rhs.n())) throw InputError("alpha0 dimension mismatch");
  if (taus.empty()) throw InputError("no output times");
  for (std::size_t k = 1; k < taus.size(); ++k) {
    if (!(taus[k] > taus[k - 1])) throw InputError("output times must be strictly increasing");
  }
  if (!(opts.tol > 0.0)) throw InputError("tolerance must be positive");

  ProfileTrajectory traj;
  traj.z = rhs.z();
  traj.mode = rhs.mode();
  ComplexVector y(alpha0.begin(), alpha0.end());
  check_finite(y);
  traj.tau.push_back(taus[0]);
  traj.alpha.push_back(y);

  const double rtol = opts.tol;
  const double atol = opts.tol * 1e-3;
  const double t_end = taus.back();
  const double h_cap = rhs.mode() == ProfileMode::full ? opts.full_mode_max_step : t_end;
  double t = taus[0];
  double h = std::min(opts.initial_step, h_cap);
  std::size_t next_out = 1;

  auto axpy = [n](const ComplexVector& base, std::initializer_list<std::pair<double, const ComplexVector*>> terms,
                  double hh) {
    ComplexVector out = base;
    for (const auto& [c, k] : terms) {
      if (c == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[j] += hh * c * (*k)[j];
    }
    return out;
  };

  ComplexVector k1 = rhs(t, y);
  while (next_out < taus.size()) {
    h = std::min({h, h_cap, t_end - t});
    if (h <= 1e-14 * std::max(1.0, std::abs(t))) throw NumericalError("profile step size underflow");

    const ComplexVector k2 = rhs(t + c2 * h, axpy(y, {{a21, &k1}}, h));
    const ComplexVector k3 = rhs(t + c3 * h, axpy(y, {{a31, &k1}, {a32, &k2}}, h));
    const ComplexVector k4 = rhs(t + c4 * h, axpy(y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, h));
    const ComplexVector k5 =
        rhs(t + c5 * h, axpy(y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h));
    const ComplexVector k6 =
        rhs(t + h, axpy(y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h));
    const ComplexVector y_new =
        axpy(y, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}}, h);
    const ComplexVector k7 = rhs(t + h, y_new);

    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const Complex e = h * (e1 * k1[j] + e3 * k3[j] + e4 * k4[j] + e5 * k5[j] + e6 * k6[j] + e7 * k7[j]);
      const double sc = atol + rtol * std::max(std::abs(y[j]), std::abs(y_new[j]));
      err = std::max(err, std::abs(e) / sc);
    }

    if (err <= 1.0) {
      const double t_new = (t_end - (t + h) <= 1e-12 * t_end) ? t_end : t + h;
      // continuous output on (t, t_new]
      while (next_out < taus.size() && taus[next_out] <= t_new) {
        const double theta = (taus[next_out] - t) / (t_new - t);
        const double theta1 = 1.0 - theta;
        ComplexVector yo(n);
        for (std::size_t j = 0; j < n; ++j) {
          const Complex ydiff = y_new[j] - y[j];
          const Complex bspl = h * k1[j] - ydiff;
          const Complex r4 = ydiff - h * k7[j] - bspl;
          const Complex r5 = h * (d1 * k1[j] + d3 * k3[j] + d4 * k4[j] + d5 * k5[j] + d6 * k6[j] + d7 * k7[j]);
          yo[j] = y[j] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)));
        }
        if (next_out + 1 == taus.size() && t_new == t_end) yo = y_new;
        check_finite(yo);
        traj.tau.push_back(taus[next_out]);
        traj.alpha.push_back(std::move(yo));
        ++next_out;
      }
      t = t_new;
      y = y_new;
      k1 = k7;
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= factor;
  }
  return traj;
}

ProfileTrajectory integrate_profile(const CubicSystem& sys, const ChiWeight& weight,
                                    std::span<const Complex> alpha0, double z, double tau0,
                                    double tau1, ProfileMode mode, const ProfileOptions& opts) {
  if (!(tau0 > 0.0) || !(tau1 > tau0)) throw InputError("profile needs 0 < tau0 < tau1");
  const int m = std::max(2, opts.samples);
  std::vector<double> taus(m);
  const double ratio = std::log(tau1 / tau0);
  for (int k = 0; k < m; ++k) taus[k] = tau0 * std::exp(ratio * k / (m - 1));
  taus.front() = tau0;
  taus.back() = tau1;
  return integrate_profile_at(ProfileRhs(sys, weight, z, mode), alpha0, taus, opts);
}

ComplexVector alpha_from_state(const FieldState& s, const HyperbolicChart& chart,
                               const ChiWeight& weight, double z) {
  const HyperbolaPoint w = HyperbolaPoint::at(z);
  const double tau = (s.t + chart.time_shift()) / w.omega0;
  if (tau < chart.tau0) throw InputError("snapshot lies before tau0 on this ray");
  const double x = tau * w.omega1;
  const auto& g = s.grid;
  const double pos = (x - g.x_min) / g.dx;
  const int i = static_cast<int>(std::floor(pos));
  if (i < 1 || i + 1 > g.n_points - 2) throw InputError("ray leaves the sampled region");
  const double frac = pos - i;
  const double chi = chi_weight(weight, z).chi;
  const double root = std::sqrt(tau);
  const Complex rot = std::polar(1.0, -tau);

  ComplexVector alpha(s.n_components);
  for (int j = 0; j < s.n_components; ++j) {
    const double u = (1.0 - frac) * s.u_at(j, i) + frac * s.u_at(j, i + 1);
    const double ut = (1.0 - frac) * s.v_at(j, i) + frac * s.v_at(j, i + 1);
    const double ux = (1.0 - frac) * dx_centered(s, j, i) + frac * dx_centered(s, j, i + 1);
    const double v = root * u / chi;
    const double dv = v / (2.0 * tau) + (root / chi) * (w.omega0 * ut + w.omega1 * ux);
    alpha[j] = rot * Complex(v, -dv);
  }
  return alpha;
}

ProfileTrajectory extract_alpha(std::span<const FieldState> snapshots, const HyperbolicChart& chart,
                                const ChiWeight& weight, double z) {
  ProfileTrajectory traj;
  traj.z = z;
  traj.mode = ProfileMode::full;
  const double omega0 = std::cosh(z);
  for (const auto& s : snapshots) {
    const double tau = (s.t + chart.time_shift()) / omega0;
    if (tau < chart.tau0) continue;
    if (!traj.tau.empty() && !(tau > traj.tau.back())) throw InputError("snapshots must be time-ordered");
    traj.alpha.push_back(alpha_from_state(s, chart, weight, z));
    traj.tau.push_back(tau);
  }
  return traj;
}

RayProbe::RayProbe(HyperbolicChart chart, ChiWeight weight, double z)
    : chart_(chart), weight_(weight) {
  traj_.z = z;
  traj_.mode = ProfileMode::full;
}

void RayProbe::on_sample(const FieldState& state, const NormRecord&) {
  const double tau = (state.t + chart_.time_shift()) / std::cosh(traj_.z);
  if (tau < chart_.tau0) return;
  traj_.alpha.push_back(alpha_from_state(state, chart_, weight_, traj_.z));
  traj_.tau.push_back(tau);
}

std::string trajectory_csv(const ProfileTrajectory& traj) {
  std::string out = "tau";
  const std::size_t n = traj.alpha.empty() ? 0 : traj.alpha.front().size();
  for (std::size_t j = 1; j <= n; ++j) out += fmt::format(",re_{},im_{}", j, j);
  out += ",abs_alpha\n";
  for (std::size_t k = 0; k < traj.tau.size(); ++k) {
    out += fmt::format("{}", traj.tau[k]);
    double norm2 = 0.0;
    for (const auto& a : traj.alpha[k]) {
      out += fmt::format(",{},{}", a.real(), a.imag());
      norm2 += std::norm(a);
    }
    out += fmt::format(",{}\n", std::sqrt(norm2));
  }
  return out;
}

}  // namespace kgd
