#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kgd/resonant_average.hpp"

namespace kgd {

/// A positive Hermitian matrix A with its eigenvalue extremes.
struct HermitianCert {
  Eigen::MatrixXcd a;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool trace_normalized = false;  // trace(a) == N

  int n() const { return static_cast<int>(a.rows()); }
};

/// Symmetrizes (a + a^H)/2 and checks positive definiteness by Cholesky.
/// Throws InputError for a non-square matrix, NumericalError if not
/// positive definite.
HermitianCert hermitian_validate(const Eigen::MatrixXcd& a);

/// Rescales so that trace(A) = N.
HermitianCert normalize_trace(const HermitianCert& cert);

/// nu_A(Y) = sqrt(<Y, AY>), with <Y, Z> = sum_j Y_j conj(Z_j).
double nu_a(const HermitianCert& cert, std::span<const Complex> y);

/// -Im<Phi(Y, omega(z)), AY> / (omega0(z)^k |Y|^4). Throws for Y = 0.
double margin(const PhiExpression& expr, const HermitianCert& cert, std::span<const Complex> y,
              double z, int k);

struct CertOptions {
  // Symmetric rapidity grid {0, +-z_step, ..., +-z_max}.
  double z_max = 12.0;
  double z_step = 0.3;
  // Sphere minimization.
  int starts = 64;
  int max_iterations = 500;
  double step_tolerance = 1e-10;
  double pass_threshold = 1e-9;
  // Certificate search.
  int search_starts = 16;
  int search_iterations = 400;
  int search_directions = 128;
  std::vector<double> search_z{0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0, 8.0, -8.0, 12.0, -12.0};
  double search_delta = 1e-6;
  std::uint64_t seed = 0;
};

enum class Asymptote { finite, plus_infinity, minus_infinity };

/// Outcome of checking one condition order k for a fixed A.
struct CertReport {
  int k = 0;
  double inf_margin = 0.0;
  ComplexVector argmin_y;
  double argmin_z = 0.0;
  std::vector<double> z_grid;
  int sphere_samples = 0;
  // Limit of the margin as |z| -> infinity, minimized over the sphere.
  double asymptotic_margin = 0.0;
  Asymptote asymptote = Asymptote::finite;
  bool passed = false;
  // Non-strict form: sup Im<Phi, AY> <= threshold.
  bool weak_passed = false;
  Eigen::MatrixXcd a;
  std::uint64_t seed = 0;
};

std::vector<double> symmetric_z_grid(double z_max, double z_step);

/// Estimates inf over |Y| = 1 and the z grid of the margin, plus its
/// large-|z| limit. A is trace-normalized before evaluation.
CertReport check_condition(const PhiExpression& expr, const HermitianCert& cert, int k,
                           const CertOptions& opts = {});

struct SearchResult {
  HermitianCert cert;
  CertReport report;
};

/// Heuristic search for A = L L^H + delta I (trace-normalized) maximizing
/// the margin. Multistart Nelder-Mead over the N^2 real parameters of L;
/// deterministic for a fixed seed. A negative result is not a proof that
/// no certificate exists.
SearchResult search_certificate(const PhiExpression& expr, int k, const CertOptions& opts = {});

nlohmann::json to_json(const CertReport& report);

}  // namespace kgd
