#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgd/cubic_forms.hpp"

namespace kgd {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

// Along the oscillation Y e^{i theta} the slots of F^cub take the values
//   u_k  = Re(Y_k e^{i theta})
//   ut_k = -omega0 Im(Y_k e^{i theta})
//   ux_k =  omega1 Im(Y_k e^{i theta})
// and F_j becomes a trigonometric polynomial of degree 3 in theta. Its
// e^{i m theta} coefficient is the m-th harmonic; H_j = e^{-i theta} F_j,
// so the n-th Fourier mode of H_j is harmonic n + 1 of F_j. The resonant
// average Phi_j(Y, omega) is harmonic 1.

/// Monomial c * Y^a conj(Y)^b omega0^p omega1^q of component j.
struct HarmonicTerm {
  int component;       // 1-based
  std::vector<int> a;  // exponents of Y_1..Y_N
  std::vector<int> b;  // exponents of conj(Y_1)..conj(Y_N)
  int p;               // omega0 power
  int q;               // omega1 power
  Complex coefficient;
};

/// Exact polynomial form of one harmonic of F^cub along Y e^{i theta}.
/// Every term has |a| + |b| = 3 and |a| - |b| = harmonic.
class HarmonicForm {
 public:
  HarmonicForm(int n_components, int harmonic, std::vector<HarmonicTerm> terms);

  int n() const { return n_; }
  int harmonic() const { return harmonic_; }
  const std::vector<HarmonicTerm>& terms() const { return terms_; }

 private:
  int n_;
  int harmonic_;
  std::vector<HarmonicTerm> terms_;
};

/// Closed form of Phi: harmonic 1.
using PhiExpression = HarmonicForm;

/// Expands F^cub symbolically and collects the e^{i harmonic theta}
/// coefficient. Coefficients below 1e-14 after merging are dropped.
HarmonicForm harmonic_closed_form(const CubicSystem& sys, int harmonic);

PhiExpression phi_closed_form(const CubicSystem& sys);

ComplexVector eval_harmonic(const HarmonicForm& form, std::span<const Complex> y,
                            const HyperbolaPoint& w);

inline ComplexVector eval_phi_expression(const PhiExpression& expr, std::span<const Complex> y,
                                         const HyperbolaPoint& w) {
  return eval_harmonic(expr, y, w);
}

constexpr int kDefaultPhiNodes = 32;

/// Phi(Y, omega) as the trapezoidal theta-average of
/// e^{-i theta} F^cub(...); exact for nodes >= 8.
ComplexVector phi_quadrature(const CubicSystem& sys, std::span<const Complex> y,
                             const HyperbolaPoint& w, int nodes = kDefaultPhiNodes);

/// n-th Fourier coefficient of H_j(theta) = e^{-i theta} F_j(...), |n| <= 8.
ComplexVector fourier_mode(const CubicSystem& sys, std::span<const Complex> y,
                           const HyperbolaPoint& w, int n);

/// The three modes of H besides n = 0 that can be nonzero.
///
/// These are the H-modes themselves. The oscillatory coefficients
/// I_{-1}, I_{3}, I_{-3} of the profile equation carry an extra 1/i:
/// I_{n} = -i * H_{n-1}.
struct NonresonantModes {
  ComplexVector h_minus2;  // pairs with e^{-2 i tau}
  ComplexVector h_plus2;   // pairs with e^{+2 i tau}
  ComplexVector h_minus4;  // pairs with e^{-4 i tau}
};

NonresonantModes nonresonant_modes(const CubicSystem& sys, std::span<const Complex> y,
                                   const HyperbolaPoint& w);

/// Closed forms of the three nonresonant modes (harmonics -1, 3, -3).
struct NonresonantForms {
  HarmonicForm h_minus2;
  HarmonicForm h_plus2;
  HarmonicForm h_minus4;

  explicit NonresonantForms(const CubicSystem& sys);
};

std::string format_complex(Complex c);

/// Reads "a", "bi", "a+bi" or "a-bi" (also "j" for i, spaces allowed).
Complex parse_complex(const std::string& text);

/// Comma-separated parse_complex entries; throws InputError when malformed.
ComplexVector parse_complex_list(const std::string& text);

/// Sorted human-readable polynomial, one line per term.
std::string to_text(const HarmonicForm& form);

nlohmann::json to_json(const HarmonicForm& form);

}  // namespace kgd
