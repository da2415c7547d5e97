#include "kgd/resonant_average.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

#include <fmt/format.h>

#include "kgd/errors.hpp"

namespace kgd {

namespace {

constexpr double kDropBelow = 1e-14;

struct TermKey {
  int component;
  std::vector<int> a;
  std::vector<int> b;
  int p;
  int q;

  auto operator<=>(const TermKey&) const = default;
};

void check_dims(const CubicSystem& sys, std::span<const Complex> y) {
  if (y.size() != static_cast<std::size_t>(sys.n())) {
    throw InputError("profile has " + std::to_string(y.size()) + " entries, system has N=" +
                     std::to_string(sys.n()));
  }
}

// (1/M) sum_m F(theta_m) e^{-i shift theta_m}
ComplexVector harmonic_quadrature(const CubicSystem& sys, std::span<const Complex> y,
                                  const HyperbolaPoint& w, int shift, int nodes) {
  const int n = sys.n();
  CompiledCubic f(sys);
  std::vector<double> args(3 * n), out(n);
  ComplexVector acc(n);
  for (int m = 0; m < nodes; ++m) {
    const double theta = 2.0 * std::numbers::pi * m / nodes;
    const Complex rot = std::polar(1.0, theta);
    for (int k = 0; k < n; ++k) {
      const Complex yl = y[k] * rot;
      args[k] = yl.real();
      args[n + k] = -w.omega0 * yl.imag();
      args[2 * n + k] = w.omega1 * yl.imag();
    }
    f.eval(args.data(), out.data());
    const Complex weight = std::polar(1.0, -shift * theta);
    for (int j = 0; j < n; ++j) acc[j] += out[j] * weight;
  }
  for (auto& v : acc) v /= static_cast<double>(nodes);
  return acc;
}

}  // namespace

HarmonicForm::HarmonicForm(int n_components, int harmonic, std::vector<HarmonicTerm> terms)
    : n_(n_components), harmonic_(harmonic) {
  std::map<TermKey, Complex> merged;
  for (auto& t : terms) {
    int na = 0, nb = 0;
    for (int e : t.a) na += e;
    for (int e : t.b) nb += e;
    if (na + nb != 3 || na - nb != harmonic || t.p + t.q > 3) {
      throw InputError("harmonic term violates degree/gauge structure");
    }
    merged[{t.component, t.a, t.b, t.p, t.q}] += t.coefficient;
  }
  for (auto& [k, c] : merged) {
    if (std::abs(c) < kDropBelow) continue;
    terms_.push_back({k.component, k.a, k.b, k.p, k.q, c});
  }
}

HarmonicForm harmonic_closed_form(const CubicSystem& sys, int harmonic) {
  const int n = sys.n();
  // Each slot is c_plus * Y_k e^{i theta} + c_minus * conj(Y_k) e^{-i theta}
  // times an omega factor.
  struct Linear {
    Complex c_plus, c_minus;
    int p, q;
  };
  auto slot_linear = [](SlotKind kind) -> Linear {
    const Complex half(0.5, 0.0);
    const Complex i_half(0.0, 0.5);  // 1/(2i) = -i/2
    switch (kind) {
      case SlotKind::u: return {half, half, 0, 0};
      case SlotKind::ut: return {i_half, -i_half, 1, 0};    // -omega0 (Yl - conj)/(2i)
      case SlotKind::ux: return {-i_half, i_half, 0, 1};    //  omega1 (Yl - conj)/(2i)
    }
    return {};
  };

  std::vector<HarmonicTerm> out;
  for (const auto& m : sys.terms()) {
    const auto slots = m.expanded();
    for (int choice = 0; choice < 8; ++choice) {
      HarmonicTerm t{m.component, std::vector<int>(n, 0), std::vector<int>(n, 0), 0, 0,
                     Complex(m.coefficient, 0.0)};
      int e_power = 0;
      for (int s = 0; s < 3; ++s) {
        const Linear lin = slot_linear(slots[s].kind);
        t.p += lin.p;
        t.q += lin.q;
        if (choice & (1 << s)) {
          t.coefficient *= lin.c_minus;
          t.b[slots[s].index - 1] += 1;
          e_power -= 1;
        } else {
          t.coefficient *= lin.c_plus;
          t.a[slots[s].index - 1] += 1;
          e_power += 1;
        }
      }
      if (e_power == harmonic) out.push_back(std::move(t));
    }
  }
  return HarmonicForm(n, harmonic, std::move(out));
}

PhiExpression phi_closed_form(const CubicSystem& sys) { return harmonic_closed_form(sys, 1); }

ComplexVector eval_harmonic(const HarmonicForm& form, std::span<const Complex> y,
                            const HyperbolaPoint& w) {
  const int n = form.n();
  if (y.size() != static_cast<std::size_t>(n)) {
    throw InputError("profile has " + std::to_string(y.size()) + " entries, expression has N=" +
                     std::to_string(n));
  }
  ComplexVector out(n);
  for (const auto& t : form.terms()) {
    Complex v = t.coefficient;
    for (int k = 0; k < n; ++k) {
      for (int e = 0; e < t.a[k]; ++e) v *= y[k];
      for (int e = 0; e < t.b[k]; ++e) v *= std::conj(y[k]);
    }
    for (int e = 0; e < t.p; ++e) v *= w.omega0;
    for (int e = 0; e < t.q; ++e) v *= w.omega1;
    out[t.component - 1] += v;
  }
  return out;
}

ComplexVector phi_quadrature(const CubicSystem& sys, std::span<const Complex> y,
                             const HyperbolaPoint& w, int nodes) {
  if (nodes < 8) throw InputError("phi_quadrature needs at least 8 nodes");
  check_dims(sys, y);
  return harmonic_quadrature(sys, y, w, 1, nodes);
}

ComplexVector fourier_mode(const CubicSystem& sys, std::span<const Complex> y,
                           const HyperbolaPoint& w, int n) {
  if (n < -8 || n > 8) throw InputError("fourier_mode: |n| must be at most 8");
  check_dims(sys, y);
  return harmonic_quadrature(sys, y, w, n + 1, kDefaultPhiNodes);
}

NonresonantModes nonresonant_modes(const CubicSystem& sys, std::span<const Complex> y,
                                   const HyperbolaPoint& w) {
  return {fourier_mode(sys, y, w, -2), fourier_mode(sys, y, w, 2), fourier_mode(sys, y, w, -4)};
}

NonresonantForms::NonresonantForms(const CubicSystem& sys)
    : h_minus2(harmonic_closed_form(sys, -1)),
      h_plus2(harmonic_closed_form(sys, 3)),
      h_minus4(harmonic_closed_form(sys, -3)) {}

std::string format_complex(Complex c) {
  return fmt::format("{}{}{}i", c.real(), c.imag() < 0 || std::signbit(c.imag()) ? "-" : "+",
                     std::abs(c.imag()));
}

Complex parse_complex(const std::string& text) {
  std::string t;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  }
  if (t.empty()) throw InputError("empty complex number");
  auto number = [&](const std::string& s) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || !std::isfinite(v)) throw InputError("malformed complex number '" + text + "'");
    return v;
  };
  const char last = t.back();
  if (last != 'i' && last != 'j') return {number(t), 0.0};
  t.pop_back();
  // split at the last sign that is not part of an exponent
  std::size_t split = std::string::npos;
  for (std::size_t k = t.size(); k-- > 1;) {
    if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  if (split == std::string::npos) return {0.0, number(t)};
  return {number(t.substr(0, split)), number(t.substr(split))};
}

ComplexVector parse_complex_list(const std::string& text) {
  ComplexVector out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    out.push_back(parse_complex(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string to_text(const HarmonicForm& form) {
  std::string out;
  for (const auto& t : form.terms()) {
    std::string mono;
    for (int k = 0; k < form.n(); ++k) {
      if (t.a[k] > 0) mono += fmt::format(" Y{}{}", k + 1, t.a[k] > 1 ? fmt::format("^{}", t.a[k]) : "");
    }
    for (int k = 0; k < form.n(); ++k) {
      if (t.b[k] > 0) {
        mono += fmt::format(" conj(Y{}){}", k + 1, t.b[k] > 1 ? fmt::format("^{}", t.b[k]) : "");
      }
    }
    if (t.p > 0) mono += fmt::format(" w0{}", t.p > 1 ? fmt::format("^{}", t.p) : "");
    if (t.q > 0) mono += fmt::format(" w1{}", t.q > 1 ? fmt::format("^{}", t.q) : "");
    out += fmt::format("[{}] ({}){}\n", t.component, format_complex(t.coefficient), mono);
  }
  return out;
}

nlohmann::json to_json(const HarmonicForm& form) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : form.terms()) {
    terms.push_back({{"component", t.component},
                     {"a", t.a},
                     {"b", t.b},
                     {"p", t.p},
                     {"q", t.q},
                     {"re", t.coefficient.real()},
                     {"im", t.coefficient.imag()}});
  }
  return {{"n", form.n()}, {"harmonic", form.harmonic()}, {"terms", terms}};
}

}  // namespace kgd
