#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace kgd {

// Argument kinds of F(u, u_t, u_x), in canonical order.
enum class SlotKind { u = 0, ut = 1, ux = 2 };

struct Slot {
  SlotKind kind;
  int index;  // 1-based component index

  auto operator<=>(const Slot&) const = default;
};

const char* to_string(SlotKind kind);
SlotKind slot_kind_from_string(const std::string& name);

struct SlotPower {
  Slot slot;
  int power;

  auto operator<=>(const SlotPower&) const = default;
};

/// One term `coefficient * prod slot^power` of F_component.
/// Factors are sorted by slot and have positive powers summing to 3.
struct CubicMonomial {
  int component;  // 1-based
  std::vector<SlotPower> factors;
  double coefficient;

  /// The three slot occurrences, with repetition, in sorted order.
  std::array<Slot, 3> expanded() const;

  bool operator==(const CubicMonomial&) const = default;
};

/// The cubic homogeneous part of an N-component nonlinearity.
///
/// Terms are canonicalized on construction: factors merged and sorted,
/// duplicate monomials summed, zero coefficients dropped, and the term
/// list sorted by (component, factors).
class CubicSystem {
 public:
  CubicSystem(int n_components, std::vector<CubicMonomial> terms, std::string label = "");

  int n() const { return n_; }
  const std::vector<CubicMonomial>& terms() const { return terms_; }
  const std::string& label() const { return label_; }

  bool operator==(const CubicSystem& other) const {
    return n_ == other.n_ && terms_ == other.terms_ && label_ == other.label_;
  }

 private:
  int n_;
  std::vector<CubicMonomial> terms_;
  std::string label_;
};

/// A point (cosh z, sinh z) on the upper unit hyperbola.
struct HyperbolaPoint {
  double z;
  double omega0;
  double omega1;

  static HyperbolaPoint at(double z);
};

/// Evaluation form of a CubicSystem over a packed argument vector
/// [u_1..u_N, ut_1..ut_N, ux_1..ux_N]. Built once, reused pointwise.
class CompiledCubic {
 public:
  explicit CompiledCubic(const CubicSystem& sys);

  int n() const { return n_; }
  bool empty() const { return terms_.empty(); }
  bool depends_on(SlotKind kind) const { return uses_[static_cast<int>(kind)]; }

  /// out[j] = F_j(args); `args` has 3N entries, `out` has N.
  void eval(const double* args, double* out) const {
    for (int j = 0; j < n_; ++j) out[j] = 0.0;
    for (const auto& t : terms_) {
      out[t.component] += t.coefficient * args[t.f0] * args[t.f1] * args[t.f2];
    }
  }

 private:
  struct Term {
    int component;  // 0-based
    int f0, f1, f2;
    double coefficient;
  };
  int n_;
  std::vector<Term> terms_;
  std::array<bool, 3> uses_{};
};

/// F^cub(xi, eta, zeta) with slots (u,k)->xi_k, (ut,k)->eta_k, (ux,k)->zeta_k.
std::vector<double> eval_fcub(const CubicSystem& sys, std::span<const double> xi,
                              std::span<const double> eta, std::span<const double> zeta);

CubicSystem parse_system(const std::string& text);
CubicSystem system_from_json(const nlohmann::json& j);
nlohmann::json system_to_json(const CubicSystem& sys);

/// Canonical key-value tree rendering; parse_system(serialize_system(s)) == s.
std::string serialize_system(const CubicSystem& sys);

/// Named systems:
///   complex_cubic_dissipative(mu1, mu2)  real form of (Box+1)U = mu1|U|^2U - mu2|U_t|^2U_t
///   remark1                              F_j = -(u_1^2 + u_2^2) ut_j
///   single_u3                            F = u^3
///   single_ut3_dissipative               F = -(ut)^3
///   triangular_feed                      F_1 = 0, F_2 = u_1^3
CubicSystem builtin_system(const std::string& name, std::span<const double> params = {});

std::vector<std::string> builtin_names();

}  // namespace kgd
