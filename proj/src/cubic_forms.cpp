#include "kgd/cubic_forms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "kgd/errors.hpp"
#include "kgd/kvtree.hpp"

namespace kgd {

using nlohmann::json;

const char* to_string(SlotKind kind) {
  switch (kind) {
    case SlotKind::u: return "u";
    case SlotKind::ut: return "ut";
    case SlotKind::ux: return "ux";
  }
  return "?";
}

SlotKind slot_kind_from_string(const std::string& name) {
  if (name == "u") return SlotKind::u;
  if (name == "ut") return SlotKind::ut;
  if (name == "ux") return SlotKind::ux;
  throw InputError("unknown variable '" + name + "' (expected u, ut or ux)");
}

std::array<Slot, 3> CubicMonomial::expanded() const {
  std::array<Slot, 3> out{};
  int k = 0;
  for (const auto& f : factors) {
    for (int p = 0; p < f.power; ++p) out[k++] = f.slot;
  }
  return out;
}

CubicSystem::CubicSystem(int n_components, std::vector<CubicMonomial> terms, std::string label)
    : n_(n_components), label_(std::move(label)) {
  if (n_ <= 0) throw InputError("number of components must be positive");

  using Key = std::pair<int, std::vector<SlotPower>>;
  std::map<Key, double> merged;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    auto& term = terms[t];
    const std::string where = "term " + std::to_string(t + 1);
    if (term.component < 1 || term.component > n_) {
      throw InputError(where + ": component " + std::to_string(term.component) +
                       " outside 1.." + std::to_string(n_));
    }
    if (!std::isfinite(term.coefficient)) throw InputError(where + ": non-finite coefficient");
    std::map<Slot, int> powers;
    int degree = 0;
    for (const auto& f : term.factors) {
      if (f.slot.index < 1 || f.slot.index > n_) {
        throw InputError(where + ": variable index " + std::to_string(f.slot.index) +
                         " outside 1.." + std::to_string(n_));
      }
      if (f.power < 0) throw InputError(where + ": negative power");
      powers[f.slot] += f.power;
      degree += f.power;
    }
    if (degree != 3) {
      throw InputError(where + ": degree " + std::to_string(degree) + ", expected 3");
    }
    std::vector<SlotPower> factors;
    for (const auto& [slot, p] : powers) {
      if (p > 0) factors.push_back({slot, p});
    }
    merged[{term.component, std::move(factors)}] += term.coefficient;
  }

  for (auto& [key, coeff] : merged) {
    if (coeff == 0.0) continue;
    terms_.push_back({key.first, key.second, coeff});
  }
}

HyperbolaPoint HyperbolaPoint::at(double z) { return {z, std::cosh(z), std::sinh(z)}; }

CompiledCubic::CompiledCubic(const CubicSystem& sys) : n_(sys.n()) {
  auto flat = [n = n_](const Slot& s) { return static_cast<int>(s.kind) * n + (s.index - 1); };
  for (const auto& m : sys.terms()) {
    auto e = m.expanded();
    terms_.push_back({m.component - 1, flat(e[0]), flat(e[1]), flat(e[2]), m.coefficient});
    for (const auto& s : e) uses_[static_cast<int>(s.kind)] = true;
  }
}

std::vector<double> eval_fcub(const CubicSystem& sys, std::span<const double> xi,
                              std::span<const double> eta, std::span<const double> zeta) {
  const auto n = static_cast<std::size_t>(sys.n());
  if (xi.size() != n || eta.size() != n || zeta.size() != n) {
    throw InputError("eval_fcub: argument length does not match N=" + std::to_string(n));
  }
  std::vector<double> args;
  args.reserve(3 * n);
  args.insert(args.end(), xi.begin(), xi.end());
  args.insert(args.end(), eta.begin(), eta.end());
  args.insert(args.end(), zeta.begin(), zeta.end());
  std::vector<double> out(n);
  CompiledCubic(sys).eval(args.data(), out.data());
  return out;
}

namespace {

int require_int(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw InputError(where + ": missing '" + key + "'");
  if (!it->is_number_integer()) throw InputError(where + ": '" + key + "' must be an integer");
  return it->get<int>();
}

double require_number(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw InputError(where + ": missing '" + key + "'");
  if (!it->is_number()) throw InputError(where + ": '" + key + "' must be a number");
  return it->get<double>();
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  // Keep a decimal mark so the value re-parses as a real, not an integer.
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

CubicSystem system_from_json(const json& j) {
  if (!j.is_object()) throw InputError("system spec must be a key-value block");
  const int n = require_int(j, "n", "system");
  if (n <= 0) throw InputError("system: n must be positive");
  std::string label;
  if (auto it = j.find("label"); it != j.end()) {
    if (!it->is_string()) throw InputError("system: 'label' must be text");
    label = it->get<std::string>();
  }
  json terms = j.contains("term") ? as_list(j["term"]) : json::array();
  if (j.contains("terms")) {
    for (const auto& t : as_list(j["terms"])) terms.push_back(t);
  }
  std::vector<CubicMonomial> out;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const std::string where = "term " + std::to_string(t + 1);
    const json& tj = terms[t];
    if (!tj.is_object()) throw InputError(where + ": expected a block");
    CubicMonomial m;
    m.component = require_int(tj, "component", where);
    m.coefficient = require_number(tj, "coeff", where);
    json mono = tj.contains("monomial") ? as_list(tj["monomial"]) : json::array();
    for (const auto& f : mono) {
      if (!f.is_object()) throw InputError(where + ": monomial entries must be blocks");
      auto var = f.find("var");
      if (var == f.end() || !var->is_string()) throw InputError(where + ": missing 'var'");
      SlotPower sp{{slot_kind_from_string(var->get<std::string>()), require_int(f, "index", where)},
                   f.contains("power") ? require_int(f, "power", where) : 1};
      m.factors.push_back(sp);
    }
    out.push_back(std::move(m));
  }
  return CubicSystem(n, std::move(out), std::move(label));
}

CubicSystem parse_system(const std::string& text) {
  return system_from_json(parse_config_text(text));
}

json system_to_json(const CubicSystem& sys) {
  json terms = json::array();
  for (const auto& m : sys.terms()) {
    json mono = json::array();
    for (const auto& f : m.factors) {
      mono.push_back({{"var", to_string(f.slot.kind)}, {"index", f.slot.index}, {"power", f.power}});
    }
    terms.push_back({{"component", m.component}, {"coeff", m.coefficient}, {"monomial", mono}});
  }
  return {{"n", sys.n()}, {"label", sys.label()}, {"term", terms}};
}

std::string serialize_system(const CubicSystem& sys) {
  std::string out;
  out += "n = " + std::to_string(sys.n()) + "\n";
  out += "label = " + quote(sys.label()) + "\n";
  for (const auto& m : sys.terms()) {
    out += "term {\n";
    out += "  component = " + std::to_string(m.component) + "\n";
    out += "  coeff = " + format_double(m.coefficient) + "\n";
    for (const auto& f : m.factors) {
      out += "  monomial { var = ";
      out += to_string(f.slot.kind);
      out += " index = " + std::to_string(f.slot.index) + " power = " + std::to_string(f.power) +
             " }\n";
    }
    out += "}\n";
  }
  return out;
}

namespace {

CubicMonomial mono(int component, double coeff, std::initializer_list<SlotPower> factors) {
  return {component, std::vector<SlotPower>(factors), coeff};
}

void require_params(const std::string& name, std::span<const double> params, std::size_t n) {
  if (params.size() != n) {
    throw InputError("builtin '" + name + "' takes " + std::to_string(n) + " parameter(s), got " +
                     std::to_string(params.size()));
  }
}

}  // namespace

CubicSystem builtin_system(const std::string& name, std::span<const double> params) {
  using K = SlotKind;
  if (name == "complex_cubic_dissipative") {
    require_params(name, params, 2);
    const double mu1 = params[0], mu2 = params[1];
    std::vector<CubicMonomial> terms;
    for (int j = 1; j <= 2; ++j) {
      for (int k = 1; k <= 2; ++k) {
        // mu1 (u_k^2) u_j  and  -mu2 (ut_k^2) ut_j
        terms.push_back(mono(j, mu1, {{{K::u, k}, 2}, {{K::u, j}, 1}}));
        terms.push_back(mono(j, -mu2, {{{K::ut, k}, 2}, {{K::ut, j}, 1}}));
      }
    }
    return CubicSystem(2, std::move(terms), name);
  }
  if (name == "remark1") {
    require_params(name, params, 0);
    std::vector<CubicMonomial> terms;
    for (int j = 1; j <= 2; ++j) {
      for (int k = 1; k <= 2; ++k) {
        terms.push_back(mono(j, -1.0, {{{K::u, k}, 2}, {{K::ut, j}, 1}}));
      }
    }
    return CubicSystem(2, std::move(terms), name);
  }
  if (name == "single_u3") {
    require_params(name, params, 0);
    return CubicSystem(1, {mono(1, 1.0, {{{K::u, 1}, 3}})}, name);
  }
  if (name == "single_ut3_dissipative") {
    require_params(name, params, 0);
    return CubicSystem(1, {mono(1, -1.0, {{{K::ut, 1}, 3}})}, name);
  }
  if (name == "triangular_feed") {
    require_params(name, params, 0);
    return CubicSystem(2, {mono(2, 1.0, {{{K::u, 1}, 3}})}, name);
  }
  throw InputError("unknown builtin system '" + name + "'");
}

std::vector<std::string> builtin_names() {
  return {"complex_cubic_dissipative", "remark1", "single_u3", "single_ut3_dissipative",
          "triangular_feed"};
}

}  // namespace kgd
