#include "kgd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "kgd/errors.hpp"
#include "kgd/kvtree.hpp"

namespace kgd {

namespace {

void check_p(double p) {
  if (std::isnan(p) || p < 2.0) throw InputError(fmt::format("p must satisfy 2 <= p <= inf, got {}", p));
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InputError("regressor is constant on the window");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

void check_window(std::pair<double, double> w) {
  if (!(w.first < w.second)) throw InputError("fit window needs t_lo < t_hi");
}

}  // namespace

NormColumn norm_column(const NormSeries& series, double p) {
  check_p(p);
  std::ptrdiff_t idx = -1;
  if (p != 2.0 && !std::isinf(p)) {
    const auto it = std::find(series.p_list.begin(), series.p_list.end(), p);
    if (it == series.p_list.end()) throw InputError(fmt::format("series has no L^{} column", p));
    idx = it - series.p_list.begin();
  }
  NormColumn c;
  c.t.reserve(series.rows.size());
  c.value.reserve(series.rows.size());
  for (const auto& r : series.rows) {
    c.t.push_back(r.t);
    if (p == 2.0) {
      c.value.push_back(r.l2);
    } else if (std::isinf(p)) {
      c.value.push_back(r.linf);
    } else {
      c.value.push_back(r.lp.at(static_cast<std::size_t>(idx)));
    }
  }
  return c;
}

DecayFit fit_decay(const NormColumn& column, double p, std::pair<double, double> window) {
  check_p(p);
  check_window(window);
  const double shift = 0.5 - (std::isinf(p) ? 0.0 : 1.0 / p);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < column.t.size(); ++i) {
    const double t = column.t[i];
    if (t < window.first || t > window.second) continue;
    if (!(column.value[i] > 0.0)) throw InputError(fmt::format("nonpositive norm at t={}", t));
    x.push_back(std::log(std::log(2.0 + t)));
    y.push_back(std::log(column.value[i]) + shift * std::log1p(t));
  }
  if (x.size() < 20) {
    throw InputError(fmt::format("fit window holds {} samples, at least 20 needed", x.size()));
  }
  const LineFit f = least_squares(x, y);
  DecayFit out;
  out.p = p;
  out.window = window;
  out.gamma = -f.slope;
  out.C = std::exp(f.intercept);
  out.residual_rms = f.rms;
  out.samples = static_cast<int>(x.size());
  return out;
}

DecayFit fit_decay(const NormSeries& series, double p, std::pair<double, double> window) {
  return fit_decay(norm_column(series, p), p, window);
}

std::pair<double, double> default_window(const NormSeries& series) {
  if (series.rows.empty()) throw InputError("empty series");
  const double tf = series.rows.back().t;
  return {tf / 10.0, tf};
}

PowerFit fit_power_law(const NormColumn& column, std::pair<double, double> window) {
  check_window(window);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < column.t.size(); ++i) {
    const double t = column.t[i];
    if (t < window.first || t > window.second) continue;
    if (!(column.value[i] > 0.0)) throw InputError(fmt::format("nonpositive norm at t={}", t));
    x.push_back(std::log1p(t));
    y.push_back(std::log(column.value[i]));
  }
  if (x.size() < 20) {
    throw InputError(fmt::format("fit window holds {} samples, at least 20 needed", x.size()));
  }
  const LineFit f = least_squares(x, y);
  return {-f.slope, std::exp(f.intercept), f.rms};
}

RatioSeries compare_runs(const NormSeries& a, const NormSeries& b, double p) {
  const NormColumn ca = norm_column(a, p);
  const NormColumn cb = norm_column(b, p);
  if (ca.t.empty() || cb.t.empty()) throw InputError("compare_runs: empty series");
  RatioSeries out;
  out.p = p;
  const double lo = cb.t.front(), hi = cb.t.back();
  std::size_t j = 0;
  for (std::size_t i = 0; i < ca.t.size(); ++i) {
    const double t = ca.t[i];
    if (t < lo || t > hi) continue;
    while (j + 1 < cb.t.size() && cb.t[j + 1] < t) ++j;
    double den;
    if (cb.t[j] == t || j + 1 == cb.t.size()) {
      den = cb.value[j];
    } else if (cb.t[j + 1] == t) {
      den = cb.value[j + 1];
    } else {
      const double s = (t - cb.t[j]) / (cb.t[j + 1] - cb.t[j]);
      den = (1.0 - s) * cb.value[j] + s * cb.value[j + 1];
    }
    if (den == 0.0) throw InputError(fmt::format("compare_runs: zero denominator at t={}", t));
    out.t.push_back(t);
    out.ratio.push_back(ca.value[i] / den);
  }
  if (out.t.empty()) throw InputError("compare_runs: time windows do not overlap");
  return out;
}

std::vector<double> decade_means(const RatioSeries& ratio) {
  std::vector<double> means;
  int current = 0;
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < ratio.t.size(); ++i) {
    if (ratio.t[i] < 1.0) continue;
    const int d = static_cast<int>(std::floor(std::log10(ratio.t[i])));
    if (count > 0 && d != current) {
      means.push_back(sum / count);
      sum = 0.0;
      count = 0;
    }
    current = d;
    sum += ratio.ratio[i];
    ++count;
  }
  if (count > 0) means.push_back(sum / count);
  return means;
}

NormSeries parse_norms_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("norms CSV is empty");
  std::vector<std::string> cols;
  {
    std::istringstream hs(line);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  const std::size_t fixed = 7;
  if (cols.size() < fixed || cols[0] != "t" || cols[1] != "L2" || cols[2] != "Linf") {
    throw InputError("norms CSV header not recognized");
  }
  NormSeries s;
  const std::size_t n_p = cols.size() - fixed;
  for (std::size_t k = 0; k < n_p; ++k) {
    const std::string& c = cols[3 + k];
    if (c.rfind("Lp_", 0) != 0) throw InputError("norms CSV header not recognized");
    s.p_list.push_back(p_from_string(c.substr(3)));
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError("bad number '" + cell + "'", line_no, 1);
      }
    }
    if (v.size() != cols.size()) throw ParseError("wrong column count", line_no, 1);
    NormRecord r;
    r.t = v[0];
    r.l2 = v[1];
    r.linf = v[2];
    r.lp.assign(v.begin() + 3, v.begin() + 3 + static_cast<std::ptrdiff_t>(n_p));
    r.linf_dtu = v[3 + n_p];
    r.linf_dxu = v[4 + n_p];
    r.energy = v[5 + n_p];
    r.cone_leak = v[6 + n_p];
    if (!s.rows.empty() && !(r.t > s.rows.back().t)) {
      throw ParseError("times must be strictly increasing", line_no, 1);
    }
    s.rows.push_back(std::move(r));
  }
  return s;
}

NormSeries read_norms_csv(const std::string& path) { return parse_norms_csv(read_text_file(path)); }

nlohmann::json p_to_json(double p) {
  if (std::isinf(p)) return "inf";
  return p;
}

double p_from_string(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return kInfP;
  try {
    std::size_t used = 0;
    const double p = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return p;
  } catch (const std::exception&) {
    throw InputError("bad p value '" + text + "'");
  }
}

nlohmann::json to_json(const DecayFit& fit) {
  return {{"label", fit.label},
          {"p", p_to_json(fit.p)},
          {"window", {fit.window.first, fit.window.second}},
          {"gamma", fit.gamma},
          {"C", fit.C},
          {"residual_rms", fit.residual_rms},
          {"samples", fit.samples}};
}

std::string ratio_csv(const RatioSeries& ratio) {
  std::string out = "t,ratio\n";
  for (std::size_t i = 0; i < ratio.t.size(); ++i) out += fmt::format("{},{}\n", ratio.t[i], ratio.ratio[i]);
  return out;
}

void export_report(const std::vector<DecayFit>& fits, const std::vector<RatioSeries>& ratios,
                   const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
  nlohmann::json report = {{"runs", nlohmann::json::array()}, {"comparisons", nlohmann::json::array()}};
  for (const auto& f : fits) report["runs"].push_back(to_json(f));
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const auto& r = ratios[i];
    const std::string csv_name = fmt::format("ratio_{}.csv", i);
    const auto means = decade_means(r);
    report["comparisons"].push_back({{"label", r.label},
                                     {"p", p_to_json(r.p)},
                                     {"samples", r.t.size()},
                                     {"decade_means", means},
                                     {"csv", csv_name}});
    std::ofstream csv(dir / csv_name, std::ios::binary | std::ios::trunc);
    if (!csv) throw InputError("cannot write " + (dir / csv_name).string());
    csv << ratio_csv(r);
    if (!csv) throw InputError("write failed for " + (dir / csv_name).string());
  }
  std::ofstream out(target, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write report '" + path + "'");
  out << report.dump(2) << '\n';
  if (!out) throw InputError("write failed for '" + path + "'");
}

}  // namespace kgd
