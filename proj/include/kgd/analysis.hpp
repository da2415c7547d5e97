#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgd/kg_solver.hpp"

namespace kgd {

inline constexpr double kInfP = std::numeric_limits<double>::infinity();

/// Sample times and one norm column of a NormSeries.
struct NormColumn {
  std::vector<double> t;
  std::vector<double> value;
};

/// p = 2 selects L2, p = inf selects Linf, anything else must be in
/// series.p_list.
NormColumn norm_column(const NormSeries& series, double p);

/// ln(|u|_p (1+t)^{1/2-1/p}) = ln C - gamma ln ln(2+t), least squares.
struct DecayFit {
  std::string label;
  double p = kInfP;
  std::pair<double, double> window{0.0, 0.0};
  double gamma = 0.0;
  double C = 0.0;
  double residual_rms = 0.0;
  int samples = 0;
};

/// Throws InputError for p < 2, a window with t_lo >= t_hi, fewer than 20
/// samples or a nonpositive norm inside the window.
DecayFit fit_decay(const NormSeries& series, double p, std::pair<double, double> window);
DecayFit fit_decay(const NormColumn& column, double p, std::pair<double, double> window);

/// Default window [t_final/10, t_final].
std::pair<double, double> default_window(const NormSeries& series);

/// Slope s of ln |u|_p = ln C - s ln(1+t) on the window.
struct PowerFit {
  double exponent = 0.0;
  double C = 0.0;
  double residual_rms = 0.0;
};

PowerFit fit_power_law(const NormColumn& column, std::pair<double, double> window);

struct RatioSeries {
  std::string label;
  double p = kInfP;
  std::vector<double> t;
  std::vector<double> ratio;
};

/// |u_a|_p / |u_b|_p on the sample times of a inside b's time range, with b
/// interpolated linearly in t.
RatioSeries compare_runs(const NormSeries& a, const NormSeries& b, double p);

/// Means of the ratio over [10^m, 10^{m+1}) for every decade of t >= 1
/// that holds samples, lowest decade first.
std::vector<double> decade_means(const RatioSeries& ratio);

/// Reads a norms CSV as written by CsvNormWriter.
NormSeries read_norms_csv(const std::string& path);
NormSeries parse_norms_csv(const std::string& text);

nlohmann::json to_json(const DecayFit& fit);
std::string ratio_csv(const RatioSeries& ratio);

/// Writes {runs: [...], comparisons: [...]} to path, plus ratio_<i>.csv per
/// comparison next to it. Entries keep the order given.
void export_report(const std::vector<DecayFit>& fits, const std::vector<RatioSeries>& ratios,
                   const std::string& path);

/// p as written in reports: a number, or "inf".
nlohmann::json p_to_json(double p);
double p_from_string(const std::string& text);

}  // namespace kgd
