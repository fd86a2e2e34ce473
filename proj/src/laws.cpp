#include "wnscale/laws.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace wnscale {

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("erasure probability must lie in [0, 1)");
}

void check_series(const ScalingSeries& series, bool positive_n) {
  if (series.points.size() < 3)
    throw std::invalid_argument("fit: need at least 3 points in series '" + series.label + "'");
  std::set<double> seen;
  for (const auto& p : series.points) {
    if (!(p.value > 0.0))
      throw std::invalid_argument("fit: nonpositive value in series '" + series.label + "'");
    if (positive_n && !(p.n > 0.0))
      throw std::invalid_argument("fit: nonpositive n in series '" + series.label + "'");
    if (!seen.insert(p.n).second)
      throw std::invalid_argument("fit: repeated n in series '" + series.label + "'");
  }
}

}  // namespace

double law_unicast(double n, int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("law_unicast: dim must be 2 or 3");
  return dim == 2 ? 1.0 / std::sqrt(n) : 1.0 / std::cbrt(n);
}

double law_receiver_bottleneck(double n) { return 1.0 / n; }

double law_topological_bottleneck(double n, double bridges, double f) {
  if (!(bridges >= 1.0) || !(f > 0.0 && f <= 1.0))
    throw std::invalid_argument("law_topological_bottleneck: need B >= 1 and 0 < f <= 1");
  return std::min(1.0, bridges / (f * n));
}

double law_cluster(double n, double g) {
  if (!(g >= 0.0 && g <= 1.0)) throw std::invalid_argument("law_cluster: g must lie in [0, 1]");
  // Limiting cases go through the same expressions as the laws they reduce to.
  if (g == 0.0) return law_unicast(n, 2);
  if (g == 1.0) return law_receiver_bottleneck(n);
  return std::pow(n, -(1.0 + g) / 2.0);
}

double law_e2e_erasure(double n, double p, double hop_constant) {
  check_probability(p);
  if (!(hop_constant > 0.0)) throw std::invalid_argument("law_e2e_erasure: C must be positive");
  if (p == 0.0) return law_unicast(n, 2);
  return law_unicast(n, 2) * std::exp(hop_constant * std::sqrt(n) * std::log1p(-p));
}

double law_hop_by_hop(double n, double p) {
  check_probability(p);
  return (1.0 - p) * law_unicast(n, 2);
}

double csi_overhead_ratio(double n) { return n * n / n; }

ExponentFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  const std::size_t m = x.size();
  if (m < 3) throw std::invalid_argument("fit_line: need at least 3 points");
  const double dm = static_cast<double>(m);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= dm;
  my /= dm;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_line: x values must not all coincide");
  ExponentFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = y[i] - (fit.intercept + fit.exponent * x[i]);
    sse += r * r;
  }
  fit.standard_error = std::sqrt(std::max(0.0, sse / (dm - 2.0) / sxx));
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  return fit;
}

ExponentFit fit_exponent(const ScalingSeries& series) {
  check_series(series, true);
  std::vector<double> x, y;
  for (const auto& p : series.points) {
    x.push_back(std::log(p.n));
    y.push_back(std::log(p.value));
  }
  return fit_line(x, y);
}

ExponentFit fit_log_linear(const ScalingSeries& series) {
  check_series(series, false);
  std::vector<double> x, y;
  for (const auto& p : series.points) {
    x.push_back(p.n);
    y.push_back(std::log(p.value));
  }
  return fit_line(x, y);
}

}  // namespace wnscale
