#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace wnscale {

// Unit-constant scaling laws. Simulation is compared to these through
// fitted exponents only, never through absolute values.

/// n^(-1/2) in the plane, n^(-1/3) in space.
double law_unicast(double n, int dim);

/// 1/n: a common receiver splits its capacity over n incoming flows.
double law_receiver_bottleneck(double n);

/// min(1, B / (f n)): f n flows share B bottleneck nodes.
double law_topological_bottleneck(double n, double bridges, double f);

/// n^(-(1+g)/2) for clusters of size n^g.
double law_cluster(double n, double g);

/// n^(-1/2) (1-p)^(C sqrt n): end-to-end recovery over C sqrt n hops.
double law_e2e_erasure(double n, double p, double hop_constant);

/// (1-p) n^(-1/2): per-link recovery.
double law_hop_by_hop(double n, double p);

/// n^2 channel states per n simultaneous transmissions.
double csi_overhead_ratio(double n);

struct ScalingPoint {
  double n;
  double value;
};

struct ScalingSeries {
  std::vector<ScalingPoint> points;
  std::string label;
};

struct ExponentFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double standard_error = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of y on x: slope, intercept, slope standard error
/// and R^2. Needs at least 3 points with at least two distinct x.
ExponentFit fit_line(std::span<const double> x, std::span<const double> y);

/// OLS of log(value) on log(n).
ExponentFit fit_exponent(const ScalingSeries& series);

/// OLS of log(value) on n; the slope of (1-p)^H in H is log(1-p).
ExponentFit fit_log_linear(const ScalingSeries& series);

}  // namespace wnscale
