#pragma once

// Brute-force validators that share no code with the closed forms they check:
// quadrature convolution scores, central differences, a direct Voronoi scan
// and a few statistical tests.

#include <cstddef>
#include <functional>
#include <vector>

#include "mad/types.hpp"

namespace mad {

/// Axis-aligned trapezoid grid, d <= 2.
struct QuadratureGrid {
  Vec lower;
  Vec upper;
  std::vector<int> nodes;  // per axis, >= 64
  long long max_total_nodes = 16'000'000;
};

/// Grid of `nodes` points per axis on the box center +- half_width.
QuadratureGrid centered_grid(const Vec& center, double half_width, int nodes);

struct QuadratureResult {
  Vec score;
  /// |full grid - every-other-node grid|, a conservative error proxy.
  double error_estimate = 0.0;
};

using Density = std::function<double(const Vec&)>;

/// grad log (p0 * g_{sigma^2})(x) by trapezoid convolution.
QuadratureResult quadrature_score(const Density& p0, double sigma, const Vec& x, const QuadratureGrid& grid);

/// Density of sum_i w_i N(m_i, C_i), written out from scratch.
Density gaussian_mixture_density(const std::vector<double>& weights, const std::vector<Vec>& means,
                                 const std::vector<Mat>& covariances);

/// (f(a+h) - f(a-h)) / 2h, or its Richardson extrapolation with h/2.
Vec central_diff(const std::function<Vec(double)>& fn, double at, double h, bool richardson = true);
double central_diff_scalar(const std::function<double(double)>& fn, double at, double h, bool richardson = true);

struct VoronoiResult {
  std::vector<std::size_t> nearest;  // ascending
  Vec z;
};

/// Scans every atom; ties are distances within 1e-9 (1 + |x|) of the minimum.
VoronoiResult voronoi_brute(const std::vector<Vec>& atoms, const std::vector<double>& weights, const Vec& x);

/// Plain bisection for the root of a g^{2/p} + b g = t^2, to |f| < tol t^2.
double bisect_gamma(double a, double b, double p, double t, double tol = 1e-13);

// ---------------------------------------------------------------------------

double normal_cdf(double x, double mean = 0.0, double std = 1.0);

/// sup |F_n - F| for one-dimensional samples.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Asymptotic critical value; only alpha in {0.10, 0.05, 0.01} is tabulated.
double ks_critical_value(std::size_t n, double alpha = 0.01);

struct StatReport {
  std::size_t count = 0;
  Vec mean;
  Vec variance;
  std::vector<double> ks;  // per coordinate
  double ks_critical = 0.0;
};

/// Moments plus per-coordinate KS against independent N(ref_mean_k, ref_var_k) marginals.
StatReport stat_tests(const std::vector<Vec>& samples, const Vec& ref_mean, const Vec& ref_variance);

/// For each point, the mode within `radius` when exactly one qualifies, else -1.
std::vector<int> assign_basins(const std::vector<Vec>& points, const std::vector<Vec>& modes, double radius);

}  // namespace mad
