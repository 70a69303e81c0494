#include "mad/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "mad/error.hpp"

namespace mad {

QuadratureGrid centered_grid(const Vec& center, double half_width, int nodes) {
  QuadratureGrid g;
  g.lower = center.array() - half_width;
  g.upper = center.array() + half_width;
  g.nodes.assign(static_cast<std::size_t>(center.size()), nodes);
  return g;
}

QuadratureResult quadrature_score(const Density& p0, double sigma, const Vec& x, const QuadratureGrid& grid) {
  const int d = static_cast<int>(x.size());
  if (d < 1 || d > 2) throw_bad_input("quadrature is limited to d <= 2", {{"dim", d}});
  if (!(sigma > 0.0)) throw_bad_input("quadrature needs sigma > 0", {{"sigma", sigma}});
  if (grid.lower.size() != d || grid.upper.size() != d || static_cast<int>(grid.nodes.size()) != d) {
    throw_bad_input("quadrature grid dimension mismatch");
  }
  long long total = 1;
  for (int k = 0; k < d; ++k) {
    if (grid.nodes[static_cast<std::size_t>(k)] < 64) throw_bad_input("quadrature needs >= 64 nodes per axis");
    if (!std::isfinite(grid.lower(k)) || !std::isfinite(grid.upper(k)) || !(grid.upper(k) > grid.lower(k))) {
      throw_bad_input("quadrature bounds must be finite and ordered");
    }
    total *= grid.nodes[static_cast<std::size_t>(k)];
  }
  if (total > grid.max_total_nodes) {
    throw_bad_input("quadrature cost cap exceeded", {{"nodes", total}, {"cap", grid.max_total_nodes}});
  }

  const int n0 = grid.nodes[0];
  const int n1 = d == 2 ? grid.nodes[1] : 1;
  const double h0 = (grid.upper(0) - grid.lower(0)) / (n0 - 1);
  const double h1 = d == 2 ? (grid.upper(1) - grid.lower(1)) / (n1 - 1) : 1.0;
  const double inv2s = 1.0 / (2.0 * sigma * sigma);

  // Sums over all nodes and over every other node (coarse grid, step 2h).
  // The kernel is left unnormalized since it cancels in the ratio.
  double mass = 0.0, mass_c = 0.0;
  Vec grad = Vec::Zero(d), grad_c = Vec::Zero(d);
  Vec y(d);
  for (int i = 0; i < n0; ++i) {
    const double wi = (i == 0 || i == n0 - 1) ? 0.5 : 1.0;
    const bool ci = (i % 2 == 0);
    const double wci = (i == 0 || i == n0 - 1 || (n0 % 2 == 0 && i == n0 - 2)) ? 0.5 : 1.0;
    y(0) = grid.lower(0) + i * h0;
    for (int j = 0; j < n1; ++j) {
      double wj = 1.0, wcj = 1.0;
      bool cj = true;
      if (d == 2) {
        wj = (j == 0 || j == n1 - 1) ? 0.5 : 1.0;
        cj = (j % 2 == 0);
        wcj = (j == 0 || j == n1 - 1 || (n1 % 2 == 0 && j == n1 - 2)) ? 0.5 : 1.0;
        y(1) = grid.lower(1) + j * h1;
      }
      const Vec diff = x - y;
      const double v = p0(y) * std::exp(-diff.squaredNorm() * inv2s);
      if (v == 0.0) continue;
      mass += wi * wj * v;
      grad -= wi * wj * v * diff;
      if (ci && cj) {
        mass_c += wci * wcj * v;
        grad_c -= wci * wcj * v * diff;
      }
    }
  }
  if (!(mass > 0.0)) throw_numerical("quadrature mass underflowed", {{"sigma", sigma}});
  QuadratureResult r;
  const double s2 = sigma * sigma;
  r.score = grad / (mass * s2);
  const Vec coarse = mass_c > 0.0 ? Vec(grad_c / (mass_c * s2)) : Vec(Vec::Constant(d, INFINITY));
  r.error_estimate = (r.score - coarse).norm();
  return r;
}

Density gaussian_mixture_density(const std::vector<double>& weights, const std::vector<Vec>& means,
                                 const std::vector<Mat>& covariances) {
  struct Part {
    double coeff;
    Vec mean;
    Eigen::LLT<Mat> llt;
  };
  auto parts = std::make_shared<std::vector<Part>>();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    Eigen::LLT<Mat> llt(covariances[i]);
    if (llt.info() != Eigen::Success) throw_bad_input("density needs positive definite covariances");
    const Mat l = llt.matrixL();
    const double det = l.diagonal().prod();
    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(means[i].size())) / det;
    parts->push_back({weights[i] * norm, means[i], llt});
  }
  return [parts](const Vec& y) {
    double total = 0.0;
    for (const auto& p : *parts) {
      const Vec z = p.llt.matrixL().solve(y - p.mean);
      total += p.coeff * std::exp(-0.5 * z.squaredNorm());
    }
    return total;
  };
}

Vec central_diff(const std::function<Vec(double)>& fn, double at, double h, bool richardson) {
  if (!(h > 0.0)) throw_bad_input("central difference needs h > 0");
  auto step = [&](double hh) {
    const Vec up = fn(at + hh);
    const Vec dn = fn(at - hh);
    if (!up.allFinite() || !dn.allFinite()) throw_numerical("non-finite value in central difference", {{"at", at}});
    return Vec((up - dn) / (2.0 * hh));
  };
  const Vec coarse = step(h);
  if (!richardson) return coarse;
  const Vec fine = step(0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

double central_diff_scalar(const std::function<double(double)>& fn, double at, double h, bool richardson) {
  return central_diff([&](double a) { return Vec::Constant(1, fn(a)); }, at, h, richardson)(0);
}

VoronoiResult voronoi_brute(const std::vector<Vec>& atoms, const std::vector<double>& weights, const Vec& x) {
  if (atoms.empty()) throw_bad_input("voronoi scan needs atoms");
  std::vector<double> dist(atoms.size());
  double best = INFINITY;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) acc += (x(k) - atoms[i](k)) * (x(k) - atoms[i](k));
    dist[i] = std::sqrt(acc);
    best = std::min(best, dist[i]);
  }
  const double tol = 1e-9 * (1.0 + x.norm());
  VoronoiResult r;
  r.z = Vec::Zero(static_cast<Eigen::Index>(atoms.size()));
  double mass = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (dist[i] <= best + tol) {
      r.nearest.push_back(i);
      mass += weights[i];
    }
  }
  for (std::size_t i : r.nearest) r.z(static_cast<Eigen::Index>(i)) = r.nearest.size() == 1 ? 1.0 : weights[i] / mass;
  return r;
}

double bisect_gamma(double a, double b, double p, double t, double tol) {
  auto f = [&](double g) { return a * std::pow(g, 2.0 / p) + b * g - t * t; };
  double lo = 0.0;
  double hi = 1.0;
  while (f(hi) < 0.0) hi *= 2.0;
  for (int i = 0; i < 2000; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = f(mid);
    if (std::abs(v) < tol * t * t) return mid;
    if (mid == lo || mid == hi) return mid;
    (v < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

double normal_cdf(double x, double mean, double std) {
  return 0.5 * std::erfc(-(x - mean) / (std * std::numbers::sqrt2));
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw_bad_input("KS statistic needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_critical_value(std::size_t n, double alpha) {
  double c = 0.0;
  if (alpha == 0.10) c = 1.2239;
  else if (alpha == 0.05) c = 1.3581;
  else if (alpha == 0.01) c = 1.6276;
  else throw_bad_input("KS critical value is tabulated for alpha in {0.10, 0.05, 0.01}", {{"alpha", alpha}});
  return c / std::sqrt(static_cast<double>(n));
}

StatReport stat_tests(const std::vector<Vec>& samples, const Vec& ref_mean, const Vec& ref_variance) {
  if (samples.size() < 100) throw_bad_input("stat tests need at least 100 samples", {{"count", samples.size()}});
  const Eigen::Index d = ref_mean.size();
  StatReport r;
  r.count = samples.size();
  r.mean = Vec::Zero(d);
  for (const auto& s : samples) r.mean += s;
  r.mean /= static_cast<double>(r.count);
  r.variance = Vec::Zero(d);
  for (const auto& s : samples) r.variance += (s - r.mean).cwiseAbs2();
  r.variance /= static_cast<double>(r.count - 1);
  r.ks_critical = ks_critical_value(r.count);
  for (Eigen::Index k = 0; k < d; ++k) {
    std::vector<double> col;
    col.reserve(r.count);
    for (const auto& s : samples) col.push_back(s(k));
    const double m = ref_mean(k);
    const double sd = std::sqrt(ref_variance(k));
    r.ks.push_back(ks_statistic(std::move(col), [&](double v) { return normal_cdf(v, m, sd); }));
  }
  return r;
}

std::vector<int> assign_basins(const std::vector<Vec>& points, const std::vector<Vec>& modes, double radius) {
  std::vector<int> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    int found = -1;
    int hits = 0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      if ((p - modes[i]).norm() < radius) {
        found = static_cast<int>(i);
        ++hits;
      }
    }
    out.push_back(hits == 1 ? found : -1);
  }
  return out;
}

}  // namespace mad
