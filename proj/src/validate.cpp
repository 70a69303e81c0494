#include "mad/validate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/QR>

#include "mad/error.hpp"
#include "mad/models.hpp"
#include "mad/oracle.hpp"
#include "mad/rng.hpp"
#include "mad/synthdata.hpp"
#include "mad/xscore.hpp"

namespace mad {

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : checks) {
    list.push_back({{"name", c.name},
                    {"category", c.category},
                    {"error", c.error},
                    {"tolerance", c.tolerance},
                    {"passed", c.passed},
                    {"detail", c.detail}});
  }
  return {{"schema_version", 1}, {"passed", passed()}, {"checks", list}};
}

namespace {

Mat random_rotation(CounterRng& rng, int d) {
  Mat g(d, d);
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r < d; ++r) g(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ() * Mat::Identity(d, d);
}

Mat random_spd(CounterRng& rng, int d, double lo, double hi) {
  const Mat q = random_rotation(rng, d);
  Vec eig(d);
  for (int k = 0; k < d; ++k) eig(k) = rng.uniform(lo, hi);
  Mat s = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

Vec random_vec(CounterRng& rng, int d, double box) {
  Vec v(d);
  for (int k = 0; k < d; ++k) v(k) = rng.uniform(-box, box);
  return v;
}

std::vector<double> random_weights(CounterRng& rng, int k) {
  std::vector<double> w(static_cast<std::size_t>(k));
  double total = 0.0;
  for (auto& x : w) total += (x = rng.uniform(0.2, 1.0));
  for (auto& x : w) x /= total;
  // Absorb rounding so the sum is 1 to within an ulp or two.
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) s += w[i];
  w.back() = 1.0 - s;
  return w;
}

GaussianMixture random_gm(CounterRng& rng, int d, int k, double box = 2.0) {
  const auto w = random_weights(rng, k);
  std::vector<GaussianComponent> comps;
  for (int i = 0; i < k; ++i) comps.push_back({w[static_cast<std::size_t>(i)], random_vec(rng, d, box), random_spd(rng, d, 0.2, 1.5)});
  return GaussianMixture(std::move(comps));
}

DiracMixture random_dirac(CounterRng& rng, int d, int k, double box = 3.0) {
  const auto w = random_weights(rng, k);
  std::vector<DiracAtom> atoms;
  for (int i = 0; i < k; ++i) atoms.push_back({w[static_cast<std::size_t>(i)], random_vec(rng, d, box)});
  return DiracMixture(std::move(atoms));
}

Density density_of(const GaussianMixture& gm) {
  std::vector<double> w;
  std::vector<Vec> m;
  std::vector<Mat> c;
  for (const auto& comp : gm.components()) {
    w.push_back(comp.weight);
    m.push_back(comp.mean);
    c.push_back(comp.covariance);
  }
  return gaussian_mixture_density(w, m, c);
}

double rel_err(const Vec& lib, const Vec& ref) { return (lib - ref).norm() / std::max(1.0, ref.norm()); }

class Suite {
 public:
  explicit Suite(const ValidationOptions& o) : opts_(o) {}

  Vec lib(const Vec& v) const { return (v.array() + opts_.perturbation).matrix(); }
  double lib(double v) const { return v + opts_.perturbation; }

  void add(std::string name, std::string category, double error, double tolerance,
           nlohmann::json detail = nlohmann::json::object()) {
    ValidationCheck c{std::move(name), std::move(category), error, tolerance, std::isfinite(error) && error <= tolerance,
                      std::move(detail)};
    report_.checks.push_back(std::move(c));
  }

  /// Runs a check body, recording any thrown error as a failure.
  void guarded(const std::string& name, const std::string& category, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(name, category, INFINITY, 0.0, {{"exception", e.what()}});
    }
  }

  ValidationReport take() { return std::move(report_); }
  std::uint64_t seed() const { return opts_.seed; }

 private:
  ValidationOptions opts_;
  ValidationReport report_;
};

void quadrature_checks(Suite& s) {
  s.guarded("quadrature.single_gaussian_1d", "quadrature", [&] {
    const GaussianMixture gm({{1.0, Vec::Constant(1, 0.3), Mat::Constant(1, 1, 0.7)}});
    const double sigma = 0.4;
    const Vec x = Vec::Constant(1, 1.1);
    const auto q = quadrature_score(density_of(gm), sigma, x, centered_grid(x, 12.0, 512));
    s.add("quadrature.single_gaussian_1d", "quadrature", rel_err(s.lib(gm_smoothed_score(gm, sigma, x)), q.score),
          1e-8, {{"quadrature_error_estimate", q.error_estimate}});
  });

  s.guarded("quadrature.single_gaussian_2d", "quadrature", [&] {
    Mat cov(2, 2);
    cov << 1.0, 0.3, 0.3, 0.5;
    Vec mean(2), x(2);
    mean << 0.2, -0.1;
    x << 0.7, 0.4;
    const GaussianMixture gm({{1.0, mean, cov}});
    const double sigma = 0.5;
    const auto q = quadrature_score(density_of(gm), sigma, x, centered_grid(x, 8.0, 512));
    s.add("quadrature.single_gaussian_2d", "quadrature", rel_err(s.lib(gm_smoothed_score(gm, sigma, x)), q.score),
          1e-8, {{"quadrature_error_estimate", q.error_estimate}});
  });

  const DatasetSpec fig1_spec;
  const Model fig1 = build_model(fig1_spec);
  const auto& fig1_gm = std::get<GaussianMixture>(std::get<ProductModel>(fig1).factors()[0]);
  const Density fig1_density = density_of(fig1_gm);
  auto fig1_compare = [&](double sigma, double x1) {
    Vec x(2);
    x << x1, 0.0;
    QuadratureGrid grid;
    grid.lower = Vec::Constant(1, -40.0 - 10.0 * sigma);
    grid.upper = Vec::Constant(1, 40.0 + 10.0 * sigma);
    grid.nodes = {40001};
    const auto q = quadrature_score(fig1_density, sigma, x.head(1), grid);
    const Vec full = s.lib(smoothed_score(fig1, sigma * sigma, x));
    // the Dirac factor contributes -x2 / sigma^2 = 0
    return std::max(rel_err(full.head(1), q.score), std::abs(full(1) - s.lib(0.0)));
  };

  s.guarded("quadrature.fig1_mixture_at_-20", "quadrature", [&] {
    s.add("quadrature.fig1_mixture_at_-20", "quadrature", fig1_compare(0.5, -20.0), 1e-6);
  });

  s.guarded("quadrature.fig1_mixture_random", "quadrature", [&] {
    CounterRng rng(s.seed(), 101);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double sigma = std::exp(rng.uniform(std::log(0.1), std::log(3.0)));
      worst = std::max(worst, fig1_compare(sigma, rng.uniform(-25.0, 25.0)));
    }
    s.add("quadrature.fig1_mixture_random", "quadrature", worst, 1e-6, {{"points", 20}});
  });

  s.guarded("quadrature.random_mixture_2d", "quadrature", [&] {
    CounterRng rng(s.seed(), 102);
    const GaussianMixture gm = random_gm(rng, 2, 3);
    const Density p0 = density_of(gm);
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double sigma = i % 2 == 0 ? 0.3 : 1.0;
      const Vec x = random_vec(rng, 2, 3.0);
      QuadratureGrid grid = centered_grid(Vec::Zero(2), 2.0 + 6.0 * std::sqrt(1.5) + 10.0 * sigma, 1024);
      // the grid must also cover x +- 10 sigma
      grid.lower = grid.lower.cwiseMin((x.array() - 10.0 * sigma).matrix());
      grid.upper = grid.upper.cwiseMax((x.array() + 10.0 * sigma).matrix());
      const auto q = quadrature_score(p0, sigma, x, grid);
      worst = std::max(worst, rel_err(s.lib(gm_smoothed_score(gm, sigma, x)), q.score));
    }
    s.add("quadrature.random_mixture_2d", "quadrature", worst, 1e-6, {{"points", 4}});
  });
}

void central_diff_checks(Suite& s) {
  s.guarded("central_diff.dirac_dgamma", "central_diff", [&] {
    const DiracMixture dm({{0.3, Vec::Constant(1, -1.0)}, {0.7, Vec::Constant(1, 1.0)}});
    const double gamma = 0.05;
    const Vec x = Vec::Constant(1, 0.5);
    const Vec fd = central_diff([&](double g) { return dirac_smoothed_score(dm, g, x); }, gamma, 1e-3 * gamma);
    const Vec jet = s.lib(dm.score_jet(gamma, x).dvariance);
    s.add("central_diff.dirac_dgamma", "central_diff", (jet - fd).norm() / fd.norm(), 1e-6);
  });

  s.guarded("central_diff.dirac_h_gamma", "central_diff", [&] {
    CounterRng rng(s.seed(), 201);
    double worst = 0.0;
    std::vector<DiracMixture> models;
    models.push_back(DiracMixture({{0.3, Vec::Constant(1, -1.0)}, {0.7, Vec::Constant(1, 1.0)}}));
    for (int i = 0; i < 5; ++i) models.push_back(random_dirac(rng, 2, 3));
    for (const auto& dm : models) {
      for (double gamma : {0.05, 0.3, 2.0}) {
        const Vec x = dm.dim() == 1 ? Vec(Vec::Constant(1, 0.5)) : random_vec(rng, dm.dim(), 3.0);
        const Vec s0 = dirac_smoothed_score(dm, gamma, x);
        const Vec ds = central_diff([&](double g) { return dirac_smoothed_score(dm, g, x); }, gamma, 1e-3 * gamma);
        const Vec ref = (1.0 + gamma) * s0 + gamma * ds;
        const Vec got = s.lib(dirac_h_gamma(dm, gamma, x));
        worst = std::max(worst, (got - ref).norm() / std::max(1e-3, ref.norm()));
      }
    }
    s.add("central_diff.dirac_h_gamma", "central_diff", worst, 1e-6, {{"cases", 18}});
  });

  s.guarded("central_diff.gm_dvariance", "central_diff", [&] {
    CounterRng rng(s.seed(), 202);
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const GaussianMixture gm = random_gm(rng, 2, 3);
      const Vec x = random_vec(rng, 2, 3.0);
      const double v = rng.uniform(0.1, 2.0);
      const Vec fd = central_diff([&](double s2) { return gm.score(s2, x); }, v, 1e-3 * v);
      worst = std::max(worst, (s.lib(gm.score_jet(v, x).dvariance) - fd).norm() / std::max(1e-3, fd.norm()));
    }
    s.add("central_diff.gm_dvariance", "central_diff", worst, 1e-6, {{"cases", 5}});
  });

  s.guarded("central_diff.fd_sigma_first_order", "central_diff", [&] {
    CounterRng rng(s.seed(), 203);
    const AnalyticOracle oracle(Model(random_gm(rng, 2, 3)));
    const double t = 0.7;
    const Vec x = random_vec(rng, 2, 2.0);
    const Vec ref = central_diff([&](double sg) { return oracle.evaluate(sg, x); }, t, 1e-3);
    const double e3 = (s.lib(fd_sigma_derivative(oracle, t, x, 1e-3)) - ref).norm();
    const double e4 = (s.lib(fd_sigma_derivative(oracle, t, x, 1e-4)) - ref).norm();
    // first order: the error drops by ~10x per decade of delta
    const double ratio = e4 / e3;
    s.add("central_diff.fd_sigma_first_order", "central_diff", std::abs(ratio - 0.1) / 0.1, 0.5,
          {{"error_delta_1e-3", e3}, {"error_delta_1e-4", e4}});
  });
}

void voronoi_checks(Suite& s) {
  s.guarded("voronoi.random_atoms", "voronoi", [&] {
    CounterRng rng(s.seed(), 301);
    const DiracMixture dm = random_dirac(rng, 3, 50);
    std::vector<Vec> locs;
    std::vector<double> w;
    for (const auto& a : dm.atoms()) {
      locs.push_back(a.location);
      w.push_back(a.weight);
    }
    int mismatched = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Vec x = random_vec(rng, 3, 4.0);
      const auto brute = voronoi_brute(locs, w, x);
      if (brute.nearest != dm.nearest_atoms(x)) ++mismatched;
      Vec ref = Vec::Zero(3);
      for (std::size_t k : brute.nearest) ref -= brute.z(static_cast<Eigen::Index>(k)) * (x - locs[k]);
      worst = std::max(worst, (s.lib(dirac_h0(dm, x)) - ref).norm());
    }
    s.add("voronoi.random_atoms", "voronoi", worst + mismatched, 1e-12,
          {{"points", 1000}, {"atoms", 50}, {"selection_mismatches", mismatched}});
  });

  s.guarded("voronoi.boundary_weights", "voronoi", [&] {
    const DiracMixture dm({{0.3, Vec::Constant(1, -1.0)}, {0.7, Vec::Constant(1, 1.0)}});
    const Vec x = Vec::Zero(1);
    const Vec z = s.lib(dm.voronoi_weights(x));
    const auto brute = voronoi_brute({Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)}, {0.3, 0.7}, x);
    const double err = std::max({(z - brute.z).norm(), std::abs(s.lib(dirac_h0(dm, x)(0)) - 0.4),
                                 std::abs(brute.z(0) - 0.3) + std::abs(brute.z(1) - 0.7)});
    s.add("voronoi.boundary_weights", "voronoi", err, 1e-15);
  });
}

void identity_checks(Suite& s) {
  s.guarded("identity.dirac_h_gamma_single_atom", "identity", [&] {
    CounterRng rng(s.seed(), 401);
    double worst = 0.0;
    for (int d : {1, 2, 8}) {
      for (int i = 0; i < 20; ++i) {
        const Vec mu = random_vec(rng, d, 5.0);
        const Vec x = random_vec(rng, d, 5.0);
        const DiracMixture dm({{1.0, mu}});
        for (double g : {1e-3, 0.1, 1.0, 10.0}) {
          worst = std::max(worst, (s.lib(dirac_h_gamma(dm, g, x)) + (x - mu)).norm());
        }
      }
    }
    s.add("identity.dirac_h_gamma_single_atom", "identity", worst, 1e-12);
  });

  s.guarded("identity.h_gamma_operator_vs_dirac_closed_form", "identity", [&] {
    CounterRng rng(s.seed(), 402);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const DiracMixture dm = random_dirac(rng, 2, 4);
      const AnalyticOracle oracle{Model(dm)};
      const Vec x = random_vec(rng, 2, 3.0);
      for (double g : {0.05, 0.5, 3.0}) {
        const Vec ref = dirac_h_gamma(dm, g, x);
        const Vec got = s.lib(h_gamma(oracle, 0.0, g, x, DerivativeMode::kAnalyticIfAvailable));
        worst = std::max(worst, (got - ref).norm() / std::max(1.0, ref.norm()));
      }
    }
    s.add("identity.h_gamma_operator_vs_dirac_closed_form", "identity", worst, 1e-8);
  });

  s.guarded("identity.semigroup", "identity", [&] {
    CounterRng rng(s.seed(), 403);
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const Model gm = random_gm(rng, 2, 3);
      const Model dm = random_dirac(rng, 2, 3);
      for (const Model* m : {&gm, &dm}) {
        const double s1 = rng.uniform(0.1, 1.0);
        const double s2 = rng.uniform(0.1, 1.0);
        const Vec x = random_vec(rng, 2, 3.0);
        const Vec twice = smoothed_score(smoothed_model(*m, s1), s2, x);
        worst = std::max(worst, rel_err(s.lib(smoothed_score(*m, s1 + s2, x)), twice));
      }
    }
    s.add("identity.semigroup", "identity", worst, 1e-10);
  });

  s.guarded("identity.translation", "identity", [&] {
    CounterRng rng(s.seed(), 404);
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const Model gm = random_gm(rng, 2, 3);
      const Vec shift = random_vec(rng, 2, 1.0);
      const Vec x = random_vec(rng, 2, 2.0);
      const Vec a = smoothed_score(gm, 0.5, x);
      const Vec b = smoothed_score(translated_model(gm, shift), 0.5, x + shift);
      worst = std::max(worst, rel_err(s.lib(b), a));
    }
    s.add("identity.translation", "identity", worst, 1e-12);
  });

  s.guarded("identity.product_vs_block_mixture", "identity", [&] {
    CounterRng rng(s.seed(), 405);
    const GaussianMixture a = random_gm(rng, 1, 1);
    const GaussianMixture b = random_gm(rng, 2, 1);
    Mat cov = Mat::Zero(3, 3);
    cov.topLeftCorner(1, 1) = a.components()[0].covariance;
    cov.bottomRightCorner(2, 2) = b.components()[0].covariance;
    Vec mean(3);
    mean << a.components()[0].mean, b.components()[0].mean;
    const GaussianMixture joint({{1.0, mean, cov}});
    const ProductModel prod({Factor(a), Factor(b)});
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const Vec x = random_vec(rng, 3, 3.0);
      const double v = rng.uniform(0.0, 2.0);
      worst = std::max(worst, rel_err(s.lib(product_score(prod, ScoreRequest::smoothed_variance(v), x)), joint.score(v, x)));
    }
    s.add("identity.product_vs_block_mixture", "identity", worst, 1e-10);
  });

  s.guarded("identity.solve_gamma_vs_bisection", "identity", [&] {
    double worst = 0.0;
    const double cases[][4] = {{2.5, 10.0, 8.0, 1.0}, {1.0, 1.0, 1.0, 0.5}, {1.0, 1.0, 2.0, 1.0},
                               {2.0, 30.0, 2.0, 80.0}, {1.0, 1.1, 1.3, 0.002}, {0.5, 20.0, 8.0, 3.0}};
    for (const auto& c : cases) {
      MadParams p;
      p.a = c[0];
      p.b = c[1];
      p.p = c[2];
      const double ref = bisect_gamma(c[0], c[1], c[2], c[3]);
      worst = std::max(worst, std::abs(s.lib(solve_gamma(p, c[3])) - ref) / std::max(1.0, ref));
    }
    s.add("identity.solve_gamma_vs_bisection", "identity", worst, 1e-12);
  });
}

void limit_checks(Suite& s) {
  s.guarded("limit.gm_h_gamma_to_score", "limit", [&] {
    CounterRng rng(s.seed(), 501);
    double worst = 0.0;  // max over cases of (relative error) / (10 gamma)
    for (int i = 0; i < 5; ++i) {
      const GaussianMixture gm = random_gm(rng, 2, 3);
      const AnalyticOracle oracle{Model(gm)};
      const Vec x = random_vec(rng, 2, 3.0);
      const Vec score = gm.score(0.0, x);
      for (double g : {1e-2, 1e-3, 1e-4}) {
        const Vec h = s.lib(h_gamma(oracle, 0.0, g, x, DerivativeMode::kAnalyticIfAvailable));
        worst = std::max(worst, (h - score).norm() / std::max(1e-12, score.norm()) / (10.0 * g));
      }
    }
    s.add("limit.gm_h_gamma_to_score", "limit", worst, 1.0, {{"note", "error measured in units of 10 gamma"}});
  });

  s.guarded("limit.radial_discretization", "limit", [&] {
    CounterRng rng(s.seed(), 502);
    const std::vector<Vec> centers = {Vec::Zero(2), random_vec(rng, 2, 20.0)};
    const RadialGaussianMixture coarse(centers, 10.0, 2.5, 256);
    const RadialGaussianMixture fine(centers, 10.0, 2.5, 512);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vec x = random_vec(rng, 2, 25.0);
      const Vec a = s.lib(gm_smoothed_score(coarse.mixture(), 0.5, x));
      const Vec b = gm_smoothed_score(fine.mixture(), 0.5, x);
      worst = std::max(worst, rel_err(a, b));
    }
    s.add("limit.radial_discretization", "limit", worst, 1e-4, {{"points", 100}});
  });
}

void statistical_checks(Suite& s) {
  s.guarded("statistical.ks_self_consistency", "statistical", [&] {
    int below = 0;
    constexpr int runs = 100;
    constexpr int n = 1000;
    for (int r = 0; r < runs; ++r) {
      CounterRng rng(s.seed() + static_cast<std::uint64_t>(r), 601);
      std::vector<double> xs(n);
      for (auto& v : xs) v = rng.normal();
      const double d = ks_statistic(xs, [](double v) { return normal_cdf(v); });
      if (s.lib(d) < ks_critical_value(n)) ++below;
    }
    const double frac = static_cast<double>(below) / runs;
    s.add("statistical.ks_self_consistency", "statistical", 0.95 - frac, 0.0, {{"fraction_below_critical", frac}});
  });
}

}  // namespace

ValidationReport run_validation(const ValidationOptions& options) {
  Suite s(options);
  quadrature_checks(s);
  central_diff_checks(s);
  voronoi_checks(s);
  identity_checks(s);
  limit_checks(s);
  statistical_checks(s);
  return s.take();
}

}  // namespace mad
