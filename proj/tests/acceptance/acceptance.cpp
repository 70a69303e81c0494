// Acceptance harness: one PASS/FAIL line per criterion.
//   acceptance            run all twelve
//   acceptance --only N   run criterion N

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "mad/analysis.hpp"
#include "mad/metrics.hpp"
#include "mad/models.hpp"
#include "mad/nnscore.hpp"
#include "mad/oracle.hpp"
#include "mad/rng.hpp"
#include "mad/sampler.hpp"
#include "mad/synthdata.hpp"
#include "mad/validate.hpp"
#include "mad/xscore.hpp"

using namespace mad;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
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
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) s += w[i];
  w.back() = 1.0 - s;
  return w;
}

Mat random_spd(CounterRng& rng, int d, double lo, double hi) {
  Mat g(d, d);
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r < d; ++r) g(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  const Mat q = qr.householderQ() * Mat::Identity(d, d);
  Vec eig(d);
  for (int k = 0; k < d; ++k) eig(k) = rng.uniform(lo, hi);
  const Mat s = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

SamplerOptions analytic_options() {
  SamplerOptions o;
  o.derivative = DerivativeMode::kAnalyticIfAvailable;
  o.record_scores = false;
  return o;
}

std::vector<Vec> run_batch(const ScoreOracle& oracle, const TimeSchedule& schedule, SamplerMode mode,
                           const MadParams& params, int count, std::uint64_t seed, const SamplerOptions& options) {
  BatchRequest r;
  r.mode = mode;
  r.params = params;
  r.base_seed = seed;
  r.count = count;
  r.options = options;
  return endpoints(sample_batch(oracle, schedule, r));
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  CounterRng rng(1, 1);
  double worst_closed = 0.0;
  double worst_operator = 0.0;
  for (int d : {1, 2, 8}) {
    for (int i = 0; i < 100; ++i) {
      const Vec mu = random_vec(rng, d, 5.0);
      const Vec x = random_vec(rng, d, 5.0);
      const DiracMixture dm({{1.0, mu}});
      const auto oracle = make_dirac_oracle(mu);
      for (double g : {1e-3, 0.1, 1.0, 10.0}) {
        worst_closed = std::max(worst_closed, (dirac_h_gamma(dm, g, x) + (x - mu)).norm());
        // the operator route cancels terms of size |x - mu| / g, so it is judged relative to that
        const Vec h = h_gamma(*oracle, 0.0, g, x, DerivativeMode::kAnalyticIfAvailable);
        worst_operator = std::max(worst_operator, (h + (x - mu)).norm() / ((1.0 + 1.0 / g) * (x - mu).norm()));
      }
    }
  }
  const bool ok = worst_closed <= 1e-12 && worst_operator <= 1e-12;
  return {ok, fmt("max |H_g + (x-mu)|: closed form %.2e (tol 1e-12); operator route relative to |x-mu|(1+1/g) %.2e (tol 1e-12)", worst_closed, worst_operator)};
}

Outcome criterion2() {
  CounterRng rng(2, 1);
  int monotone_fail = 0, monotone_fail_far = 0, interior = 0, margin_points = 0, margin_fail = 0, boundary = 0, boundary_fail = 0;
  double worst_margin_err = 0.0;
  for (int m = 0; m < 20; ++m) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int k = 2 + static_cast<int>(rng.below(9));
    const auto w = random_weights(rng, k);
    std::vector<DiracAtom> atoms;
    for (int i = 0; i < k; ++i) atoms.push_back({w[static_cast<std::size_t>(i)], random_vec(rng, d, 4.0)});
    const DiracMixture dm(atoms);

    for (int p = 0; p < 50; ++p) {
      const Vec x = random_vec(rng, d, 5.0);
      // distance from x to the boundary of its Voronoi cell
      const auto near = dm.nearest_atoms(x);
      if (near.size() != 1) continue;
      const Vec& mi = atoms[near[0]].location;
      double margin = INFINITY;
      for (int j = 0; j < k; ++j) {
        if (static_cast<std::size_t>(j) == near[0]) continue;
        const Vec& mj = atoms[static_cast<std::size_t>(j)].location;
        margin = std::min(margin, ((x - mj).squaredNorm() - (x - mi).squaredNorm()) / (2.0 * (mi - mj).norm()));
      }
      ++interior;
      const Vec h0 = dirac_h0(dm, x);
      double prev = INFINITY;
      double last = 0.0;
      for (double g : {1e-1, 1e-2, 1e-3}) {
        const double e = (dirac_h_gamma(dm, g, x) - h0).norm();
        if (e > prev) {
          ++monotone_fail;
          if (margin > 0.5) ++monotone_fail_far;
        }
        prev = last = e;
      }
      if (margin > 0.5) {
        ++margin_points;
        worst_margin_err = std::max(worst_margin_err, last);
        if (!(last < 1e-4)) ++margin_fail;
      }
    }

    // boundary points: midpoints between atom pairs whose shared face contains them
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        const Vec x = 0.5 * (atoms[static_cast<std::size_t>(i)].location + atoms[static_cast<std::size_t>(j)].location);
        std::vector<Vec> locs;
        std::vector<double> ws;
        for (const auto& a : atoms) {
          locs.push_back(a.location);
          ws.push_back(a.weight);
        }
        const auto brute = voronoi_brute(locs, ws, x);
        if (brute.nearest != std::vector<std::size_t>{static_cast<std::size_t>(i), static_cast<std::size_t>(j)}) continue;
        ++boundary;
        const Vec z = dm.voronoi_weights(x);
        const double ci = ws[static_cast<std::size_t>(i)], cj = ws[static_cast<std::size_t>(j)];
        if (z(i) != ci / (ci + cj) || z(j) != cj / (ci + cj) || std::abs(z.sum() - 1.0) > 1e-15) ++boundary_fail;
      }
    }
  }
  const bool ok = monotone_fail == 0 && margin_fail == 0 && boundary_fail == 0 && margin_points > 0 && boundary > 0;
  return {ok, fmt("%d interior points (%d non-monotone); %d with margin > 0.5 (%d non-monotone), max err at 1e-3 = "
                  "%.2e (%d >= 1e-4); %d boundary points (%d z mismatches)",
                  interior, monotone_fail, margin_points, monotone_fail_far, worst_margin_err, margin_fail, boundary, boundary_fail)};
}

Outcome criterion3() {
  CounterRng rng(3, 1);
  double worst_ratio = 0.0;
  double worst_s = 0.0;
  int points = 0;
  int over = 0;
  for (int m = 0; m < 10; ++m) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int k = 1 + static_cast<int>(rng.below(4));
    const auto w = random_weights(rng, k);
    std::vector<GaussianComponent> comps;
    for (int i = 0; i < k; ++i) comps.push_back({w[static_cast<std::size_t>(i)], random_vec(rng, d, 2.0), random_spd(rng, d, 0.3, 2.0)});
    const GaussianMixture gm(comps);
    const AnalyticOracle oracle{Model(gm)};
    for (int p = 0; p < 100; ++p) {
      const Vec x = random_vec(rng, d, 4.0);
      const Vec s = gm.score(0.0, x);
      ++points;
      for (double g : {1e-2, 1e-3, 1e-4}) {
        const Vec h = h_gamma(oracle, 0.0, g, x, DerivativeMode::kAnalyticIfAvailable);
        const double rr = (h - s).norm() / s.norm() / g;
        if (rr >= 10.0) ++over;
        if (rr > worst_ratio) {
          worst_ratio = rr;
          worst_s = s.norm();
        }
      }
    }
  }
  return {worst_ratio < 10.0, fmt("%d points x 3 gammas; max |H_g - S| / (|S| g) = %.3f at |S| = %.2e (need < 10); "
                                  "%d evaluations over",
                                  points, worst_ratio, worst_s, over)};
}

Outcome criterion4() {
  const TimeSchedule schedule = TimeSchedule::edm(40, 0.002, 80.0, 7.0);
  double worst = 0.0;
  int runs = 0;
  CounterRng rng(4, 1);
  std::vector<Vec> mus;
  for (int s = 0; s < 20; ++s) mus.push_back(random_vec(rng, 2, 3.0));
  for (double a : {0.5, 1.0, 2.0}) {
    for (double b : {1.0, 5.0, 20.0}) {
      for (double p : {1.3, 2.0, 8.0}) {
        MadParams params;
        params.a = a;
        params.b = b;
        params.p = p;
        for (int s = 0; s < 20; ++s) {
          const auto oracle = make_dirac_oracle(mus[static_cast<std::size_t>(s)]);
          const auto mad = sample_mad(*oracle, schedule, params, static_cast<std::uint64_t>(s), analytic_options());
          const auto std_ = sample_standard(*oracle, schedule, static_cast<std::uint64_t>(s));
          for (std::size_t i = 0; i < mad.iterates.size(); ++i) {
            worst = std::max(worst, (mad.iterates[i] - std_.iterates[i]).cwiseAbs().maxCoeff());
          }
          ++runs;
        }
      }
    }
  }
  return {worst <= 1e-12, fmt("%d trajectory pairs; max per-step |x_mad - x_std| = %.2e (tol 1e-12)", runs, worst)};
}

Outcome criterion5() {
  std::vector<TimeSchedule> schedules = {TimeSchedule::edm(40, 0.002, 80.0, 7.0), TimeSchedule::edm(18, 0.002, 80.0, 7.0),
                                         TimeSchedule::edm(10, 0.1, 10.0, 1.0)};
  {
    CounterRng rng(5, 2);
    std::vector<double> t = {50.0};
    while (t.back() > 0.01) t.push_back(t.back() * rng.uniform(0.3, 0.9));
    t.push_back(0.0);
    schedules.push_back(TimeSchedule::from_times(t));
  }
  CounterRng rng(5, 1);
  MadParams params;
  int violations = 0, checks = 0;
  double worst_slack = -INFINITY;
  for (const auto& sched : schedules) {
    const double delta = sched.min_relative_decrement();
    const int last = sched.steps() - 1;  // contraction holds through x_{N-1}
    for (int s = 0; s < 10; ++s) {
      const Vec mu = random_vec(rng, 3, 3.0);
      const auto oracle = make_dirac_oracle(mu);
      for (int mode = 0; mode < 2; ++mode) {
        const auto traj = mode == 0 ? sample_standard(*oracle, sched, static_cast<std::uint64_t>(s))
                                    : sample_mad(*oracle, sched, params, static_cast<std::uint64_t>(s), analytic_options());
        for (int i = 0; i <= last; ++i) {
          const double base = (traj.iterates[static_cast<std::size_t>(i)] - mu).norm();
          for (int k = 1; i + k <= last; ++k) {
            const double lhs = (traj.iterates[static_cast<std::size_t>(i + k)] - mu).norm();
            const double rhs = std::pow(1.0 - delta, k) * base + 1e-10;
            worst_slack = std::max(worst_slack, lhs - rhs);
            ++checks;
            if (lhs > rhs) ++violations;
          }
        }
      }
    }
  }
  return {violations == 0, fmt("%d (i, k) pairs over %zu schedules; %d violations; max lhs - rhs = %.2e", checks,
                               schedules.size(), violations, worst_slack)};
}

Outcome criterion6() {
  const Model model = build_model(DatasetSpec{});
  const AnalyticOracle oracle(model);
  const TimeSchedule schedule = TimeSchedule::edm(40, 0.002, 80.0, 7.0);
  MadParams params;  // a = b = p = 1
  constexpr int n = 1024;
  const auto mad = run_batch(oracle, schedule, SamplerMode::kMad, params, n, 600, analytic_options());
  const auto std_ = run_batch(oracle, schedule, SamplerMode::kStandard, params, n, 600, analytic_options());
  const auto modes = model_modes(model);
  const auto bm = basin_stats(mad, modes);
  const auto bs = basin_stats(std_, modes);
  double max_x2 = 0.0;
  for (const auto& x : mad) max_x2 = std::max(max_x2, std::abs(x(1)));
  const double s02 = bm[0].moments.std(0), s05 = bm[1].moments.std(0);
  const double ratio4 = bm[4].moments.std(0) / bs[4].moments.std(0);
  std::string per;
  for (std::size_t i = 0; i < bm.size(); ++i) {
    per += fmt(" %.4f/%.4f", bm[i].moments.std(0), bs[i].moments.std(0));
  }
  const bool ok = s02 < 0.05 && s05 < 0.05 && ratio4 >= 0.6 && max_x2 < 1e-3 && bm[0].moments.count > 1 &&
                  bm[1].moments.count > 1;
  return {ok, fmt("%d seeds; MAD std v=0.2 %.4f, v=0.5 %.4f (need < 0.05); v=4 MAD/std ratio %.3f (need >= 0.6); "
                  "max |x2| %.1e; per-basin MAD/standard std:%s",
                  n, s02, s05, ratio4, max_x2, per.c_str())};
}

Outcome criterion7() {
  DatasetSpec spec;
  spec.kind = DatasetKind::kFig2aTilted;
  spec.seed = 7;
  const Model model = build_model(spec);
  const auto& gm = std::get<GaussianMixture>(model);
  const AnalyticOracle oracle(model);
  const TimeSchedule schedule = TimeSchedule::edm(40, 0.002, 80.0, 7.0);
  MadParams params;
  params.p = 1.3;
  params.a = 1.0;
  params.b = 1.1;
  constexpr int n = 2048;
  const auto mad = run_batch(oracle, schedule, SamplerMode::kMad, params, n, 700, analytic_options());
  const auto std_ = run_batch(oracle, schedule, SamplerMode::kStandard, params, n, 700, analytic_options());
  const AxisStats am = axis_stats(gm, mad);
  const AxisStats as = axis_stats(gm, std_);
  const double off = am.off_axis_ms / as.off_axis_ms;
  const double along = am.along_axis_ms / as.along_axis_ms;
  const bool ok = off < 0.25 && along >= 0.5 && along <= 1.5;
  return {ok, fmt("%d seeds; off-axis MS ratio %.4f (need < 0.25); along-axis MS ratio %.3f (need in [0.5, 1.5]); "
                  "baseline off/along MS %.4f/%.4f",
                  n, off, along, as.off_axis_ms, as.along_axis_ms)};
}

Outcome criterion8() {
  DatasetSpec spec;
  spec.kind = DatasetKind::kFig2bRadial;
  spec.seed = 8;
  const Model model = build_model(spec);
  const auto& radial = std::get<RadialGaussianMixture>(model);
  const AnalyticOracle oracle(model);
  const TimeSchedule schedule = TimeSchedule::edm(40, 0.002, 80.0, 7.0);
  MadParams params;
  params.p = 2.0;
  params.a = 2.0;
  params.b = 30.0;
  constexpr int n = 1024;
  const auto mad = run_batch(oracle, schedule, SamplerMode::kMad, params, n, 800, analytic_options());
  const auto std_ = run_batch(oracle, schedule, SamplerMode::kStandard, params, n, 800, analytic_options());
  const double rm = ring_rms(radial, mad);
  const double rs = ring_rms(radial, std_);
  return {rm < 0.5 * rs, fmt("%d seeds; ring RMS MAD %.4f vs standard %.4f, ratio %.3f (need < 0.5)", n, rm, rs, rm / rs)};
}

Outcome criterion9() {
  const Model model = GaussianMixture({{1.0, Vec::Zero(2), Mat::Identity(2, 2)}});
  const AnalyticOracle oracle(model);
  const TimeSchedule schedule = TimeSchedule::edm(64, 0.002, 80.0, 7.0);
  constexpr int n = 4096;
  SamplerOptions o;
  o.record_scores = false;
  const auto pts = run_batch(oracle, schedule, SamplerMode::kStandard, MadParams{}, n, 900, o);
  const StatReport r = stat_tests(pts, Vec::Zero(2), Vec::Ones(2));
  const double mean_tol = 3.0 / std::sqrt(static_cast<double>(n));
  bool ok = true;
  std::string per;
  for (int k = 0; k < 2; ++k) {
    ok = ok && std::abs(r.mean(k)) < mean_tol && std::abs(r.variance(k) - 1.0) < 0.05 && r.ks[static_cast<std::size_t>(k)] < r.ks_critical;
    per += fmt(" x%d: mean %.4f var %.4f KS %.4f;", k, r.mean(k), r.variance(k), r.ks[static_cast<std::size_t>(k)]);
  }
  return {ok, fmt("%d seeds, 64 steps;%s mean tol %.4f, KS critical %.4f", n, per.c_str(), mean_tol, r.ks_critical)};
}

Outcome criterion10() {
  std::string detail;
  bool all_ok = true;
  for (int dim : {2, 8}) {
    DatasetSpec spec;
    spec.kind = DatasetKind::kManifoldNoisy;
    spec.manifold = ManifoldKind::kLine;
    spec.ambient_dim = dim;
    spec.noise_std = 0.1;
    spec.count = 20000;
    spec.seed = 1000 + static_cast<std::uint64_t>(dim);
    const auto data = sample_dataset(spec);
    const ReferenceSet clean = manifold_reference(spec);
    const double data_rms = reference_rms(clean, data);

    TrainConfig cfg;
    cfg.iterations = 6000;
    cfg.batch_size = 256;
    cfg.seed = 10 + static_cast<std::uint64_t>(dim);
    const TrainResult trained = train_denoiser(cfg, data);
    const DenoiserOracle oracle(trained.net);
    const TimeSchedule schedule = TimeSchedule::edm(40, 0.002, 80.0, 7.0);
    SamplerOptions o;
    o.record_scores = false;
    constexpr int n = 512;

    const auto std_ = run_batch(oracle, schedule, SamplerMode::kStandard, MadParams{}, n, 1100, o);
    const double std_rms = reference_rms(clean, std_);
    double best = INFINITY;
    std::string best_cell = "none";
    int failed = 0;
    for (double a : {0.5, 1.0, 2.0}) {
      for (double b : {1.0, 5.0, 20.0}) {
        for (double p : {1.3, 2.0, 8.0}) {
          MadParams params;
          params.a = a;
          params.b = b;
          params.p = p;
          params.delta = 1e-3;
          try {
            const double rms = reference_rms(clean, run_batch(oracle, schedule, SamplerMode::kMad, params, n, 1100, o));
            if (rms < best) {
              best = rms;
              best_cell = fmt("a=%g b=%g p=%g", a, b, p);
            }
          } catch (const std::exception&) {
            ++failed;
          }
        }
      }
    }
    const double ratio = best / std_rms;
    const double spread = std_rms / data_rms;
    const bool ok = ratio < 0.6 && std::abs(spread - 1.0) <= 0.3;
    all_ok = all_ok && ok;
    detail += fmt("[line in R^%d: data RMS %.4f, standard %.4f (ratio %.3f, need within 30%%), best MAD %.4f at %s "
                  "(ratio %.3f, need < 0.6), %d failed cells, final loss %.4f] ",
                  dim, data_rms, std_rms, spread, best, best_cell.c_str(), ratio, failed, trained.curve.back().loss);
  }
  return {all_ok, detail};
}

Outcome criterion11() {
  MlpShape shape;
  shape.dim = 3;
  shape.hidden = {32, 32, 32};
  MlpDenoiser net(shape, 11);
  CounterRng rng(11, 1);
  Vec params = net.parameters();
  for (Eigen::Index i = 0; i < params.size(); ++i) params(i) = 0.5 * rng.normal();
  net.set_parameters(params);
  constexpr int batch = 16;
  Mat y(3, batch), eps(3, batch);
  Vec sig(batch);
  for (int j = 0; j < batch; ++j) {
    y.col(j) = rng.normal_vector(3);
    eps.col(j) = rng.normal_vector(3);
    sig(j) = std::exp(rng.uniform(std::log(0.01), std::log(50.0)));
  }
  Vec grad;
  net.loss_and_gradient(y, eps, sig, &grad);
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(params.size())));
    const double h = 1e-5;
    Vec p = params;
    p(i) += h;
    net.set_parameters(p);
    const double up = net.loss(y, eps, sig);
    p(i) -= 2.0 * h;
    net.set_parameters(p);
    const double dn = net.loss(y, eps, sig);
    const double fd = (up - dn) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad(i)) / std::max(1e-6, std::abs(fd) + std::abs(grad(i))));
  }
  net.set_parameters(params);
  return {worst < 1e-4, fmt("100 parameters of %d; max relative error %.2e (need < 1e-4)", net.parameter_count(), worst)};
}

Outcome criterion12() {
  const ValidationReport r = run_validation();
  int failed = 0;
  std::string names;
  for (const auto& c : r.checks) {
    if (!c.passed) {
      ++failed;
      names += " " + c.name;
    }
  }
  return {r.passed(), fmt("%zu checks, %d failed%s", r.checks.size(), failed, names.c_str())};
}

struct Criterion {
  const char* title;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  const std::vector<Criterion> criteria = {
      {"Dirac identity H_g delta_mu = -(x - mu)", 1.0, criterion1},
      {"Voronoi limit of H_g for Dirac mixtures", 5.0, criterion2},
      {"H_g -> S for Gaussian mixtures", 10.0, criterion3},
      {"correction factor: MAD == standard on Dirac oracles", 5.0, criterion4},
      {"geometric contraction on Dirac targets", 1.0, criterion5},
      {"Fig. 1 soft thresholding", 60.0, criterion6},
      {"Fig. 2a tilted Gaussians", 120.0, criterion7},
      {"Fig. 2b radial Gaussians", 120.0, criterion8},
      {"standard sampler fidelity", 30.0, criterion9},
      {"learned oracle on noisy manifold data", 900.0, criterion10},
      {"backprop gradient check", 10.0, criterion11},
      {"oracle cross-checks", 60.0, criterion12},
  };
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "--only expects 1..%zu\n", criteria.size());
    return 4;
  }
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i + 1) != only) continue;
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool ok = o.passed && in_time;
    if (!ok) ++failures;
    std::printf("[%s] criterion %2zu: %s | %s | runtime %.2fs (budget %.0fs)%s\n", ok ? "PASS" : "FAIL", i + 1, c.title,
                o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : " OVER BUDGET");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
