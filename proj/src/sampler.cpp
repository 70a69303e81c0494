#include "mad/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "mad/error.hpp"
#include "mad/rng.hpp"

namespace mad {

namespace {

constexpr double kDivergenceFactor = 1e6;

void check_iterate(const Vec& x, int step, double sigma_max) {
  if (!x.allFinite() || x.norm() > kDivergenceFactor * sigma_max) {
    throw_numerical("diverged at step " + std::to_string(step), {{"step", step}, {"norm", x.norm()}});
  }
}

void check_oracle_dim(const ScoreOracle& oracle, const Vec& x0) {
  if (x0.size() != oracle.dim()) {
    throw_bad_input("initial point has the wrong dimension", {{"expected", oracle.dim()}, {"actual", x0.size()}});
  }
}

}  // namespace

// ---------------------------------------------------------------------------

TimeSchedule::TimeSchedule(std::vector<double> times, double rho) : times_(std::move(times)), rho_(rho) {
  if (times_.size() < 3) throw_bad_input("a schedule needs at least two steps");
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    if (!(times_[i] > times_[i + 1]) || !std::isfinite(times_[i])) {
      throw_bad_input("schedule times must be strictly decreasing", {{"index", i}});
    }
  }
  if (times_.back() != 0.0) throw_bad_input("schedule must end at t_N = 0");
  sigma_max_ = times_.front();
  sigma_min_ = times_[times_.size() - 2];
}

TimeSchedule TimeSchedule::edm(int steps, double sigma_min, double sigma_max, double rho) {
  const nlohmann::json ctx = {{"steps", steps}, {"sigma_min", sigma_min}, {"sigma_max", sigma_max}, {"rho", rho}};
  if (steps < 2) throw_bad_input("schedule needs at least 2 steps", ctx);
  if (!(sigma_min > 0.0 && sigma_min < sigma_max) || !std::isfinite(sigma_max)) {
    throw_bad_input("schedule needs 0 < sigma_min < sigma_max", ctx);
  }
  if (!(rho >= 1.0)) throw_bad_input("schedule needs rho >= 1", ctx);
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  const double hi = std::pow(sigma_max, 1.0 / rho);
  const double lo = std::pow(sigma_min, 1.0 / rho);
  for (int i = 0; i < steps; ++i) {
    t[static_cast<std::size_t>(i)] = std::pow(hi + (static_cast<double>(i) / (steps - 1)) * (lo - hi), rho);
  }
  // Pin the endpoints exactly.
  t.front() = sigma_max;
  t[static_cast<std::size_t>(steps) - 1] = sigma_min;
  t.back() = 0.0;
  return TimeSchedule(std::move(t), rho);
}

TimeSchedule TimeSchedule::from_times(std::vector<double> times) {
  return TimeSchedule(std::move(times), 0.0);
}

double TimeSchedule::min_relative_decrement() const {
  double out = 1.0;
  for (std::size_t i = 0; i + 2 < times_.size(); ++i) {
    out = std::min(out, (times_[i] - times_[i + 1]) / times_[i]);
  }
  return out;
}

const char* sampler_mode_name(SamplerMode mode) {
  return mode == SamplerMode::kMad ? "mad" : "standard";
}

// ---------------------------------------------------------------------------

Vec initial_latent(int dim, double t0, std::uint64_t seed) {
  CounterRng rng(seed);
  return t0 * rng.normal_vector(dim);
}

Trajectory sample_standard_from(const ScoreOracle& oracle, const TimeSchedule& schedule, const Vec& x0,
                                const SamplerOptions& options) {
  check_oracle_dim(oracle, x0);
  Trajectory traj;
  traj.mode = SamplerMode::kStandard;
  traj.iterates.reserve(static_cast<std::size_t>(schedule.steps()) + 1);
  traj.steps.reserve(static_cast<std::size_t>(schedule.steps()));
  traj.iterates.push_back(x0);
  check_iterate(x0, 0, schedule.sigma_max());

  for (int i = 0; i < schedule.steps(); ++i) {
    const double t = schedule[i];
    const double t_next = schedule[i + 1];
    const Vec& x = traj.iterates.back();
    Vec s = checked_evaluate(oracle, t, x);
    const double h = (t_next - t) * t;
    Vec next = x - h * s;
    check_iterate(next, i + 1, schedule.sigma_max());

    StepDiagnostics diag;
    diag.t = t;
    diag.t_next = t_next;
    if (options.record_scores) diag.score = std::move(s);
    traj.steps.push_back(std::move(diag));
    traj.iterates.push_back(std::move(next));
  }
  return traj;
}

Trajectory sample_standard(const ScoreOracle& oracle, const TimeSchedule& schedule, std::uint64_t seed,
                           const SamplerOptions& options) {
  Trajectory traj = sample_standard_from(oracle, schedule, initial_latent(oracle.dim(), schedule[0], seed), options);
  traj.seed = seed;
  return traj;
}

Trajectory sample_mad_from(const ScoreOracle& oracle, const TimeSchedule& schedule, const MadParams& params,
                           const Vec& x0, const SamplerOptions& options) {
  params.validate();
  check_oracle_dim(oracle, x0);
  Trajectory traj;
  traj.mode = SamplerMode::kMad;
  traj.params = params;
  traj.iterates.reserve(static_cast<std::size_t>(schedule.steps()) + 1);
  traj.steps.reserve(static_cast<std::size_t>(schedule.steps()));
  traj.iterates.push_back(x0);
  check_iterate(x0, 0, schedule.sigma_max());

  for (int i = 0; i < schedule.steps(); ++i) {
    const double t = schedule[i];
    const double t_next = schedule[i + 1];
    const Vec& x = traj.iterates.back();

    StepCoefficients coeff;
    try {
      coeff = step_coefficients(params, t, t_next);
    } catch (const Error& e) {
      nlohmann::json ctx = e.context();
      ctx["step"] = i;
      throw Error(e.kind(), e.what(), std::move(ctx));
    }
    Vec s = checked_evaluate(oracle, t, x);
    std::optional<Vec> ds;
    if (options.derivative == DerivativeMode::kAnalyticIfAvailable) ds = oracle.sigma_derivative(t, x);
    if (!ds) ds = fd_sigma_derivative(oracle, t, x, params.delta, s);
    if (!ds->allFinite()) throw_numerical("non-finite sigma derivative", {{"step", i}});

    // m (1+g) and m b g / (2t) are formed as quotients by the denominator so
    // that b = 0 reproduces the standard step bit for bit.
    const double denominator = 1.0 + coeff.gamma - params.b * coeff.gamma / (t * t);
    const double score_coeff = (1.0 + coeff.gamma) / denominator;
    const double deriv_coeff = (params.b * coeff.gamma / (2.0 * t)) / denominator;
    const double h = (t_next - t) * t;
    Vec next = x - h * (score_coeff * s + deriv_coeff * (*ds));
    check_iterate(next, i + 1, schedule.sigma_max());

    StepDiagnostics diag;
    diag.t = t;
    diag.t_next = t_next;
    diag.gamma = coeff.gamma;
    diag.m = coeff.m;
    if (options.record_scores) {
      diag.score = std::move(s);
      diag.dscore = std::move(*ds);
    }
    traj.steps.push_back(std::move(diag));
    traj.iterates.push_back(std::move(next));
  }
  return traj;
}

Trajectory sample_mad(const ScoreOracle& oracle, const TimeSchedule& schedule, const MadParams& params,
                      std::uint64_t seed, const SamplerOptions& options) {
  Trajectory traj =
      sample_mad_from(oracle, schedule, params, initial_latent(oracle.dim(), schedule[0], seed), options);
  traj.seed = seed;
  return traj;
}

// ---------------------------------------------------------------------------

int default_thread_count() {
  if (const char* env = std::getenv("MAD_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Trajectory> sample_batch(const ScoreOracle& oracle, const TimeSchedule& schedule,
                                     const BatchRequest& request) {
  if (request.count < 1) throw_bad_input("batch count must be >= 1", {{"count", request.count}});
  if (request.mode == SamplerMode::kMad) request.params.validate();

  std::vector<Trajectory> out(static_cast<std::size_t>(request.count));
  int threads = request.threads > 0 ? request.threads : default_thread_count();
  if (!oracle.concurrent_safe()) threads = 1;
  threads = std::min(threads, request.count);

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  int first_error_index = request.count;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= request.count || failed.load()) return;
      try {
        const std::uint64_t seed = request.base_seed + static_cast<std::uint64_t>(k);
        out[static_cast<std::size_t>(k)] =
            request.mode == SamplerMode::kMad
                ? sample_mad(oracle, schedule, request.params, seed, request.options)
                : sample_standard(oracle, schedule, seed, request.options);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (k < first_error_index) {
          first_error_index = k;
          first_error = std::current_exception();
        }
        failed.store(true);
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace mad
