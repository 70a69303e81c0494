#pragma once

// Time schedules and the two inference loops: plain Euler integration of the
// probability-flow ODE and the MAD variant driven by the extended score.
// sigma(t) = t throughout, so t_i doubles as the noise level.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mad/types.hpp"
#include "mad/xscore.hpp"

namespace mad {

class TimeSchedule {
 public:
  /// t_i = (smax^{1/rho} + i/(N-1) (smin^{1/rho} - smax^{1/rho}))^rho for i < N, t_N = 0.
  static TimeSchedule edm(int steps, double sigma_min, double sigma_max, double rho);
  /// Any strictly decreasing list ending in 0 with at least three entries.
  static TimeSchedule from_times(std::vector<double> times);

  int steps() const { return static_cast<int>(times_.size()) - 1; }
  std::span<const double> times() const { return times_; }
  double operator[](int i) const { return times_[static_cast<std::size_t>(i)]; }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }
  /// 0 when the schedule was given explicitly.
  double rho() const { return rho_; }

  /// min over i < N-1 of (t_i - t_{i+1}) / t_i.
  double min_relative_decrement() const;

 private:
  TimeSchedule(std::vector<double> times, double rho);

  std::vector<double> times_;
  double sigma_min_ = 0.0;
  double sigma_max_ = 0.0;
  double rho_ = 0.0;
};

enum class SamplerMode { kStandard, kMad };

const char* sampler_mode_name(SamplerMode mode);

struct StepDiagnostics {
  double t = 0.0;
  double t_next = 0.0;
  double gamma = 0.0;  // 0 for the standard sampler
  double m = 1.0;      // 1 for the standard sampler
  Vec score;
  Vec dscore;  // empty for the standard sampler
};

struct Trajectory {
  SamplerMode mode = SamplerMode::kStandard;
  std::uint64_t seed = 0;
  std::optional<MadParams> params;
  std::vector<Vec> iterates;  // x_0 .. x_N
  std::vector<StepDiagnostics> steps;

  const Vec& endpoint() const { return iterates.back(); }
};

struct SamplerOptions {
  DerivativeMode derivative = DerivativeMode::kForwardDifference;
  /// Keep per-step scores and derivatives; gamma, m and times are always kept.
  bool record_scores = true;
};

/// x_0 ~ N(0, t_0^2 I) drawn from the counter-based generator with this seed.
Vec initial_latent(int dim, double t0, std::uint64_t seed);

/// x_{i+1} = x_i - (t_{i+1} - t_i) t_i S(t_i, x_i).
Trajectory sample_standard(const ScoreOracle& oracle, const TimeSchedule& schedule, std::uint64_t seed,
                           const SamplerOptions& options = {});
Trajectory sample_standard_from(const ScoreOracle& oracle, const TimeSchedule& schedule, const Vec& x0,
                                const SamplerOptions& options = {});

/// x_{i+1} = x_i - m_i (t_{i+1} - t_i) t_i ((1+g_i) s_i + (b g_i / 2 t_i) s'_i).
Trajectory sample_mad(const ScoreOracle& oracle, const TimeSchedule& schedule, const MadParams& params,
                      std::uint64_t seed, const SamplerOptions& options = {});
Trajectory sample_mad_from(const ScoreOracle& oracle, const TimeSchedule& schedule, const MadParams& params,
                           const Vec& x0, const SamplerOptions& options = {});

struct BatchRequest {
  SamplerMode mode = SamplerMode::kStandard;
  MadParams params;
  std::uint64_t base_seed = 0;
  int count = 1;
  /// Worker threads; 0 picks from MAD_THREADS, then hardware concurrency.
  int threads = 0;
  SamplerOptions options;
};

/// Trajectory k uses seed base_seed + k and lands at index k, independent of
/// the number of workers. The first failing trajectory's error is rethrown.
std::vector<Trajectory> sample_batch(const ScoreOracle& oracle, const TimeSchedule& schedule,
                                     const BatchRequest& request);

/// Worker count from MAD_THREADS (if set and positive), else hardware concurrency.
int default_thread_count();

}  // namespace mad
