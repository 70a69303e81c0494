#pragma once

// Extended-score operator layer: H_gamma from any score oracle, the gamma(t)
// root solver, the correction factor and the forward-difference sigma
// derivative used by the MAD sampler.

#include <functional>
#include <limits>
#include <memory>
#include <optional>

#include "mad/models.hpp"
#include "mad/types.hpp"

namespace mad {

/// Anything that approximates S(sigma, x) = grad_x log p_sigma(x).
class ScoreOracle {
 public:
  virtual ~ScoreOracle() = default;

  virtual int dim() const = 0;
  virtual Vec evaluate(double sigma, const Vec& x) const = 0;

  /// d/dsigma S(sigma, x) when the oracle knows it in closed form.
  virtual std::optional<Vec> sigma_derivative(double /*sigma*/, const Vec& /*x*/) const { return std::nullopt; }

  /// Noise levels for which evaluate() is meaningful.
  virtual double sigma_min() const { return 0.0; }
  virtual double sigma_max() const { return std::numeric_limits<double>::infinity(); }

  /// Whether evaluate() may be called from several threads at once.
  virtual bool concurrent_safe() const { return true; }
};

/// Evaluates the oracle after checking the validity range, and checks that the
/// result is a finite vector of the right size.
Vec checked_evaluate(const ScoreOracle& oracle, double sigma, const Vec& x);

/// Exact smoothed score of an analytic model: S(sigma, x) = S(p * g_{sigma^2})(x).
class AnalyticOracle final : public ScoreOracle {
 public:
  explicit AnalyticOracle(std::shared_ptr<const Model> model);
  explicit AnalyticOracle(Model model);

  int dim() const override;
  Vec evaluate(double sigma, const Vec& x) const override;
  std::optional<Vec> sigma_derivative(double sigma, const Vec& x) const override;

  const Model& model() const { return *model_; }

 private:
  std::shared_ptr<const Model> model_;
};

/// Oracle backed by plain callables. Handy for closed-form test fields such as
/// the single-Dirac score -(x - mu)/sigma^2.
class FunctionOracle final : public ScoreOracle {
 public:
  using Field = std::function<Vec(double, const Vec&)>;

  FunctionOracle(int dim, Field score, Field sigma_derivative = nullptr,
                 double sigma_min = 0.0, double sigma_max = std::numeric_limits<double>::infinity());

  int dim() const override { return dim_; }
  Vec evaluate(double sigma, const Vec& x) const override { return score_(sigma, x); }
  std::optional<Vec> sigma_derivative(double sigma, const Vec& x) const override;
  double sigma_min() const override { return sigma_min_; }
  double sigma_max() const override { return sigma_max_; }

 private:
  int dim_;
  Field score_;
  Field derivative_;
  double sigma_min_;
  double sigma_max_;
};

/// S(sigma, x) = -(x - mu) / sigma^2 with its exact sigma derivative.
std::shared_ptr<ScoreOracle> make_dirac_oracle(const Vec& location);

// ---------------------------------------------------------------------------

struct MadParams {
  double a = 1.0;
  double b = 1.0;
  double p = 1.0;
  double delta = 1e-4;
  double m_guard = 1e-6;

  /// Throws kBadInput unless a > 0, b >= 0, p > 0, delta in (0, 1), m_guard > 0.
  void validate() const;
};

struct StepCoefficients {
  double gamma = 0.0;
  double m = 1.0;
  double t = 0.0;
  double t_next = 0.0;
};

/// How the gamma derivative of the smoothed score is obtained.
enum class DerivativeMode {
  kForwardDifference,   // (S((1+delta) sigma) - S(sigma)) / (delta sigma)
  kAnalyticIfAvailable, // oracle.sigma_derivative(), falling back to the above
};

/// H_gamma p_sigma(x) = (1+g) S(sqrt(sigma^2+g), x) + g d/dg S(sqrt(sigma^2+g), x).
Vec h_gamma(const ScoreOracle& oracle, double sigma, double gamma, const Vec& x,
            DerivativeMode mode = DerivativeMode::kForwardDifference, double delta = 1e-4);

/// The unique gamma > 0 with a gamma^{2/p} + b gamma = t^2.
double solve_gamma(const MadParams& params, double t);

/// (1 + gamma - b gamma / t^2)^{-1}; throws "correction singular" when the
/// denominator falls below m_guard.
double correction_factor(double gamma, double b, double t, double m_guard);

/// Forward difference (S((1+delta) t, x) - S(t, x)) / (delta t).
Vec fd_sigma_derivative(const ScoreOracle& oracle, double t, const Vec& x, double delta);

/// Same, reusing an already computed S(t, x).
Vec fd_sigma_derivative(const ScoreOracle& oracle, double t, const Vec& x, double delta, const Vec& score_at_t);

/// gamma_i and m_i for one step of the MAD sampler.
StepCoefficients step_coefficients(const MadParams& params, double t, double t_next);

}  // namespace mad
