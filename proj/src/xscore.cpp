#include "mad/xscore.hpp"

#include <cmath>

#include "mad/error.hpp"

namespace mad {

Vec checked_evaluate(const ScoreOracle& oracle, double sigma, const Vec& x) {
  if (!(sigma > 0.0) || sigma < oracle.sigma_min() || sigma > oracle.sigma_max()) {
    throw_bad_input("noise level outside the oracle validity range",
                    {{"sigma", sigma}, {"sigma_min", oracle.sigma_min()}, {"sigma_max", oracle.sigma_max()}});
  }
  Vec s = oracle.evaluate(sigma, x);
  if (s.size() != oracle.dim() || !s.allFinite()) {
    throw_numerical("oracle returned a non-finite score", {{"sigma", sigma}});
  }
  return s;
}

// ---------------------------------------------------------------------------

AnalyticOracle::AnalyticOracle(std::shared_ptr<const Model> model) : model_(std::move(model)) {
  if (!model_) throw_bad_input("analytic oracle needs a model");
}

AnalyticOracle::AnalyticOracle(Model model) : model_(std::make_shared<const Model>(std::move(model))) {}

int AnalyticOracle::dim() const { return model_dim(*model_); }

Vec AnalyticOracle::evaluate(double sigma, const Vec& x) const {
  return smoothed_score(*model_, sigma * sigma, x);
}

std::optional<Vec> AnalyticOracle::sigma_derivative(double sigma, const Vec& x) const {
  // d/dsigma = 2 sigma d/d(sigma^2)
  return Vec(2.0 * sigma * smoothed_score_jet(*model_, sigma * sigma, x).dvariance);
}

// ---------------------------------------------------------------------------

FunctionOracle::FunctionOracle(int dim, Field score, Field sigma_derivative, double sigma_min, double sigma_max)
    : dim_(dim),
      score_(std::move(score)),
      derivative_(std::move(sigma_derivative)),
      sigma_min_(sigma_min),
      sigma_max_(sigma_max) {
  if (dim_ < 1 || !score_) throw_bad_input("function oracle needs a dimension and a score field");
}

std::optional<Vec> FunctionOracle::sigma_derivative(double sigma, const Vec& x) const {
  if (!derivative_) return std::nullopt;
  return derivative_(sigma, x);
}

std::shared_ptr<ScoreOracle> make_dirac_oracle(const Vec& location) {
  return std::make_shared<FunctionOracle>(
      static_cast<int>(location.size()),
      [location](double sigma, const Vec& x) -> Vec { return -(x - location) / (sigma * sigma); },
      [location](double sigma, const Vec& x) -> Vec { return 2.0 * (x - location) / (sigma * sigma * sigma); });
}

// ---------------------------------------------------------------------------

void MadParams::validate() const {
  const nlohmann::json ctx = {{"a", a}, {"b", b}, {"p", p}, {"delta", delta}, {"m_guard", m_guard}};
  if (!(a > 0.0) || !std::isfinite(a)) throw_bad_input("parameter a must be > 0", ctx);
  if (!(b >= 0.0) || !std::isfinite(b)) throw_bad_input("parameter b must be >= 0", ctx);
  if (!(p > 0.0) || !std::isfinite(p)) throw_bad_input("parameter p must be > 0", ctx);
  if (!(delta > 0.0 && delta < 1.0)) throw_bad_input("parameter delta must lie in (0, 1)", ctx);
  if (!(m_guard > 0.0)) throw_bad_input("parameter m_guard must be > 0", ctx);
}

Vec fd_sigma_derivative(const ScoreOracle& oracle, double t, const Vec& x, double delta, const Vec& score_at_t) {
  if (!(delta > 0.0)) throw_bad_input("finite-difference delta must be > 0", {{"delta", delta}});
  const double shifted = (1.0 + delta) * t;
  const Vec ahead = checked_evaluate(oracle, shifted, x);
  return (ahead - score_at_t) / (delta * t);
}

Vec fd_sigma_derivative(const ScoreOracle& oracle, double t, const Vec& x, double delta) {
  return fd_sigma_derivative(oracle, t, x, delta, checked_evaluate(oracle, t, x));
}

Vec h_gamma(const ScoreOracle& oracle, double sigma, double gamma, const Vec& x, DerivativeMode mode,
            double delta) {
  if (!(gamma > 0.0)) throw_bad_input("gamma must be > 0", {{"gamma", gamma}});
  if (!(sigma >= 0.0)) throw_bad_input("sigma must be >= 0", {{"sigma", sigma}});
  // S(p_sigma * g_gamma) = S(p_{sqrt(sigma^2 + gamma)})
  const double effective = std::sqrt(sigma * sigma + gamma);
  const Vec s = checked_evaluate(oracle, effective, x);
  std::optional<Vec> ds;
  if (mode == DerivativeMode::kAnalyticIfAvailable) ds = oracle.sigma_derivative(effective, x);
  if (!ds) ds = fd_sigma_derivative(oracle, effective, x, delta, s);
  if (!ds->allFinite()) throw_numerical("non-finite sigma derivative", {{"sigma", effective}});
  // d/dgamma = (1 / (2 sqrt(sigma^2 + gamma))) d/dsigma
  return (1.0 + gamma) * s + gamma * (*ds) / (2.0 * effective);
}

double solve_gamma(const MadParams& params, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw_bad_input("time t must be > 0", {{"t", t}});
  if (!(params.a > 0.0)) throw_bad_input("parameter a must be > 0", {{"a", params.a}});
  const double a = params.a;
  const double b = params.b;
  const double exponent = 2.0 / params.p;
  const double target = t * t;

  if (b == 0.0) return std::pow(target / a, params.p / 2.0);

  const auto f = [&](double g) { return a * std::pow(g, exponent) + b * g - target; };
  const auto df = [&](double g) { return a * exponent * std::pow(g, exponent - 1.0) + b; };

  // Both terms are nonnegative, so the root lies below each one's solo root.
  double lo = 0.0;
  double hi = std::min(target / b, std::pow(target / a, params.p / 2.0));
  if (f(hi) < 0.0) hi = target / b;  // pow rounding
  if (!(f(lo) < 0.0 && f(hi) >= 0.0)) {
    throw_numerical("solve_gamma failed to bracket the root", {{"t", t}, {"lo", lo}, {"hi", hi}});
  }

  const double tolerance = 1e-12 * target;
  double g = 0.5 * (lo + hi);
  for (int iter = 0; iter < 400; ++iter) {
    const double value = f(g);
    if (std::abs(value) < tolerance) return g;
    if (value < 0.0) {
      lo = g;
    } else {
      hi = g;
    }
    // Newton step, falling back to bisection when it leaves the bracket.
    const double slope = df(g);
    double next = g - value / slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (next == g) break;
    g = next;
  }
  // The bracket collapsed to adjacent doubles; take the better endpoint.
  const double best = std::abs(f(lo)) < std::abs(f(hi)) ? lo : hi;
  if (best > 0.0 && std::abs(f(best)) <= 1e-10 * target) return best;
  if (std::abs(f(g)) <= 1e-10 * target) return g;
  throw_numerical("solve_gamma did not converge", {{"t", t}, {"gamma", g}, {"residual", f(g)}});
}

double correction_factor(double gamma, double b, double t, double m_guard) {
  if (!(t > 0.0)) throw_bad_input("time t must be > 0", {{"t", t}});
  const double denominator = 1.0 + gamma - b * gamma / (t * t);
  if (!(denominator >= m_guard)) {
    throw_numerical("correction singular",
                    {{"gamma", gamma}, {"b", b}, {"t", t}, {"denominator", denominator}, {"m_guard", m_guard}});
  }
  return 1.0 / denominator;
}

StepCoefficients step_coefficients(const MadParams& params, double t, double t_next) {
  StepCoefficients c;
  c.t = t;
  c.t_next = t_next;
  c.gamma = solve_gamma(params, t);
  c.m = correction_factor(c.gamma, params.b, t, params.m_guard);
  return c;
}

}  // namespace mad
