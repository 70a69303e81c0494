#include <cmath>

#include <gtest/gtest.h>

#include "mad/models.hpp"
#include "mad/oracle.hpp"
#include "mad/xscore.hpp"
#include "test_util.hpp"

using namespace mad;
using namespace mad::testing;

namespace {

MadParams params(double a, double b, double p) {
  MadParams m;
  m.a = a;
  m.b = b;
  m.p = p;
  return m;
}

GaussianMixture small_mixture() {
  const Mat cov = (Mat(2, 2) << 1.0, 0.2, 0.2, 0.6).finished();
  return GaussianMixture({{0.4, vec({1.0, 0.0}), cov}, {0.6, vec({-1.0, 2.0}), 0.5 * cov}});
}

}  // namespace

// --- h_gamma ----------------------------------------------------------------

TEST(HGamma, DiracOracleReducesToMinusDisplacement) {
  const Vec mu = vec({0.5, -1.5});
  const auto oracle = make_dirac_oracle(mu);
  const Vec x = vec({2.0, 1.0});
  for (double g : {1e-3, 0.1, 1.0, 10.0}) {
    const Vec h = h_gamma(*oracle, 0.0, g, x, DerivativeMode::kAnalyticIfAvailable);
    EXPECT_LT(max_abs(h + (x - mu)), 1e-12 * (1.0 + 1.0 / g));
  }
}

TEST(HGamma, MatchesGaussianClosedForm) {
  const GaussianMixture gm = small_mixture();
  const AnalyticOracle oracle{Model(gm)};
  CounterRng rng(41);
  for (int k = 0; k < 20; ++k) {
    const Vec x = random_vec(rng, 2, 3.0);
    for (double g : {0.01, 0.5, 2.0}) {
      const Vec h = h_gamma(oracle, 0.0, g, x, DerivativeMode::kAnalyticIfAvailable);
      EXPECT_LT(rel_diff(h, gm.extended_score(g, x)), 1e-12);
    }
  }
}

TEST(HGamma, AgreesWithDiracClosedForm) {
  const DiracMixture dm({{0.3, vec({-1.0, 0.0})}, {0.7, vec({1.0, 0.5})}});
  const AnalyticOracle oracle{Model(dm)};
  CounterRng rng(42);
  for (int k = 0; k < 20; ++k) {
    const Vec x = random_vec(rng, 2, 2.0);
    for (double g : {0.05, 0.3, 2.0}) {
      const Vec h = h_gamma(oracle, 0.0, g, x, DerivativeMode::kAnalyticIfAvailable);
      EXPECT_LT(rel_diff(h, dirac_h_gamma(dm, g, x), 1e-12), 1e-8);
    }
  }
}

TEST(HGamma, ConvergesToScoreAtFirstOrder) {
  const GaussianMixture gm = small_mixture();
  const AnalyticOracle oracle{Model(gm)};
  const Vec x = vec({0.4, -0.3});
  const Vec s = gm.score(0.0, x);
  std::vector<double> errs;
  for (double g : {1e-2, 1e-3, 1e-4}) {
    errs.push_back((h_gamma(oracle, 0.0, g, x, DerivativeMode::kAnalyticIfAvailable) - s).norm());
  }
  EXPECT_NEAR(errs[0] / errs[1], 10.0, 1.0);
  EXPECT_NEAR(errs[1] / errs[2], 10.0, 0.2);
}

TEST(HGamma, ForwardDifferenceIsDefault) {
  const GaussianMixture gm = small_mixture();
  const AnalyticOracle oracle{Model(gm)};
  const Vec x = vec({0.4, -0.3});
  const Vec exact = h_gamma(oracle, 0.5, 0.2, x, DerivativeMode::kAnalyticIfAvailable);
  const Vec fd = h_gamma(oracle, 0.5, 0.2, x);
  EXPECT_NE(exact, fd);
  EXPECT_LT(rel_diff(exact, fd), 1e-4);
}

TEST(HGamma, RangeAndInputErrors) {
  const auto narrow = std::make_shared<FunctionOracle>(
      1, [](double, const Vec& x) -> Vec { return -x; }, nullptr, 0.1, 1.0);
  expect_error([&] { h_gamma(*narrow, 0.0, 4.0, vec({1.0})); }, ErrorKind::kBadInput, "validity range");
  expect_error([&] { h_gamma(*narrow, 0.0, 0.0, vec({1.0})); }, ErrorKind::kBadInput);
  const auto bad = std::make_shared<FunctionOracle>(1, [](double, const Vec&) -> Vec { return vec({NAN}); });
  expect_error([&] { h_gamma(*bad, 0.0, 0.5, vec({1.0})); }, ErrorKind::kNumerical, "non-finite");
}

// --- solve_gamma ------------------------------------------------------------

TEST(SolveGamma, LinearCase) { EXPECT_NEAR(solve_gamma(params(1, 1, 2), 1.0), 0.5, 1e-14); }

TEST(SolveGamma, QuadraticCase) {
  EXPECT_NEAR(solve_gamma(params(1, 1, 1), 0.5), (-1.0 + std::sqrt(2.0)) / 2.0, 1e-12);
}

TEST(SolveGamma, MatchesBisectionOracle) {
  EXPECT_NEAR(solve_gamma(params(2.5, 10, 8), 1.0), bisect_gamma(2.5, 10, 8, 1.0), 1e-12);
  CounterRng rng(43);
  for (int k = 0; k < 200; ++k) {
    const double a = rng.uniform(0.1, 5.0), b = rng.uniform(0.0, 40.0), p = rng.uniform(0.5, 10.0);
    const double t = std::exp(rng.uniform(std::log(0.002), std::log(80.0)));
    const double g = solve_gamma(params(a, b, p), t);
    EXPECT_NEAR(g, bisect_gamma(a, b, p, t), 1e-12 * std::max(1.0, g)) << a << " " << b << " " << p << " " << t;
  }
}

TEST(SolveGamma, ResidualAndMonotonicity) {
  for (const auto& m : {params(1, 1, 1), params(0.5, 20, 1.3), params(2, 30, 2), params(1, 5, 8)}) {
    double prev = 0.0;
    for (double t : {0.002, 0.01, 0.1, 1.0, 10.0, 80.0}) {
      const double g = solve_gamma(m, t);
      EXPECT_GT(g, prev);
      prev = g;
      const double back = std::sqrt(m.a * std::pow(g, 2.0 / m.p) + m.b * g);
      EXPECT_NEAR(back / t, 1.0, 1e-10);
    }
  }
}

TEST(SolveGamma, ZeroBClosedForm) {
  EXPECT_DOUBLE_EQ(solve_gamma(params(2, 0, 3), 1.5), std::pow(1.5 * 1.5 / 2.0, 1.5));
}

TEST(SolveGamma, RejectsNonPositiveTime) {
  expect_error([] { solve_gamma(params(1, 1, 1), 0.0); }, ErrorKind::kBadInput);
  expect_error([] { solve_gamma(params(1, 1, 1), -1.0); }, ErrorKind::kBadInput);
}

// --- correction_factor ------------------------------------------------------

TEST(CorrectionFactor, ZeroBIsInverseOnePlusGamma) {
  EXPECT_DOUBLE_EQ(correction_factor(0.7, 0.0, 2.0, 1e-6), 1.0 / 1.7);
}

TEST(CorrectionFactor, Substitutions) {
  EXPECT_DOUBLE_EQ(correction_factor(0.25, 1.0, 0.5, 1e-6), 4.0);
  EXPECT_DOUBLE_EQ(correction_factor(0.5, 2.0, 1.0, 1e-6), 2.0);
}

TEST(CorrectionFactor, SingularDenominatorCarriesValues) {
  try {
    correction_factor(1.0, 4.0, 1.0, 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_STREQ(e.what(), "correction singular");
    EXPECT_EQ(e.context().at("gamma"), 1.0);
    EXPECT_EQ(e.context().at("b"), 4.0);
    EXPECT_EQ(e.context().at("t"), 1.0);
  }
}

TEST(CorrectionFactor, TendsToOneForLargeP) {
  // p > 2: b gamma / t^2 -> 0 as t -> 0
  const MadParams m = params(1.0, 5.0, 8.0);
  double prev = INFINITY;
  for (double t : {1.0, 0.1, 0.01, 0.001}) {
    const double dev = std::abs(correction_factor(solve_gamma(m, t), m.b, t, m.m_guard) - 1.0);
    EXPECT_LT(dev, prev);
    prev = dev;
  }
  EXPECT_LT(prev, 1e-6);
}

// --- fd_sigma_derivative ----------------------------------------------------

TEST(FdSigmaDerivative, DiracBaseline) {
  const auto oracle = make_dirac_oracle(vec({0.0, 0.0}));
  const Vec x = vec({1.0, -2.0});
  const double t = 0.7;
  const Vec exact = 2.0 * x / (t * t * t);
  EXPECT_LT(rel_diff(fd_sigma_derivative(*oracle, t, x, 1e-4), exact), 5e-4);
}

TEST(FdSigmaDerivative, ConstantOracleGivesZero) {
  const FunctionOracle constant(2, [](double, const Vec&) -> Vec { return vec({1.0, 2.0}); });
  EXPECT_EQ(fd_sigma_derivative(constant, 0.3, vec({0.0, 0.0}), 1e-4), Vec::Zero(2));
}

TEST(FdSigmaDerivative, ErrorIsFirstOrderInDelta) {
  const AnalyticOracle oracle{Model(small_mixture())};
  CounterRng rng(44);
  const Vec x = random_vec(rng, 2, 2.0);
  const double t = 0.7;
  const Vec ref = central_diff([&](double s) { return oracle.evaluate(s, x); }, t, 1e-3);
  const double e3 = (fd_sigma_derivative(oracle, t, x, 1e-3) - ref).norm();
  const double e4 = (fd_sigma_derivative(oracle, t, x, 1e-4) - ref).norm();
  EXPECT_LT(e4, e3);
  EXPECT_NEAR(e3 / e4, 10.0, 1.0);
}

TEST(FdSigmaDerivative, RespectsValidityRange) {
  const FunctionOracle narrow(1, [](double, const Vec& x) -> Vec { return -x; }, nullptr, 0.1, 1.0);
  expect_error([&] { fd_sigma_derivative(narrow, 1.0, vec({1.0}), 1e-3); }, ErrorKind::kBadInput);
}

// --- step coefficients and params -------------------------------------------

TEST(StepCoefficients, CombinesSolverAndCorrection) {
  const MadParams m = params(1, 1, 1);
  const auto c = step_coefficients(m, 0.5, 0.3);
  EXPECT_NEAR(c.gamma, (-1.0 + std::sqrt(2.0)) / 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(c.m, correction_factor(c.gamma, 1.0, 0.5, m.m_guard));
  EXPECT_EQ(c.t, 0.5);
  EXPECT_EQ(c.t_next, 0.3);
}

TEST(MadParams, Validation) {
  EXPECT_NO_THROW(params(1, 0, 1).validate());
  expect_error([] { params(0, 1, 1).validate(); }, ErrorKind::kBadInput);
  expect_error([] { params(1, -1, 1).validate(); }, ErrorKind::kBadInput);
  expect_error([] { params(1, 1, 0).validate(); }, ErrorKind::kBadInput);
  MadParams m;
  m.delta = 1.0;
  expect_error([&] { m.validate(); }, ErrorKind::kBadInput);
  m = MadParams{};
  m.m_guard = 0.0;
  expect_error([&] { m.validate(); }, ErrorKind::kBadInput);
}
