#pragma once

#include <initializer_list>
#include <string>

#include <gtest/gtest.h>

#include "mad/error.hpp"
#include "mad/rng.hpp"
#include "mad/types.hpp"

namespace mad::testing {

inline Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Mat mat1(double value) { return Mat::Constant(1, 1, value); }

inline Vec random_vec(CounterRng& rng, int d, double box) {
  Vec v(d);
  for (int k = 0; k < d; ++k) v(k) = rng.uniform(-box, box);
  return v;
}

inline double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Relative difference scaled by max(|a|, |b|, floor).
inline double rel_diff(const Vec& a, const Vec& b, double floor = 1e-300) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

/// Runs fn and checks that it throws mad::Error of the given kind whose
/// message contains `needle`.
template <class Fn>
void expect_error(Fn&& fn, ErrorKind kind, const std::string& needle = "") {
  try {
    fn();
    ADD_FAILURE() << "expected mad::Error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
    if (!needle.empty()) EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

}  // namespace mad::testing
