#pragma once

// Per-trajectory and batch diagnostics: distances to reference sets, step
// norms and moment summaries.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mad/sampler.hpp"
#include "mad/types.hpp"

namespace mad {

struct PointSet {
  std::vector<Vec> points;
};

/// origin + span(columns of directions); directions need not be orthonormal.
struct AffineSubspace {
  Vec origin;
  Mat directions;
};

/// Circle of the given radius in the plane center + span(u, v). For d = 2 the
/// default plane is the whole space.
struct Circle {
  Vec center;
  double radius = 0.0;
  Vec u;  // empty means e_1
  Vec v;  // empty means e_2
};

struct Segment {
  Vec start;
  Vec end;
};

using ReferenceSet = std::variant<PointSet, AffineSubspace, Circle, Segment>;

double distance_to(const ReferenceSet& set, const Vec& x);
double distance_to_points(const std::vector<Vec>& points, const Vec& x);
double distance_to_subspace(const AffineSubspace& subspace, const Vec& x);
double distance_to_circle(const Circle& circle, const Vec& x);
double distance_to_segment(const Segment& segment, const Vec& x);

/// Index of the closest point; ties go to the lower index.
std::size_t nearest_index(const std::vector<Vec>& points, const Vec& x);

struct NamedReference {
  std::string name;
  ReferenceSet set;
};

struct TrajectoryMetrics {
  Vec endpoint;
  std::vector<double> step_norms;  // |x_{i+1} - x_i|
  std::vector<double> distances;   // one per reference, in order
  double min_m = 1.0;
  double max_m = 1.0;
};

TrajectoryMetrics trajectory_metrics(const Trajectory& traj, const std::vector<NamedReference>& references = {});

struct MomentSummary {
  int count = 0;
  Vec mean;
  Vec std;  // sample standard deviation (n - 1), 0 when count < 2
};

MomentSummary summarize(const std::vector<Vec>& points);
/// Same for scalars.
MomentSummary summarize(const std::vector<double>& values);

struct BasinStats {
  Vec mode;
  MomentSummary moments;
};

/// Groups points by nearest mode and summarizes each group.
std::vector<BasinStats> basin_stats(const std::vector<Vec>& points, const std::vector<Vec>& modes);

std::vector<Vec> endpoints(const std::vector<Trajectory>& batch);

}  // namespace mad
