#include "mad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "mad/error.hpp"

namespace mad {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::size_t nearest_index(const std::vector<Vec>& points, const Vec& x) {
  if (points.empty()) throw_bad_input("nearest_index needs at least one point");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = (x - points[i]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double distance_to_points(const std::vector<Vec>& points, const Vec& x) {
  return (x - points[nearest_index(points, x)]).norm();
}

double distance_to_subspace(const AffineSubspace& subspace, const Vec& x) {
  const Vec r = x - subspace.origin;
  if (subspace.directions.cols() == 0) return r.norm();
  Eigen::HouseholderQR<Mat> qr(subspace.directions);
  const Mat q = qr.householderQ() * Mat::Identity(subspace.directions.rows(), subspace.directions.cols());
  return (r - q * (q.transpose() * r)).norm();
}

double distance_to_circle(const Circle& circle, const Vec& x) {
  const int d = static_cast<int>(circle.center.size());
  Vec u = circle.u.size() ? circle.u : Vec(Vec::Unit(d, 0));
  Vec v = circle.v.size() ? circle.v : Vec(Vec::Unit(d, 1));
  u.normalize();
  v = v - v.dot(u) * u;
  v.normalize();
  const Vec r = x - circle.center;
  const double pu = r.dot(u);
  const double pv = r.dot(v);
  const double in_plane = std::hypot(pu, pv);
  const double off_plane = (r - pu * u - pv * v).norm();
  return std::hypot(in_plane - circle.radius, off_plane);
}

double distance_to_segment(const Segment& segment, const Vec& x) {
  const Vec dir = segment.end - segment.start;
  const double len_sq = dir.squaredNorm();
  if (len_sq == 0.0) return (x - segment.start).norm();
  const double s = std::clamp((x - segment.start).dot(dir) / len_sq, 0.0, 1.0);
  return (x - segment.start - s * dir).norm();
}

double distance_to(const ReferenceSet& set, const Vec& x) {
  return std::visit(Overloaded{
                        [&](const PointSet& p) { return distance_to_points(p.points, x); },
                        [&](const AffineSubspace& a) { return distance_to_subspace(a, x); },
                        [&](const Circle& c) { return distance_to_circle(c, x); },
                        [&](const Segment& s) { return distance_to_segment(s, x); },
                    },
                    set);
}

TrajectoryMetrics trajectory_metrics(const Trajectory& traj, const std::vector<NamedReference>& references) {
  if (traj.iterates.empty()) throw_bad_input("trajectory has no iterates");
  TrajectoryMetrics m;
  m.endpoint = traj.endpoint();
  m.step_norms.reserve(traj.iterates.size() - 1);
  for (std::size_t i = 0; i + 1 < traj.iterates.size(); ++i) {
    m.step_norms.push_back((traj.iterates[i + 1] - traj.iterates[i]).norm());
  }
  for (const auto& ref : references) m.distances.push_back(distance_to(ref.set, m.endpoint));
  if (!traj.steps.empty()) {
    m.min_m = m.max_m = traj.steps.front().m;
    for (const auto& s : traj.steps) {
      m.min_m = std::min(m.min_m, s.m);
      m.max_m = std::max(m.max_m, s.m);
    }
  }
  return m;
}

MomentSummary summarize(const std::vector<Vec>& points) {
  MomentSummary s;
  s.count = static_cast<int>(points.size());
  if (points.empty()) return s;
  const int d = static_cast<int>(points.front().size());
  s.mean = Vec::Zero(d);
  for (const auto& p : points) s.mean += p;
  s.mean /= s.count;
  s.std = Vec::Zero(d);
  if (s.count < 2) return s;
  for (const auto& p : points) s.std += (p - s.mean).cwiseAbs2();
  s.std = (s.std / (s.count - 1)).cwiseSqrt();
  return s;
}

MomentSummary summarize(const std::vector<double>& values) {
  std::vector<Vec> points;
  points.reserve(values.size());
  for (double v : values) points.push_back(Vec::Constant(1, v));
  return summarize(points);
}

std::vector<BasinStats> basin_stats(const std::vector<Vec>& points, const std::vector<Vec>& modes) {
  std::vector<std::vector<Vec>> groups(modes.size());
  for (const auto& p : points) groups[nearest_index(modes, p)].push_back(p);
  std::vector<BasinStats> out;
  out.reserve(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) out.push_back({modes[i], summarize(groups[i])});
  return out;
}

std::vector<Vec> endpoints(const std::vector<Trajectory>& batch) {
  std::vector<Vec> out;
  out.reserve(batch.size());
  for (const auto& t : batch) out.push_back(t.endpoint());
  return out;
}

}  // namespace mad
