#include "mad/analysis.hpp"

#include <cmath>

#include "mad/error.hpp"
#include "mad/synthdata.hpp"

namespace mad {

nlohmann::json vec_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

AxisStats axis_stats(const GaussianMixture& model, const std::vector<Vec>& points) {
  if (points.empty()) throw_bad_input("axis statistics need points");
  const auto axes = principal_axes(model);
  AxisStats s;
  for (const auto& x : points) {
    const auto& axis = axes[assign_component(model, x)];
    const Vec r = x - axis.origin;
    const Vec u = axis.directions.col(0).normalized();
    const double along = r.dot(u);
    s.along_axis_ms += along * along;
    s.off_axis_ms += (r - along * u).squaredNorm();
  }
  s.off_axis_ms /= static_cast<double>(points.size());
  s.along_axis_ms /= static_cast<double>(points.size());
  return s;
}

double ring_rms(const RadialGaussianMixture& model, const std::vector<Vec>& points) {
  if (points.empty()) throw_bad_input("ring statistics need points");
  double acc = 0.0;
  for (const auto& x : points) {
    const double dev = distance_to_points(model.centers(), x) - model.radius();
    acc += dev * dev;
  }
  return std::sqrt(acc / static_cast<double>(points.size()));
}

double reference_rms(const ReferenceSet& set, const std::vector<Vec>& points) {
  if (points.empty()) throw_bad_input("reference statistics need points");
  double acc = 0.0;
  for (const auto& x : points) {
    const double d = distance_to(set, x);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(points.size()));
}

nlohmann::json analyze_endpoints(const std::vector<Vec>& points, const Model* model,
                                 const std::optional<ReferenceSet>& manifold) {
  nlohmann::json out;
  const MomentSummary all = summarize(points);
  out["count"] = all.count;
  out["mean"] = vec_to_json(all.mean);
  out["std"] = vec_to_json(all.std);
  if (model) {
    nlohmann::json basins = nlohmann::json::array();
    for (const auto& b : basin_stats(points, model_modes(*model))) {
      basins.push_back({{"mode", vec_to_json(b.mode)},
                        {"count", b.moments.count},
                        {"mean", b.moments.count ? vec_to_json(b.moments.mean) : nlohmann::json(nullptr)},
                        {"std", b.moments.count ? vec_to_json(b.moments.std) : nlohmann::json(nullptr)}});
    }
    out["basins"] = std::move(basins);
    if (const auto* gm = std::get_if<GaussianMixture>(model)) {
      const AxisStats a = axis_stats(*gm, points);
      out["axis"] = {{"off_axis_ms", a.off_axis_ms}, {"along_axis_ms", a.along_axis_ms}};
    }
    if (const auto* radial = std::get_if<RadialGaussianMixture>(model)) out["ring_rms"] = ring_rms(*radial, points);
  }
  if (manifold) out["manifold_rms"] = reference_rms(*manifold, points);
  return out;
}

}  // namespace mad
