#pragma once

// Endpoint statistics used by batch summaries, sweeps and the acceptance
// harness.

#include <optional>
#include <vector>

#include <json.hpp>

#include "mad/metrics.hpp"
#include "mad/models.hpp"
#include "mad/types.hpp"

namespace mad {

struct AxisStats {
  double off_axis_ms = 0.0;    // mean squared distance to the assigned component's principal axis
  double along_axis_ms = 0.0;  // mean squared offset from the component mean along that axis
};

/// Each point is assigned to its most responsible component.
AxisStats axis_stats(const GaussianMixture& model, const std::vector<Vec>& points);

/// RMS over points of | |x - nearest center| - r |.
double ring_rms(const RadialGaussianMixture& model, const std::vector<Vec>& points);

/// RMS distance to a reference set.
double reference_rms(const ReferenceSet& set, const std::vector<Vec>& points);

/// Per-basin moments for the model's modes, plus whichever of the above
/// applies to the model and the optional clean manifold.
nlohmann::json analyze_endpoints(const std::vector<Vec>& points, const Model* model,
                                 const std::optional<ReferenceSet>& manifold);

nlohmann::json vec_to_json(const Vec& v);

}  // namespace mad
