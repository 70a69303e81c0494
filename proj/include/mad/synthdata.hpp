#pragma once

// Toy target distributions from the figure experiments and noisy-manifold
// training sets.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mad/metrics.hpp"
#include "mad/models.hpp"
#include "mad/types.hpp"

namespace mad {

enum class DatasetKind { kFig1LineMixture, kFig2aTilted, kFig2bRadial, kManifoldNoisy };
enum class ManifoldKind { kLine, kCircle };

const char* dataset_kind_name(DatasetKind kind);
DatasetKind parse_dataset_kind(const std::string& name);
const char* manifold_kind_name(ManifoldKind kind);
ManifoldKind parse_manifold_kind(const std::string& name);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kFig1LineMixture;
  int count = 1000;
  std::uint64_t seed = 0;

  // fig2a: components with covariance R diag(1.7, 0.2) R^T, means uniform in
  // [-mean_box, mean_box]^2, rotation angles uniform in [0, pi).
  int components = 21;
  double mean_box = 20.0;

  // fig2b: centers uniform in [-center_box, center_box]^2. min_spacing > 0
  // turns on rejection of centers closer than that.
  int centers = 5;
  double center_box = 30.0;
  double radius = 10.0;
  double radial_variance = 2.5;
  double min_spacing = 0.0;
  int quadrature_points = RadialGaussianMixture::kDefaultQuadraturePoints;

  // manifold_noisy: the segment [-half_length, half_length] e_1 or the circle
  // of radius manifold_radius in the (e_1, e_2) plane, plus N(0, noise_std^2 I).
  ManifoldKind manifold = ManifoldKind::kLine;
  int ambient_dim = 2;
  double noise_std = 0.1;
  double half_length = 2.0;
  double manifold_radius = 1.0;

  void validate() const;
};

nlohmann::json dataset_spec_to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

/// Analytic model for the figure kinds; throws kBadInput for manifold_noisy,
/// which has no closed-form density.
Model build_model(const DatasetSpec& spec);

/// spec.count seed-deterministic points.
std::vector<Vec> sample_dataset(const DatasetSpec& spec);

/// Exact samples from an analytic model. Radial models are sampled through
/// their discretized mixture.
std::vector<Vec> sample_model(const Model& model, int count, std::uint64_t seed);

/// The clean manifold of a manifold_noisy spec.
ReferenceSet manifold_reference(const DatasetSpec& spec);

/// Line through each component mean along its leading covariance eigenvector.
std::vector<AffineSubspace> principal_axes(const GaussianMixture& model);

/// Index of the component with the largest unsmoothed responsibility.
std::size_t assign_component(const GaussianMixture& model, const Vec& x);

}  // namespace mad
