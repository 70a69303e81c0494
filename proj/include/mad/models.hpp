#pragma once

// Analytic probability models with closed-form smoothed scores
//   S(p * g_s)(x) = grad_x log (p * g_s)(x)
// and, where available, closed-form extended scores H_gamma and H_0.
//
// Throughout this header "variance" is the variance s of the isotropic
// Gaussian g_s the model is convolved with (s = sigma^2 for a noise level
// sigma). The per-kind free functions at the bottom keep the
// parameterization of the operation they implement.

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "mad/types.hpp"

namespace mad {

/// Score and its derivative with respect to the smoothing variance.
struct ScoreJet {
  Vec score;
  Vec dvariance;
};

// ---------------------------------------------------------------------------

struct GaussianComponent {
  double weight = 0.0;
  Vec mean;
  Mat covariance;
};

/// Finite Gaussian mixture. Each covariance is diagonalized once at
/// construction, so every evaluation is a rotation plus a diagonal solve
/// against Sigma_i + s I.
class GaussianMixture {
 public:
  explicit GaussianMixture(std::vector<GaussianComponent> components);

  int dim() const { return dim_; }
  std::size_t size() const { return components_.size(); }
  const std::vector<GaussianComponent>& components() const { return components_; }

  Vec score(double variance, const Vec& x) const;
  ScoreJet score_jet(double variance, const Vec& x) const;
  /// (1+g) S(p*g_g) + g d/dg S(p*g_g), closed form.
  Vec extended_score(double gamma, const Vec& x) const;
  /// H_0 p = S p for a density, the gamma -> 0 limit.
  Vec extended_score_limit(const Vec& x) const { return score(0.0, x); }

  /// Posterior component probabilities of the variance-smoothed mixture.
  Vec responsibilities(double variance, const Vec& x) const;

  GaussianMixture smoothed(double variance) const;
  GaussianMixture translated(const Vec& shift) const;

 private:
  struct Spectral {
    Mat basis;        // columns are eigenvectors
    Vec eigenvalues;  // ascending, clamped at 0
    bool isotropic = false;
  };

  ScoreJet evaluate(double variance, const Vec& x, bool with_derivative) const;

  int dim_ = 0;
  std::vector<GaussianComponent> components_;
  std::vector<Spectral> spectra_;
  std::vector<double> log_weights_;
};

// ---------------------------------------------------------------------------

struct DiracAtom {
  double weight = 0.0;
  Vec location;
};

/// Absolute distance tolerance used to decide Voronoi co-membership.
double voronoi_tie_tolerance(const Vec& x);

/// sum_i c_i delta_{mu_i}
class DiracMixture {
 public:
  explicit DiracMixture(std::vector<DiracAtom> atoms);

  int dim() const { return dim_; }
  std::size_t size() const { return atoms_.size(); }
  const std::vector<DiracAtom>& atoms() const { return atoms_; }

  /// -sum_i w_i(x) (x - mu_i) / variance; variance must be > 0.
  Vec score(double variance, const Vec& x) const;
  ScoreJet score_jet(double variance, const Vec& x) const;
  /// gamma S + d/dgamma (gamma S), using the double-sum derivative.
  Vec extended_score(double gamma, const Vec& x) const;
  /// -sum_i z_i(x) (x - mu_i) with Voronoi weights z.
  Vec extended_score_limit(const Vec& x) const;

  /// Indices of every Voronoi cell W_i containing x (ties within
  /// voronoi_tie_tolerance(x)), in ascending order.
  std::vector<std::size_t> nearest_atoms(const Vec& x) const;
  /// z_i(x): 0 outside W_i, 1 in the interior, c_i / sum_{j: x in W_j} c_j on
  /// shared boundaries.
  Vec voronoi_weights(const Vec& x) const;

  Vec responsibilities(double variance, const Vec& x) const;

  /// p * g_variance as a Gaussian mixture (variance > 0).
  GaussianMixture smoothed(double variance) const;
  DiracMixture translated(const Vec& shift) const;

 private:
  int dim_ = 0;
  std::vector<DiracAtom> atoms_;
};

// ---------------------------------------------------------------------------

struct RigidTransform {
  Mat rotation;  // orthogonal d x d
  Vec offset;    // d
};

/// N(mu_1, Sigma_1) on the first d1 canonical coordinates times a Dirac at 0
/// on the remaining d2, optionally moved into ambient space by
/// x = rotation * y + offset.
class DegenerateGaussian {
 public:
  DegenerateGaussian(Vec active_mean, Mat active_covariance, int degenerate_dim,
                     std::optional<RigidTransform> transform = std::nullopt);

  int dim() const { return active_dim() + degenerate_dim_; }
  int active_dim() const { return static_cast<int>(active_mean_.size()); }
  int degenerate_dim() const { return degenerate_dim_; }
  const Vec& active_mean() const { return active_mean_; }
  const Mat& active_covariance() const { return active_covariance_; }
  const std::optional<RigidTransform>& transform() const { return transform_; }

  Vec score(double variance, const Vec& x) const;
  ScoreJet score_jet(double variance, const Vec& x) const;
  Vec extended_score(double gamma, const Vec& x) const;
  /// (-Sigma_1^{-1}(y_1 - mu_1), -y_2) in the canonical frame.
  Vec extended_score_limit(const Vec& x) const;

  GaussianMixture smoothed(double variance) const;
  DegenerateGaussian translated(const Vec& shift) const;

 private:
  Vec to_canonical(const Vec& x) const;
  Vec to_ambient_direction(const Vec& v) const;

  Vec active_mean_;
  Mat active_covariance_;
  int degenerate_dim_ = 0;
  std::optional<RigidTransform> transform_;
  GaussianMixture active_;  // single component N(mu_1, Sigma_1)
};

// ---------------------------------------------------------------------------

using Factor = std::variant<GaussianMixture, DiracMixture, DegenerateGaussian>;

/// Product measure over contiguous coordinate blocks, in factor order.
class ProductModel {
 public:
  explicit ProductModel(std::vector<Factor> factors);

  int dim() const { return dim_; }
  const std::vector<Factor>& factors() const { return factors_; }
  /// First coordinate of each block.
  const std::vector<int>& offsets() const { return offsets_; }

 private:
  std::vector<Factor> factors_;
  std::vector<int> offsets_;
  int dim_ = 0;
};

// ---------------------------------------------------------------------------

/// p(x) ~ sum_i exp(-(|x - mu_i| - r)^2 / (2 v)) in R^2, realized as an
/// equal-weight mixture of isotropic Gaussians placed on each ring.
class RadialGaussianMixture {
 public:
  static constexpr int kDefaultQuadraturePoints = 256;

  RadialGaussianMixture(std::vector<Vec> centers, double radius, double variance,
                        int quadrature_points = kDefaultQuadraturePoints);

  int dim() const { return 2; }
  const std::vector<Vec>& centers() const { return centers_; }
  double radius() const { return radius_; }
  double variance() const { return variance_; }
  int quadrature_points() const { return quadrature_points_; }
  const GaussianMixture& mixture() const { return mixture_; }

 private:
  std::vector<Vec> centers_;
  double radius_;
  double variance_;
  int quadrature_points_;
  GaussianMixture mixture_;
};

// ---------------------------------------------------------------------------
// Type-erased model.

using Model = std::variant<GaussianMixture, DiracMixture, DegenerateGaussian, ProductModel,
                           RadialGaussianMixture>;

int model_dim(const Model& model);
const char* model_kind(const Model& model);

Vec smoothed_score(const Model& model, double variance, const Vec& x);
ScoreJet smoothed_score_jet(const Model& model, double variance, const Vec& x);
Vec extended_score(const Model& model, double gamma, const Vec& x);
Vec extended_score_limit(const Model& model, const Vec& x);

/// The model convolved with g_variance.
Model smoothed_model(const Model& model, double variance);
/// The model pushed forward by x -> x + shift.
Model translated_model(const Model& model, const Vec& shift);

/// Centers of the modes, used for per-basin reporting: component means,
/// atom locations, radial centers. Products take the Cartesian product of
/// their factors' modes, first factor varying slowest.
std::vector<Vec> model_modes(const Model& model);

// ---------------------------------------------------------------------------
// Operations under their contract names.

/// grad log (p0 * g_{sigma^2})(x).
Vec gm_smoothed_score(const GaussianMixture& model, double sigma, const Vec& x);
/// S(p * g_gamma)(x), gamma a variance.
Vec dirac_smoothed_score(const DiracMixture& model, double gamma, const Vec& x);
Vec dirac_h_gamma(const DiracMixture& model, double gamma, const Vec& x);
Vec dirac_h0(const DiracMixture& model, const Vec& x);
Vec degenerate_h0(const DegenerateGaussian& model, const Vec& x);

enum class ScoreKind { kSmoothed, kExtended, kExtendedLimit };

struct ScoreRequest {
  ScoreKind kind = ScoreKind::kSmoothed;
  double variance = 0.0;  // smoothing variance, or gamma for kExtended

  static ScoreRequest smoothed_sigma(double sigma) { return {ScoreKind::kSmoothed, sigma * sigma}; }
  static ScoreRequest smoothed_variance(double variance) { return {ScoreKind::kSmoothed, variance}; }
  static ScoreRequest h_gamma(double gamma) { return {ScoreKind::kExtended, gamma}; }
  static ScoreRequest h0() { return {ScoreKind::kExtendedLimit, 0.0}; }
};

/// Concatenation of the per-block evaluations.
Vec product_score(const ProductModel& model, const ScoreRequest& request, const Vec& x);

GaussianMixture radial_as_mixture(const RadialGaussianMixture& model);

}  // namespace mad
