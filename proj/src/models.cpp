#include "mad/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "mad/error.hpp"

namespace mad {

namespace {

constexpr double kWeightSumTolerance = 1e-12;
constexpr double kSymmetryTolerance = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(const Vec& x, const char* what) {
  if (!x.allFinite()) throw_bad_input(std::string(what) + " must be finite");
}

void require_dim(const Vec& x, int dim, const char* what) {
  if (x.size() != dim) {
    throw_bad_input(std::string(what) + " has the wrong dimension",
                    {{"expected", dim}, {"actual", x.size()}});
  }
}

void check_weights(const std::vector<double>& weights, const char* what) {
  if (weights.empty()) throw_bad_input(std::string(what) + " must have at least one entry");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw_bad_input(std::string(what) + " weights must be strictly positive", {{"weight", w}});
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw_bad_input(std::string(what) + " weights must sum to 1", {{"sum", sum}});
  }
}

// Normalizes log-terms in place into probabilities (log-sum-exp).
void normalize_log_terms(Vec& log_terms) {
  const double top = log_terms.maxCoeff();
  log_terms = (log_terms.array() - top).exp();
  log_terms /= log_terms.sum();
}

void check_variance(double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw_bad_input("smoothing variance must be finite and >= 0", {{"variance", variance}});
  }
}

}  // namespace

// ===========================================================================
// GaussianMixture

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw_bad_input("gaussian mixture needs at least one component");
  dim_ = static_cast<int>(components_.front().mean.size());
  if (dim_ < 1) throw_bad_input("gaussian mixture dimension must be positive");

  std::vector<double> weights;
  for (const auto& c : components_) weights.push_back(c.weight);
  check_weights(weights, "gaussian mixture");

  spectra_.reserve(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    if (c.mean.size() != dim_ || c.covariance.rows() != dim_ || c.covariance.cols() != dim_) {
      throw_bad_input("gaussian mixture components must share one dimension", {{"component", k}});
    }
    require_finite(c.mean, "component mean");
    if (!c.covariance.allFinite()) throw_bad_input("component covariance must be finite");
    const double scale = std::max(1.0, c.covariance.cwiseAbs().maxCoeff());
    if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
      throw_bad_input("covariance must be symmetric", {{"component", k}});
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (c.covariance + c.covariance.transpose()));
    Spectral s;
    s.eigenvalues = eig.eigenvalues();
    s.basis = eig.eigenvectors();
    if (s.eigenvalues.minCoeff() < -kSymmetryTolerance * scale) {
      throw_bad_input("covariance must be positive semi-definite",
                      {{"component", k}, {"min_eigenvalue", s.eigenvalues.minCoeff()}});
    }
    // Rounding-level eigenvalues count as exact zeros: the component is
    // singular and cannot be evaluated unsmoothed.
    for (auto& lambda : s.eigenvalues) {
      if (lambda <= kSymmetryTolerance * scale) lambda = 0.0;
    }
    const Mat diag = Mat(c.covariance.diagonal().asDiagonal());
    s.isotropic = (c.covariance - diag).cwiseAbs().maxCoeff() == 0.0 &&
                  c.covariance.diagonal().maxCoeff() == c.covariance.diagonal().minCoeff();
    if (s.isotropic) {
      s.eigenvalues = c.covariance.diagonal();
      s.basis = Mat::Identity(dim_, dim_);
    }
    spectra_.push_back(std::move(s));
    log_weights_.push_back(std::log(c.weight));
  }
}

ScoreJet GaussianMixture::evaluate(double variance, const Vec& x, bool with_derivative) const {
  check_variance(variance);
  require_dim(x, dim_, "x");
  require_finite(x, "x");

  const std::size_t n = components_.size();
  Vec log_terms(n);
  Vec dlog_terms = Vec::Zero(n);
  Mat grads(dim_, n);
  Mat dgrads = with_derivative ? Mat(dim_, n) : Mat();
  Vec y(dim_);
  Vec inv(dim_);

  for (std::size_t k = 0; k < n; ++k) {
    const auto& s = spectra_[k];
    const Vec r = x - components_[k].mean;
    if (s.isotropic) {
      y = r;
    } else {
      y.noalias() = s.basis.transpose() * r;
    }
    const Vec shifted = s.eigenvalues.array() + variance;
    if (shifted.minCoeff() <= 0.0) {
      throw Error(ErrorKind::kNumerical, "degenerate at sigma zero",
                  {{"component", k}, {"variance", variance}});
    }
    inv = shifted.cwiseInverse();
    const Vec scaled = y.cwiseProduct(inv);  // C^{-1} r in the eigenbasis
    const double quad = y.dot(scaled);
    const double logdet = shifted.array().log().sum();
    log_terms[k] = log_weights_[k] - 0.5 * quad - 0.5 * logdet;
    if (s.isotropic) {
      grads.col(k) = -scaled;
    } else {
      grads.col(k).noalias() = -(s.basis * scaled);
    }
    if (with_derivative) {
      const Vec scaled2 = scaled.cwiseProduct(inv);  // C^{-2} r
      dlog_terms[k] = 0.5 * scaled.squaredNorm() - 0.5 * inv.sum();
      if (s.isotropic) {
        dgrads.col(k) = scaled2;
      } else {
        dgrads.col(k).noalias() = s.basis * scaled2;
      }
    }
  }

  normalize_log_terms(log_terms);
  const Vec& w = log_terms;
  ScoreJet out;
  out.score = grads * w;
  if (with_derivative) {
    const double mean_dlog = w.dot(dlog_terms);
    const Vec dw = w.cwiseProduct((dlog_terms.array() - mean_dlog).matrix());
    out.dvariance = dgrads * w + grads * dw;
  }
  return out;
}

Vec GaussianMixture::score(double variance, const Vec& x) const {
  return evaluate(variance, x, false).score;
}

ScoreJet GaussianMixture::score_jet(double variance, const Vec& x) const {
  return evaluate(variance, x, true);
}

Vec GaussianMixture::extended_score(double gamma, const Vec& x) const {
  if (!(gamma > 0.0)) throw_bad_input("gamma must be > 0", {{"gamma", gamma}});
  const ScoreJet jet = score_jet(gamma, x);
  return (1.0 + gamma) * jet.score + gamma * jet.dvariance;
}

Vec GaussianMixture::responsibilities(double variance, const Vec& x) const {
  check_variance(variance);
  require_dim(x, dim_, "x");
  Vec log_terms(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& s = spectra_[k];
    const Vec r = x - components_[k].mean;
    const Vec y = s.isotropic ? r : Vec(s.basis.transpose() * r);
    const Vec shifted = s.eigenvalues.array() + variance;
    if (shifted.minCoeff() <= 0.0) {
      throw Error(ErrorKind::kNumerical, "degenerate at sigma zero", {{"component", k}});
    }
    log_terms[k] = log_weights_[k] - 0.5 * y.cwiseProduct(shifted.cwiseInverse()).dot(y) -
                   0.5 * shifted.array().log().sum();
  }
  normalize_log_terms(log_terms);
  return log_terms;
}

GaussianMixture GaussianMixture::smoothed(double variance) const {
  check_variance(variance);
  auto comps = components_;
  for (auto& c : comps) c.covariance += variance * Mat::Identity(dim_, dim_);
  return GaussianMixture(std::move(comps));
}

GaussianMixture GaussianMixture::translated(const Vec& shift) const {
  require_dim(shift, dim_, "shift");
  auto comps = components_;
  for (auto& c : comps) c.mean += shift;
  return GaussianMixture(std::move(comps));
}

// ===========================================================================
// DiracMixture

double voronoi_tie_tolerance(const Vec& x) {
  return 1e-9 * (1.0 + x.norm());
}

DiracMixture::DiracMixture(std::vector<DiracAtom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw_bad_input("dirac mixture needs at least one atom");
  dim_ = static_cast<int>(atoms_.front().location.size());
  if (dim_ < 1) throw_bad_input("dirac mixture dimension must be positive");
  std::vector<double> weights;
  for (const auto& a : atoms_) {
    weights.push_back(a.weight);
    require_dim(a.location, dim_, "atom location");
    require_finite(a.location, "atom location");
  }
  check_weights(weights, "dirac mixture");
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    for (std::size_t j = i + 1; j < atoms_.size(); ++j) {
      if ((atoms_[i].location - atoms_[j].location).norm() == 0.0) {
        throw_bad_input("dirac atom locations must be pairwise distinct", {{"i", i}, {"j", j}});
      }
    }
  }
}

Vec DiracMixture::responsibilities(double variance, const Vec& x) const {
  if (!(variance > 0.0)) throw_bad_input("gamma must be > 0", {{"gamma", variance}});
  require_dim(x, dim_, "x");
  require_finite(x, "x");
  Vec log_terms(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    log_terms[i] = std::log(atoms_[i].weight) -
                   (x - atoms_[i].location).squaredNorm() / (2.0 * variance);
  }
  normalize_log_terms(log_terms);
  return log_terms;
}

Vec DiracMixture::score(double variance, const Vec& x) const {
  const Vec w = responsibilities(variance, x);
  Vec out = Vec::Zero(dim_);
  for (std::size_t i = 0; i < atoms_.size(); ++i) out -= w[i] * (x - atoms_[i].location);
  return out / variance;
}

ScoreJet DiracMixture::score_jet(double variance, const Vec& x) const {
  const Vec w = responsibilities(variance, x);
  const std::size_t n = atoms_.size();
  Vec sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (x - atoms_[i].location).squaredNorm();
  const double mean_sq = w.dot(sq);
  Vec weighted = Vec::Zero(dim_);  // sum w_i r_i
  Vec spread = Vec::Zero(dim_);    // sum w_i r_i (D_i - mean D)
  for (std::size_t i = 0; i < n; ++i) {
    const Vec r = x - atoms_[i].location;
    weighted += w[i] * r;
    spread += w[i] * (sq[i] - mean_sq) * r;
  }
  ScoreJet out;
  out.score = -weighted / variance;
  // d/ds [-sum w_i r_i / s] with dw_i/ds = w_i (D_i - mean D) / (2 s^2)
  out.dvariance = weighted / (variance * variance) - spread / (2.0 * variance * variance * variance);
  return out;
}

Vec DiracMixture::extended_score(double gamma, const Vec& x) const {
  const Vec w = responsibilities(gamma, x);
  const std::size_t n = atoms_.size();
  Vec sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (x - atoms_[i].location).squaredNorm();
  const double mean_sq = w.dot(sq);
  Vec out = Vec::Zero(dim_);
  // gamma S = -sum w_i r_i; d/dgamma (gamma S) is the double sum
  // -sum_{i,j} w_i w_j r_i (D_i - D_j) / (2 gamma^2).
  for (std::size_t i = 0; i < n; ++i) {
    const Vec r = x - atoms_[i].location;
    out -= w[i] * (1.0 + (sq[i] - mean_sq) / (2.0 * gamma * gamma)) * r;
  }
  return out;
}

std::vector<std::size_t> DiracMixture::nearest_atoms(const Vec& x) const {
  require_dim(x, dim_, "x");
  std::vector<double> dist(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) dist[i] = (x - atoms_[i].location).norm();
  const double best = *std::min_element(dist.begin(), dist.end());
  const double tol = voronoi_tie_tolerance(x);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (dist[i] - best <= tol) out.push_back(i);
  }
  return out;
}

Vec DiracMixture::voronoi_weights(const Vec& x) const {
  const auto cells = nearest_atoms(x);
  double total = 0.0;
  for (auto i : cells) total += atoms_[i].weight;
  Vec z = Vec::Zero(static_cast<Eigen::Index>(atoms_.size()));
  if (cells.size() == 1) {
    z[static_cast<Eigen::Index>(cells.front())] = 1.0;
  } else {
    for (auto i : cells) z[static_cast<Eigen::Index>(i)] = atoms_[i].weight / total;
  }
  return z;
}

Vec DiracMixture::extended_score_limit(const Vec& x) const {
  require_finite(x, "x");
  const Vec z = voronoi_weights(x);
  Vec out = Vec::Zero(dim_);
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (z[static_cast<Eigen::Index>(i)] != 0.0) out -= z[static_cast<Eigen::Index>(i)] * (x - atoms_[i].location);
  }
  return out;
}

GaussianMixture DiracMixture::smoothed(double variance) const {
  if (!(variance > 0.0)) throw_bad_input("dirac mixture can only be smoothed with variance > 0");
  std::vector<GaussianComponent> comps;
  for (const auto& a : atoms_) comps.push_back({a.weight, a.location, variance * Mat::Identity(dim_, dim_)});
  return GaussianMixture(std::move(comps));
}

DiracMixture DiracMixture::translated(const Vec& shift) const {
  require_dim(shift, dim_, "shift");
  auto atoms = atoms_;
  for (auto& a : atoms) a.location += shift;
  return DiracMixture(std::move(atoms));
}

// ===========================================================================
// DegenerateGaussian

DegenerateGaussian::DegenerateGaussian(Vec active_mean, Mat active_covariance, int degenerate_dim,
                                       std::optional<RigidTransform> transform)
    : active_mean_(std::move(active_mean)),
      active_covariance_(std::move(active_covariance)),
      degenerate_dim_(degenerate_dim),
      transform_(std::move(transform)),
      active_(std::vector<GaussianComponent>{{1.0, active_mean_, active_covariance_}}) {
  if (active_mean_.size() < 1) throw_bad_input("degenerate gaussian needs an active dimension >= 1");
  if (degenerate_dim_ < 0) throw_bad_input("degenerate dimension must be >= 0");
  Eigen::SelfAdjointEigenSolver<Mat> eig(active_covariance_);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw_bad_input("active covariance must be positive definite",
                    {{"min_eigenvalue", eig.eigenvalues().minCoeff()}});
  }
  if (transform_) {
    const int d = dim();
    if (transform_->rotation.rows() != d || transform_->rotation.cols() != d ||
        transform_->offset.size() != d) {
      throw_bad_input("rigid transform has the wrong shape");
    }
    const Mat gram = transform_->rotation.transpose() * transform_->rotation;
    if ((gram - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10) {
      throw_bad_input("rotation matrix must be orthogonal");
    }
  }
}

Vec DegenerateGaussian::to_canonical(const Vec& x) const {
  require_dim(x, dim(), "x");
  require_finite(x, "x");
  if (!transform_) return x;
  return transform_->rotation.transpose() * (x - transform_->offset);
}

Vec DegenerateGaussian::to_ambient_direction(const Vec& v) const {
  if (!transform_) return v;
  return transform_->rotation * v;
}

ScoreJet DegenerateGaussian::score_jet(double variance, const Vec& x) const {
  if (degenerate_dim_ > 0 && !(variance > 0.0)) {
    throw_bad_input("degenerate gaussian can only be smoothed with variance > 0");
  }
  const Vec y = to_canonical(x);
  const int d1 = active_dim();
  const ScoreJet active = active_.score_jet(variance, y.head(d1));
  ScoreJet out{Vec(dim()), Vec(dim())};
  out.score.head(d1) = active.score;
  out.dvariance.head(d1) = active.dvariance;
  if (degenerate_dim_ > 0) {
    const Vec y2 = y.tail(degenerate_dim_);
    out.score.tail(degenerate_dim_) = -y2 / variance;
    out.dvariance.tail(degenerate_dim_) = y2 / (variance * variance);
  }
  out.score = to_ambient_direction(out.score);
  out.dvariance = to_ambient_direction(out.dvariance);
  return out;
}

Vec DegenerateGaussian::score(double variance, const Vec& x) const {
  return score_jet(variance, x).score;
}

Vec DegenerateGaussian::extended_score(double gamma, const Vec& x) const {
  if (!(gamma > 0.0)) throw_bad_input("gamma must be > 0", {{"gamma", gamma}});
  const Vec y = to_canonical(x);
  const int d1 = active_dim();
  Vec out(dim());
  out.head(d1) = active_.extended_score(gamma, y.head(d1));
  // The Dirac block has H_gamma delta(y) = -y for every gamma.
  out.tail(degenerate_dim_) = -y.tail(degenerate_dim_);
  return to_ambient_direction(out);
}

Vec DegenerateGaussian::extended_score_limit(const Vec& x) const {
  const Vec y = to_canonical(x);
  const int d1 = active_dim();
  Vec out(dim());
  out.head(d1) = active_covariance_.ldlt().solve(-(y.head(d1) - active_mean_));
  out.tail(degenerate_dim_) = -y.tail(degenerate_dim_);
  return to_ambient_direction(out);
}

GaussianMixture DegenerateGaussian::smoothed(double variance) const {
  if (degenerate_dim_ > 0 && !(variance > 0.0)) {
    throw_bad_input("degenerate gaussian can only be smoothed with variance > 0");
  }
  const int d = dim();
  const int d1 = active_dim();
  Mat cov = Mat::Zero(d, d);
  cov.topLeftCorner(d1, d1) = active_covariance_;
  cov += variance * Mat::Identity(d, d);
  Vec mean = Vec::Zero(d);
  mean.head(d1) = active_mean_;
  if (transform_) {
    cov = transform_->rotation * cov * transform_->rotation.transpose();
    cov = 0.5 * (cov + cov.transpose());
    mean = transform_->rotation * mean + transform_->offset;
  }
  return GaussianMixture(std::vector<GaussianComponent>{{1.0, mean, cov}});
}

DegenerateGaussian DegenerateGaussian::translated(const Vec& shift) const {
  require_dim(shift, dim(), "shift");
  RigidTransform t = transform_.value_or(RigidTransform{Mat::Identity(dim(), dim()), Vec::Zero(dim())});
  t.offset += shift;
  return DegenerateGaussian(active_mean_, active_covariance_, degenerate_dim_, t);
}

// ===========================================================================
// ProductModel

namespace {

int factor_dim(const Factor& f) {
  return std::visit([](const auto& m) { return m.dim(); }, f);
}

}  // namespace

ProductModel::ProductModel(std::vector<Factor> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw_bad_input("product model needs at least one factor");
  for (const auto& f : factors_) {
    offsets_.push_back(dim_);
    dim_ += factor_dim(f);
  }
}

Vec product_score(const ProductModel& model, const ScoreRequest& request, const Vec& x) {
  require_dim(x, model.dim(), "x");
  Vec out(model.dim());
  for (std::size_t k = 0; k < model.factors().size(); ++k) {
    const Factor& f = model.factors()[k];
    const int offset = model.offsets()[k];
    const int d = factor_dim(f);
    const Vec block = x.segment(offset, d);
    out.segment(offset, d) = std::visit(
        [&](const auto& m) -> Vec {
          switch (request.kind) {
            case ScoreKind::kSmoothed:
              return m.score(request.variance, block);
            case ScoreKind::kExtended:
              return m.extended_score(request.variance, block);
            case ScoreKind::kExtendedLimit:
              return m.extended_score_limit(block);
          }
          return Vec();
        },
        f);
  }
  return out;
}

namespace {

ScoreJet product_jet(const ProductModel& model, double variance, const Vec& x) {
  require_dim(x, model.dim(), "x");
  ScoreJet out{Vec(model.dim()), Vec(model.dim())};
  for (std::size_t k = 0; k < model.factors().size(); ++k) {
    const Factor& f = model.factors()[k];
    const int offset = model.offsets()[k];
    const int d = factor_dim(f);
    const ScoreJet jet = std::visit([&](const auto& m) { return m.score_jet(variance, x.segment(offset, d)); }, f);
    out.score.segment(offset, d) = jet.score;
    out.dvariance.segment(offset, d) = jet.dvariance;
  }
  return out;
}

}  // namespace

// ===========================================================================
// RadialGaussianMixture

namespace {

GaussianMixture build_radial(const std::vector<Vec>& centers, double radius, double variance, int points) {
  if (centers.empty()) throw_bad_input("radial mixture needs at least one center");
  for (const auto& c : centers) {
    if (c.size() != 2) throw_bad_input("radial centers must lie in R^2");
    require_finite(c, "radial center");
  }
  if (!(radius > 0.0)) throw_bad_input("radial radius must be > 0", {{"radius", radius}});
  if (!(variance > 0.0)) throw_bad_input("radial variance must be > 0", {{"variance", variance}});
  if (points < 16) throw_bad_input("radial quadrature needs at least 16 points", {{"points", points}});
  const double weight = 1.0 / (static_cast<double>(centers.size()) * points);
  std::vector<GaussianComponent> comps;
  comps.reserve(centers.size() * static_cast<std::size_t>(points));
  const Mat cov = variance * Mat::Identity(2, 2);
  for (const auto& c : centers) {
    for (int k = 0; k < points; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / points;
      Vec mean(2);
      mean << c[0] + radius * std::cos(angle), c[1] + radius * std::sin(angle);
      comps.push_back({weight, mean, cov});
    }
  }
  // 1/(K N) summed K N times can miss 1 by a few ulps.
  double total = 0.0;
  for (const auto& c : comps) total += c.weight;
  for (auto& c : comps) c.weight /= total;
  return GaussianMixture(std::move(comps));
}

}  // namespace

RadialGaussianMixture::RadialGaussianMixture(std::vector<Vec> centers, double radius, double variance,
                                             int quadrature_points)
    : centers_(std::move(centers)),
      radius_(radius),
      variance_(variance),
      quadrature_points_(quadrature_points),
      mixture_(build_radial(centers_, radius_, variance_, quadrature_points_)) {}

// ===========================================================================
// Type-erased dispatch

int model_dim(const Model& model) {
  return std::visit([](const auto& m) { return m.dim(); }, model);
}

const char* model_kind(const Model& model) {
  return std::visit(Overloaded{
                        [](const GaussianMixture&) { return "gaussian_mixture"; },
                        [](const DiracMixture&) { return "dirac_mixture"; },
                        [](const DegenerateGaussian&) { return "degenerate_gaussian"; },
                        [](const ProductModel&) { return "product"; },
                        [](const RadialGaussianMixture&) { return "radial"; },
                    },
                    model);
}

ScoreJet smoothed_score_jet(const Model& model, double variance, const Vec& x) {
  return std::visit(Overloaded{
                        [&](const ProductModel& m) { return product_jet(m, variance, x); },
                        [&](const RadialGaussianMixture& m) { return m.mixture().score_jet(variance, x); },
                        [&](const auto& m) { return m.score_jet(variance, x); },
                    },
                    model);
}

Vec smoothed_score(const Model& model, double variance, const Vec& x) {
  return std::visit(Overloaded{
                        [&](const ProductModel& m) {
                          return product_score(m, ScoreRequest::smoothed_variance(variance), x);
                        },
                        [&](const RadialGaussianMixture& m) { return m.mixture().score(variance, x); },
                        [&](const auto& m) { return m.score(variance, x); },
                    },
                    model);
}

Vec extended_score(const Model& model, double gamma, const Vec& x) {
  return std::visit(Overloaded{
                        [&](const ProductModel& m) { return product_score(m, ScoreRequest::h_gamma(gamma), x); },
                        [&](const RadialGaussianMixture& m) { return m.mixture().extended_score(gamma, x); },
                        [&](const auto& m) { return m.extended_score(gamma, x); },
                    },
                    model);
}

Vec extended_score_limit(const Model& model, const Vec& x) {
  return std::visit(Overloaded{
                        [&](const ProductModel& m) { return product_score(m, ScoreRequest::h0(), x); },
                        [&](const RadialGaussianMixture& m) { return m.mixture().extended_score_limit(x); },
                        [&](const auto& m) { return m.extended_score_limit(x); },
                    },
                    model);
}

Model smoothed_model(const Model& model, double variance) {
  return std::visit(Overloaded{
                        [&](const GaussianMixture& m) -> Model { return m.smoothed(variance); },
                        [&](const DiracMixture& m) -> Model { return m.smoothed(variance); },
                        [&](const DegenerateGaussian& m) -> Model { return m.smoothed(variance); },
                        [&](const RadialGaussianMixture& m) -> Model { return m.mixture().smoothed(variance); },
                        [&](const ProductModel& m) -> Model {
                          std::vector<Factor> factors;
                          for (const auto& f : m.factors()) {
                            factors.emplace_back(std::visit(
                                [&](const auto& fm) -> Factor { return fm.smoothed(variance); }, f));
                          }
                          return ProductModel(std::move(factors));
                        },
                    },
                    model);
}

Model translated_model(const Model& model, const Vec& shift) {
  require_dim(shift, model_dim(model), "shift");
  return std::visit(Overloaded{
                        [&](const RadialGaussianMixture& m) -> Model {
                          auto centers = m.centers();
                          for (auto& c : centers) c += shift;
                          return RadialGaussianMixture(std::move(centers), m.radius(), m.variance(),
                                                       m.quadrature_points());
                        },
                        [&](const ProductModel& m) -> Model {
                          std::vector<Factor> factors;
                          for (std::size_t k = 0; k < m.factors().size(); ++k) {
                            const Factor& f = m.factors()[k];
                            const Vec block = shift.segment(m.offsets()[k], factor_dim(f));
                            factors.emplace_back(
                                std::visit([&](const auto& fm) -> Factor { return fm.translated(block); }, f));
                          }
                          return ProductModel(std::move(factors));
                        },
                        [&](const auto& m) -> Model { return m.translated(shift); },
                    },
                    model);
}

namespace {

std::vector<Vec> factor_modes(const Factor& f) {
  return std::visit(Overloaded{
                        [](const GaussianMixture& m) {
                          std::vector<Vec> out;
                          for (const auto& c : m.components()) out.push_back(c.mean);
                          return out;
                        },
                        [](const DiracMixture& m) {
                          std::vector<Vec> out;
                          for (const auto& a : m.atoms()) out.push_back(a.location);
                          return out;
                        },
                        [](const DegenerateGaussian& m) {
                          Vec mean = Vec::Zero(m.dim());
                          mean.head(m.active_dim()) = m.active_mean();
                          if (m.transform()) mean = m.transform()->rotation * mean + m.transform()->offset;
                          return std::vector<Vec>{mean};
                        },
                    },
                    f);
}

}  // namespace

std::vector<Vec> model_modes(const Model& model) {
  return std::visit(Overloaded{
                        [](const GaussianMixture& m) { return factor_modes(m); },
                        [](const DiracMixture& m) { return factor_modes(m); },
                        [](const DegenerateGaussian& m) { return factor_modes(m); },
                        [](const RadialGaussianMixture& m) { return m.centers(); },
                        [](const ProductModel& m) {
                          // Cartesian product of the factor modes.
                          std::vector<Vec> out{Vec(0)};
                          for (const auto& f : m.factors()) {
                            const auto modes = factor_modes(f);
                            std::vector<Vec> next;
                            for (const auto& prefix : out) {
                              for (const auto& mode : modes) {
                                Vec joined(prefix.size() + mode.size());
                                joined << prefix, mode;
                                next.push_back(std::move(joined));
                              }
                            }
                            out = std::move(next);
                          }
                          return out;
                        },
                    },
                    model);
}

// ===========================================================================
// Contract-named operations

Vec gm_smoothed_score(const GaussianMixture& model, double sigma, const Vec& x) {
  if (!(sigma >= 0.0)) throw_bad_input("sigma must be >= 0", {{"sigma", sigma}});
  return model.score(sigma * sigma, x);
}

Vec dirac_smoothed_score(const DiracMixture& model, double gamma, const Vec& x) {
  return model.score(gamma, x);
}

Vec dirac_h_gamma(const DiracMixture& model, double gamma, const Vec& x) {
  return model.extended_score(gamma, x);
}

Vec dirac_h0(const DiracMixture& model, const Vec& x) {
  return model.extended_score_limit(x);
}

Vec degenerate_h0(const DegenerateGaussian& model, const Vec& x) {
  return model.extended_score_limit(x);
}

GaussianMixture radial_as_mixture(const RadialGaussianMixture& model) {
  return model.mixture();
}

}  // namespace mad
