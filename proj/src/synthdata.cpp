#include "mad/synthdata.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "mad/error.hpp"
#include "mad/rng.hpp"

namespace mad {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

Mat rotation2(double angle) {
  Mat r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

std::size_t pick(CounterRng& rng, const std::vector<double>& weights) {
  double u = rng.uniform();
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

Mat sqrt_psd(const Mat& cov) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

struct FactorSampler {
  virtual ~FactorSampler() = default;
  virtual Vec draw(CounterRng& rng) const = 0;
};

struct GmSampler final : FactorSampler {
  explicit GmSampler(const GaussianMixture& gm) {
    for (const auto& c : gm.components()) {
      weights.push_back(c.weight);
      means.push_back(c.mean);
      roots.push_back(sqrt_psd(c.covariance));
    }
  }
  Vec draw(CounterRng& rng) const override {
    const std::size_t i = pick(rng, weights);
    return means[i] + roots[i] * rng.normal_vector(static_cast<int>(means[i].size()));
  }
  std::vector<double> weights;
  std::vector<Vec> means;
  std::vector<Mat> roots;
};

struct DiracSampler final : FactorSampler {
  explicit DiracSampler(const DiracMixture& dm) {
    for (const auto& a : dm.atoms()) {
      weights.push_back(a.weight);
      locations.push_back(a.location);
    }
  }
  Vec draw(CounterRng& rng) const override { return locations[pick(rng, weights)]; }
  std::vector<double> weights;
  std::vector<Vec> locations;
};

struct DegenerateSampler final : FactorSampler {
  explicit DegenerateSampler(const DegenerateGaussian& dg) : model(dg), root(sqrt_psd(dg.active_covariance())) {}
  Vec draw(CounterRng& rng) const override {
    Vec y = Vec::Zero(model.dim());
    y.head(model.active_dim()) = model.active_mean() + root * rng.normal_vector(model.active_dim());
    if (!model.transform()) return y;
    return model.transform()->rotation * y + model.transform()->offset;
  }
  const DegenerateGaussian& model;
  Mat root;
};

std::unique_ptr<FactorSampler> make_sampler(const Factor& f) {
  return std::visit(Overloaded{
                        [](const GaussianMixture& m) -> std::unique_ptr<FactorSampler> {
                          return std::make_unique<GmSampler>(m);
                        },
                        [](const DiracMixture& m) -> std::unique_ptr<FactorSampler> {
                          return std::make_unique<DiracSampler>(m);
                        },
                        [](const DegenerateGaussian& m) -> std::unique_ptr<FactorSampler> {
                          return std::make_unique<DegenerateSampler>(m);
                        },
                    },
                    f);
}

}  // namespace

const char* dataset_kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kFig1LineMixture: return "fig1_line_mixture";
    case DatasetKind::kFig2aTilted: return "fig2a_tilted";
    case DatasetKind::kFig2bRadial: return "fig2b_radial";
    case DatasetKind::kManifoldNoisy: return "manifold_noisy";
  }
  return "?";
}

DatasetKind parse_dataset_kind(const std::string& name) {
  for (auto k : {DatasetKind::kFig1LineMixture, DatasetKind::kFig2aTilted, DatasetKind::kFig2bRadial,
                 DatasetKind::kManifoldNoisy}) {
    if (name == dataset_kind_name(k)) return k;
  }
  throw_bad_input("unknown dataset kind", {{"kind", name}});
}

const char* manifold_kind_name(ManifoldKind kind) { return kind == ManifoldKind::kLine ? "line" : "circle"; }

ManifoldKind parse_manifold_kind(const std::string& name) {
  if (name == "line") return ManifoldKind::kLine;
  if (name == "circle") return ManifoldKind::kCircle;
  throw_bad_input("unknown manifold", {{"manifold", name}});
}

void DatasetSpec::validate() const {
  if (count < 1) throw_bad_input("dataset count must be > 0", {{"count", count}});
  if (!(noise_std >= 0.0)) throw_bad_input("noise_std must be >= 0", {{"noise_std", noise_std}});
  if (components < 1 || centers < 1) throw_bad_input("component counts must be >= 1");
  if (!(mean_box > 0.0 && center_box > 0.0)) throw_bad_input("mean boxes must be > 0");
  if (!(radius > 0.0 && radial_variance > 0.0)) throw_bad_input("radius and variance must be > 0");
  if (!(min_spacing >= 0.0)) throw_bad_input("min_spacing must be >= 0");
  if (kind == DatasetKind::kManifoldNoisy) {
    const int need = manifold == ManifoldKind::kCircle ? 2 : 1;
    if (ambient_dim < need) throw_bad_input("ambient_dim too small for the manifold", {{"ambient_dim", ambient_dim}});
    if (!(half_length > 0.0 && manifold_radius > 0.0)) throw_bad_input("manifold size must be > 0");
  }
}

nlohmann::json dataset_spec_to_json(const DatasetSpec& s) {
  return {{"schema_version", 1},
          {"kind", dataset_kind_name(s.kind)},
          {"count", s.count},
          {"seed", s.seed},
          {"components", s.components},
          {"mean_box", s.mean_box},
          {"centers", s.centers},
          {"center_box", s.center_box},
          {"radius", s.radius},
          {"radial_variance", s.radial_variance},
          {"min_spacing", s.min_spacing},
          {"quadrature_points", s.quadrature_points},
          {"manifold", manifold_kind_name(s.manifold)},
          {"ambient_dim", s.ambient_dim},
          {"noise_std", s.noise_std},
          {"half_length", s.half_length},
          {"manifold_radius", s.manifold_radius}};
}

DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != 1) throw_bad_input("dataset spec schema_version must be 1");
  try {
    DatasetSpec s;
    s.kind = parse_dataset_kind(j.at("kind").get<std::string>());
    s.count = j.value("count", s.count);
    s.seed = j.value("seed", s.seed);
    s.components = j.value("components", s.components);
    s.mean_box = j.value("mean_box", s.mean_box);
    s.centers = j.value("centers", s.centers);
    s.center_box = j.value("center_box", s.center_box);
    s.radius = j.value("radius", s.radius);
    s.radial_variance = j.value("radial_variance", s.radial_variance);
    s.min_spacing = j.value("min_spacing", s.min_spacing);
    s.quadrature_points = j.value("quadrature_points", s.quadrature_points);
    s.manifold = parse_manifold_kind(j.value("manifold", std::string("line")));
    s.ambient_dim = j.value("ambient_dim", s.ambient_dim);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.half_length = j.value("half_length", s.half_length);
    s.manifold_radius = j.value("manifold_radius", s.manifold_radius);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw_bad_input("malformed dataset spec", {{"detail", e.what()}});
  }
}

Model build_model(const DatasetSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case DatasetKind::kFig1LineMixture: {
      const double vars[] = {0.2, 0.5, 1.0, 2.0, 4.0};
      const double means[] = {-20.0, -10.0, 0.0, 10.0, 20.0};
      std::vector<GaussianComponent> comps;
      for (int i = 0; i < 5; ++i) comps.push_back({0.2, Vec::Constant(1, means[i]), Mat::Constant(1, 1, vars[i])});
      std::vector<Factor> factors;
      factors.emplace_back(GaussianMixture(std::move(comps)));
      factors.emplace_back(DiracMixture({{1.0, Vec::Zero(1)}}));
      return ProductModel(std::move(factors));
    }
    case DatasetKind::kFig2aTilted: {
      CounterRng rng(spec.seed, 21);
      Mat diag = Mat::Zero(2, 2);
      diag(0, 0) = 1.7;
      diag(1, 1) = 0.2;
      std::vector<GaussianComponent> comps;
      for (int i = 0; i < spec.components; ++i) {
        Vec mean(2);
        mean(0) = rng.uniform(-spec.mean_box, spec.mean_box);
        mean(1) = rng.uniform(-spec.mean_box, spec.mean_box);
        const Mat r = rotation2(rng.uniform(0.0, std::numbers::pi));
        Mat cov = r * diag * r.transpose();
        cov = 0.5 * (cov + cov.transpose());
        comps.push_back({1.0 / spec.components, mean, cov});
      }
      return GaussianMixture(std::move(comps));
    }
    case DatasetKind::kFig2bRadial: {
      CounterRng rng(spec.seed, 22);
      std::vector<Vec> centers;
      int attempts = 0;
      while (static_cast<int>(centers.size()) < spec.centers) {
        if (++attempts > 100000) throw_bad_input("could not place centers with the requested spacing");
        Vec c(2);
        c(0) = rng.uniform(-spec.center_box, spec.center_box);
        c(1) = rng.uniform(-spec.center_box, spec.center_box);
        bool ok = true;
        for (const auto& other : centers) ok = ok && (c - other).norm() >= spec.min_spacing;
        if (ok) centers.push_back(c);
      }
      return RadialGaussianMixture(std::move(centers), spec.radius, spec.radial_variance, spec.quadrature_points);
    }
    case DatasetKind::kManifoldNoisy:
      break;
  }
  throw_bad_input("manifold_noisy has no analytic model");
}

std::vector<Vec> sample_model(const Model& model, int count, std::uint64_t seed) {
  if (count < 1) throw_bad_input("sample count must be > 0");
  CounterRng rng(seed, 3);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));

  auto run = [&](const FactorSampler& s) {
    for (int i = 0; i < count; ++i) out.push_back(s.draw(rng));
  };
  std::visit(Overloaded{
                 [&](const GaussianMixture& m) { run(GmSampler(m)); },
                 [&](const DiracMixture& m) { run(DiracSampler(m)); },
                 [&](const DegenerateGaussian& m) { run(DegenerateSampler(m)); },
                 [&](const RadialGaussianMixture& m) { run(GmSampler(m.mixture())); },
                 [&](const ProductModel& m) {
                   std::vector<std::unique_ptr<FactorSampler>> parts;
                   for (const auto& f : m.factors()) parts.push_back(make_sampler(f));
                   for (int i = 0; i < count; ++i) {
                     Vec x(m.dim());
                     for (std::size_t k = 0; k < parts.size(); ++k) {
                       const Vec block = parts[k]->draw(rng);
                       x.segment(m.offsets()[k], block.size()) = block;
                     }
                     out.push_back(std::move(x));
                   }
                 },
             },
             model);
  return out;
}

std::vector<Vec> sample_dataset(const DatasetSpec& spec) {
  spec.validate();
  if (spec.kind != DatasetKind::kManifoldNoisy) return sample_model(build_model(spec), spec.count, spec.seed);

  CounterRng rng(spec.seed, 4);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    Vec x = Vec::Zero(spec.ambient_dim);
    if (spec.manifold == ManifoldKind::kLine) {
      x(0) = rng.uniform(-spec.half_length, spec.half_length);
    } else {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      x(0) = spec.manifold_radius * std::cos(angle);
      x(1) = spec.manifold_radius * std::sin(angle);
    }
    x += spec.noise_std * rng.normal_vector(spec.ambient_dim);
    out.push_back(std::move(x));
  }
  return out;
}

ReferenceSet manifold_reference(const DatasetSpec& spec) {
  if (spec.kind != DatasetKind::kManifoldNoisy) throw_bad_input("manifold_reference needs a manifold_noisy spec");
  const int d = spec.ambient_dim;
  if (spec.manifold == ManifoldKind::kLine) {
    return Segment{-spec.half_length * Vec::Unit(d, 0), spec.half_length * Vec::Unit(d, 0)};
  }
  return Circle{Vec::Zero(d), spec.manifold_radius, Vec::Unit(d, 0), Vec::Unit(d, 1)};
}

std::vector<AffineSubspace> principal_axes(const GaussianMixture& model) {
  std::vector<AffineSubspace> out;
  for (const auto& c : model.components()) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(c.covariance);
    out.push_back({c.mean, eig.eigenvectors().rightCols(1)});
  }
  return out;
}

std::size_t assign_component(const GaussianMixture& model, const Vec& x) {
  const Vec r = model.responsibilities(0.0, x);
  Eigen::Index best = 0;
  r.maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

}  // namespace mad
