#include "mad/model_io.hpp"

#include <fstream>

#include "mad/error.hpp"

namespace mad {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

using json = nlohmann::json;

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Vec vec_from(const json& j, const char* field) {
  if (!j.is_array()) throw_bad_input("expected a numeric array", {{"field", field}});
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Mat mat_from(const json& j, Eigen::Index d, const char* field) {
  const Vec flat = vec_from(j, field);
  if (flat.size() != d * d) throw_bad_input("matrix has the wrong number of entries", {{"field", field}, {"dim", d}});
  Mat m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = flat(r * d + c);
  }
  return m;
}

json gm_json(const GaussianMixture& m) {
  json comps = json::array();
  for (const auto& c : m.components()) {
    comps.push_back({{"weight", c.weight}, {"mean", vec_json(c.mean)}, {"covariance", mat_json(c.covariance)}});
  }
  return {{"kind", "gaussian_mixture"}, {"components", comps}};
}

json dirac_json(const DiracMixture& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms()) atoms.push_back({{"weight", a.weight}, {"location", vec_json(a.location)}});
  return {{"kind", "dirac_mixture"}, {"atoms", atoms}};
}

json degenerate_json(const DegenerateGaussian& m) {
  json j = {{"kind", "degenerate_gaussian"},
            {"active_mean", vec_json(m.active_mean())},
            {"active_covariance", mat_json(m.active_covariance())},
            {"degenerate_dim", m.degenerate_dim()}};
  if (m.transform()) {
    j["transform"] = {{"rotation", mat_json(m.transform()->rotation)}, {"offset", vec_json(m.transform()->offset)}};
  }
  return j;
}

json factor_json(const Factor& f) {
  return std::visit(Overloaded{[](const GaussianMixture& m) { return gm_json(m); },
                               [](const DiracMixture& m) { return dirac_json(m); },
                               [](const DegenerateGaussian& m) { return degenerate_json(m); }},
                    f);
}

GaussianMixture gm_from(const json& j) {
  std::vector<GaussianComponent> comps;
  for (const auto& c : j.at("components")) {
    Vec mean = vec_from(c.at("mean"), "mean");
    Mat cov = mat_from(c.at("covariance"), mean.size(), "covariance");
    comps.push_back({c.at("weight").get<double>(), std::move(mean), std::move(cov)});
  }
  return GaussianMixture(std::move(comps));
}

DiracMixture dirac_from(const json& j) {
  std::vector<DiracAtom> atoms;
  for (const auto& a : j.at("atoms")) atoms.push_back({a.at("weight").get<double>(), vec_from(a.at("location"), "location")});
  return DiracMixture(std::move(atoms));
}

DegenerateGaussian degenerate_from(const json& j) {
  Vec mean = vec_from(j.at("active_mean"), "active_mean");
  Mat cov = mat_from(j.at("active_covariance"), mean.size(), "active_covariance");
  const int d2 = j.at("degenerate_dim").get<int>();
  std::optional<RigidTransform> transform;
  if (j.contains("transform") && !j["transform"].is_null()) {
    const Eigen::Index d = mean.size() + d2;
    transform = RigidTransform{mat_from(j["transform"].at("rotation"), d, "rotation"),
                               vec_from(j["transform"].at("offset"), "offset")};
  }
  return DegenerateGaussian(std::move(mean), std::move(cov), d2, std::move(transform));
}

Factor factor_from(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "gaussian_mixture") return gm_from(j);
  if (kind == "dirac_mixture") return dirac_from(j);
  if (kind == "degenerate_gaussian") return degenerate_from(j);
  throw_bad_input("unsupported product factor kind", {{"kind", kind}});
}

Model parse_model(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "gaussian_mixture") return gm_from(j);
  if (kind == "dirac_mixture") return dirac_from(j);
  if (kind == "degenerate_gaussian") return degenerate_from(j);
  if (kind == "product") {
    std::vector<Factor> factors;
    for (const auto& f : j.at("factors")) factors.push_back(factor_from(f));
    return ProductModel(std::move(factors));
  }
  if (kind == "radial") {
    std::vector<Vec> centers;
    for (const auto& c : j.at("centers")) centers.push_back(vec_from(c, "centers"));
    return RadialGaussianMixture(std::move(centers), j.at("radius").get<double>(), j.at("variance").get<double>(),
                                 j.value("quadrature_points", RadialGaussianMixture::kDefaultQuadraturePoints));
  }
  throw_bad_input("unknown model kind", {{"kind", kind}});
}

}  // namespace

json model_to_json(const Model& model) {
  json j = std::visit(
      Overloaded{
          [](const GaussianMixture& m) { return gm_json(m); },
          [](const DiracMixture& m) { return dirac_json(m); },
          [](const DegenerateGaussian& m) { return degenerate_json(m); },
          [](const ProductModel& m) {
            json factors = json::array();
            for (const auto& f : m.factors()) factors.push_back(factor_json(f));
            return json{{"kind", "product"}, {"factors", factors}};
          },
          [](const RadialGaussianMixture& m) {
            json centers = json::array();
            for (const auto& c : m.centers()) centers.push_back(vec_json(c));
            return json{{"kind", "radial"},
                        {"centers", centers},
                        {"radius", m.radius()},
                        {"variance", m.variance()},
                        {"quadrature_points", m.quadrature_points()}};
          },
      },
      model);
  j["schema_version"] = kModelSchemaVersion;
  return j;
}

Model model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version")) throw_bad_input("model file has no schema_version");
  if (j["schema_version"] != kModelSchemaVersion) {
    throw_bad_input("model schema version mismatch", {{"expected", kModelSchemaVersion}, {"found", j["schema_version"]}});
  }
  try {
    return parse_model(j);
  } catch (const json::exception& e) {
    throw_bad_input("malformed model definition", {{"detail", e.what()}});
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_bad_input("cannot open file", {{"path", path}});
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw_bad_input("malformed JSON", {{"path", path}, {"detail", e.what()}});
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw_bad_input("cannot open file for writing", {{"path", path}});
  out << j.dump(2) << '\n';
  if (!out) throw_bad_input("failed writing file", {{"path", path}});
}

void save_model(const std::string& path, const Model& model) { write_json_file(path, model_to_json(model)); }

Model load_model(const std::string& path) {
  try {
    return model_from_json(read_json_file(path));
  } catch (const Error& e) {
    nlohmann::json ctx = e.context();
    ctx["path"] = path;
    throw Error(e.kind(), e.what(), ctx);
  }
}

}  // namespace mad
