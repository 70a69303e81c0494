#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "mad/error.hpp"
#include "mad/nnscore.hpp"

namespace mad {

namespace {

constexpr const char* kFormat = "mad-mlp-checkpoint";

nlohmann::json hex_array(const Vec& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(hex_double(v(i)));
  return out;
}

Vec parse_hex_array(const nlohmann::json& j, Eigen::Index expected, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != expected) {
    throw_bad_input("checkpoint array has the wrong length", {{"field", what}, {"expected", expected}});
  }
  Vec v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) v(i) = parse_hex_double(j[static_cast<std::size_t>(i)].get<std::string>());
  return v;
}

}  // namespace

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex_double(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw_bad_input("malformed number in checkpoint", {{"value", s}});
  }
  return v;
}

nlohmann::json checkpoint_to_json(const MlpDenoiser& net, std::optional<double> validation_loss,
                                  const nlohmann::json& config) {
  const MlpShape& shape = net.shape();
  nlohmann::json j;
  j["schema_version"] = kCheckpointSchemaVersion;
  j["format"] = kFormat;
  j["shape"] = {{"dim", shape.dim},
                {"hidden", shape.hidden},
                {"sigma_min", hex_double(shape.sigma_min)},
                {"sigma_max", hex_double(shape.sigma_max)},
                {"sigma_data", hex_double(shape.sigma_data)},
                {"data_mean", hex_array(shape.data_mean)}};
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.layers()) {
    // row-major weights
    const Vec flat = layer.weight.transpose().reshaped();
    layers.push_back({{"rows", layer.weight.rows()},
                      {"cols", layer.weight.cols()},
                      {"weights", hex_array(flat)},
                      {"bias", hex_array(layer.bias)}});
  }
  j["layers"] = std::move(layers);
  j["validation_loss"] = validation_loss ? nlohmann::json(hex_double(*validation_loss)) : nlohmann::json(nullptr);
  j["config"] = config;
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("schema_version")) throw_bad_input("checkpoint has no schema_version");
  if (j.value("format", "") != kFormat) throw_bad_input("not a denoiser checkpoint", {{"format", j.value("format", "")}});
  if (j["schema_version"] != kCheckpointSchemaVersion) {
    throw_bad_input("checkpoint schema version mismatch",
                    {{"expected", kCheckpointSchemaVersion}, {"found", j["schema_version"]}});
  }
  try {
    const auto& s = j.at("shape");
    MlpShape shape;
    shape.dim = s.at("dim").get<int>();
    shape.hidden = s.at("hidden").get<std::vector<int>>();
    shape.sigma_min = parse_hex_double(s.at("sigma_min").get<std::string>());
    shape.sigma_max = parse_hex_double(s.at("sigma_max").get<std::string>());
    shape.sigma_data = parse_hex_double(s.at("sigma_data").get<std::string>());
    if (shape.dim < 1) throw_bad_input("checkpoint dimension must be >= 1");
    shape.data_mean = parse_hex_array(s.at("data_mean"), shape.dim, "data_mean");

    std::vector<DenseLayer> layers;
    for (const auto& l : j.at("layers")) {
      const auto rows = l.at("rows").get<Eigen::Index>();
      const auto cols = l.at("cols").get<Eigen::Index>();
      if (rows < 1 || cols < 1) throw_bad_input("checkpoint layer has an empty shape");
      const Vec flat = parse_hex_array(l.at("weights"), rows * cols, "weights");
      DenseLayer layer;
      layer.weight = flat.reshaped(cols, rows).transpose();
      layer.bias = parse_hex_array(l.at("bias"), rows, "bias");
      layers.push_back(std::move(layer));
    }

    Checkpoint out;
    out.net = std::make_shared<MlpDenoiser>(std::move(shape), std::move(layers));
    if (j.contains("validation_loss") && !j["validation_loss"].is_null()) {
      out.validation_loss = parse_hex_double(j["validation_loss"].get<std::string>());
    }
    out.config = j.value("config", nlohmann::json::object());
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw_bad_input("corrupt checkpoint", {{"detail", e.what()}});
  }
}

void save_checkpoint(const std::string& path, const MlpDenoiser& net, std::optional<double> validation_loss,
                     const nlohmann::json& config) {
  std::ofstream out(path);
  if (!out) throw_bad_input("cannot open checkpoint for writing", {{"path", path}});
  out << checkpoint_to_json(net, validation_loss, config).dump(1) << '\n';
  if (!out) throw_bad_input("failed writing checkpoint", {{"path", path}});
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_bad_input("cannot open checkpoint", {{"path", path}});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_bad_input("corrupt checkpoint", {{"path", path}, {"detail", e.what()}});
  }
  return checkpoint_from_json(j);
}

}  // namespace mad
