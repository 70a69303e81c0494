#include "mad/nnscore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mad/error.hpp"
#include "mad/rng.hpp"

namespace mad {

namespace {

Mat silu(const Mat& z) {
  return z.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
}

Mat silu_grad(const Mat& z) {
  return z.unaryExpr([](double v) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    return s * (1.0 + v * (1.0 - s));
  });
}

}  // namespace

Vec score_from_denoiser(const Denoiser& net, double sigma, const Vec& x) {
  if (!(sigma > 0.0) || sigma < net.sigma_min() || sigma > net.sigma_max()) {
    throw_bad_input("noise level outside the denoiser validity range",
                    {{"sigma", sigma}, {"sigma_min", net.sigma_min()}, {"sigma_max", net.sigma_max()}});
  }
  return (net.denoise(sigma, x) - x) / (sigma * sigma);
}

Vec ScoreDenoiser::denoise(double sigma, const Vec& x) const {
  return sigma * sigma * oracle_->evaluate(sigma, x) + x;
}

std::shared_ptr<Denoiser> denoiser_from_score(std::shared_ptr<const ScoreOracle> oracle) {
  return std::make_shared<ScoreDenoiser>(std::move(oracle));
}

// ---------------------------------------------------------------------------

MlpDenoiser::MlpDenoiser(MlpShape shape, std::uint64_t seed) : shape_(std::move(shape)) {
  if (shape_.data_mean.size() == 0) shape_.data_mean = Vec::Zero(shape_.dim);
  CounterRng rng(seed, 1);
  int fan_in = shape_.dim + 1;
  for (int width : shape_.hidden) {
    DenseLayer layer;
    layer.weight = Mat(width, fan_in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    // column-major fill keeps the draw order independent of Eigen internals
    for (int c = 0; c < fan_in; ++c) {
      for (int r = 0; r < width; ++r) layer.weight(r, c) = scale * rng.normal();
    }
    layer.bias = Vec::Zero(width);
    layers_.push_back(std::move(layer));
    fan_in = width;
  }
  layers_.push_back({Mat::Zero(shape_.dim, fan_in), Vec::Zero(shape_.dim)});
  check();
}

MlpDenoiser::MlpDenoiser(MlpShape shape, std::vector<DenseLayer> layers)
    : shape_(std::move(shape)), layers_(std::move(layers)) {
  if (shape_.data_mean.size() == 0) shape_.data_mean = Vec::Zero(shape_.dim);
  check();
}

void MlpDenoiser::check() const {
  if (shape_.dim < 1) throw_bad_input("denoiser dimension must be >= 1");
  if (!(shape_.sigma_min > 0.0 && shape_.sigma_min < shape_.sigma_max)) {
    throw_bad_input("denoiser needs 0 < sigma_min < sigma_max",
                    {{"sigma_min", shape_.sigma_min}, {"sigma_max", shape_.sigma_max}});
  }
  if (!(shape_.sigma_data > 0.0)) throw_bad_input("sigma_data must be > 0");
  if (shape_.data_mean.size() != shape_.dim) throw_bad_input("data mean has the wrong dimension");
  if (layers_.size() != shape_.hidden.size() + 1) throw_bad_input("layer count does not match the shape");
  int fan_in = shape_.dim + 1;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const int width = l < shape_.hidden.size() ? shape_.hidden[l] : shape_.dim;
    const auto& layer = layers_[l];
    if (layer.weight.rows() != width || layer.weight.cols() != fan_in || layer.bias.size() != width) {
      throw_bad_input("layer shape mismatch", {{"layer", l}});
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw_bad_input("non-finite parameters", {{"layer", l}});
    }
    fan_in = width;
  }
}

Mat MlpDenoiser::features(const Mat& x, const Vec& sigmas) const {
  const Eigen::Index batch = x.cols();
  Mat f(shape_.dim + 1, batch);
  const double sd2 = shape_.sigma_data * shape_.sigma_data;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const double s = sigmas(j);
    f.col(j).head(shape_.dim) = (x.col(j) - shape_.data_mean) / std::sqrt(s * s + sd2);
    f(shape_.dim, j) = 0.25 * std::log(s);
  }
  return f;
}

Mat MlpDenoiser::forward_raw(const Mat& features) const {
  Mat a = features;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    a = silu((layers_[l].weight * a).colwise() + layers_[l].bias);
  }
  return (layers_.back().weight * a).colwise() + layers_.back().bias;
}

Vec MlpDenoiser::denoise(double sigma, const Vec& x) const {
  if (x.size() != shape_.dim) throw_bad_input("denoiser input has the wrong dimension");
  const Vec s = Vec::Constant(1, sigma);
  return x + sigma * forward_raw(features(x, s)).col(0);
}

int MlpDenoiser::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return static_cast<int>(n);
}

Vec MlpDenoiser::parameters() const {
  Vec flat(parameter_count());
  Eigen::Index k = 0;
  for (const auto& l : layers_) {
    flat.segment(k, l.weight.size()) = l.weight.reshaped();
    k += l.weight.size();
    flat.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return flat;
}

void MlpDenoiser::set_parameters(const Vec& flat) {
  if (flat.size() != parameter_count()) throw_bad_input("parameter vector has the wrong size");
  Eigen::Index k = 0;
  for (auto& l : layers_) {
    l.weight.reshaped() = flat.segment(k, l.weight.size());
    k += l.weight.size();
    l.bias = flat.segment(k, l.bias.size());
    k += l.bias.size();
  }
}

double MlpDenoiser::loss_and_gradient(const Mat& y, const Mat& eps, const Vec& sigmas, Vec* gradient) const {
  const Eigen::Index batch = y.cols();
  if (batch == 0 || eps.cols() != batch || sigmas.size() != batch || y.rows() != shape_.dim ||
      eps.rows() != shape_.dim) {
    throw_bad_input("loss batch shapes do not match");
  }
  const Mat x = y + eps * sigmas.asDiagonal();

  // Forward pass, keeping pre-activations and activations.
  std::vector<Mat> pre;
  std::vector<Mat> act;
  pre.reserve(layers_.size());
  act.reserve(layers_.size() + 1);
  act.push_back(features(x, sigmas));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    pre.push_back((layers_[l].weight * act.back()).colwise() + layers_[l].bias);
    if (l + 1 < layers_.size()) act.push_back(silu(pre.back()));
  }
  const Mat residual = pre.back() + eps;
  const double norm = 1.0 / static_cast<double>(batch * shape_.dim);
  const double value = residual.squaredNorm() * norm;
  if (!gradient) return value;

  gradient->resize(parameter_count());
  // Per-layer offsets into the flat vector.
  std::vector<Eigen::Index> offset(layers_.size());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offset[l] = k;
    k += layers_[l].weight.size() + layers_[l].bias.size();
  }

  Mat delta = 2.0 * norm * residual;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const Mat gw = delta * act[l].transpose();
    gradient->segment(offset[l], layer.weight.size()) = gw.reshaped();
    gradient->segment(offset[l] + layer.weight.size(), layer.bias.size()) = delta.rowwise().sum();
    if (l > 0) delta = (layer.weight.transpose() * delta).cwiseProduct(silu_grad(pre[l - 1]));
  }
  return value;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  const nlohmann::json ctx = {{"iterations", iterations}, {"batch_size", batch_size},
                              {"learning_rate", learning_rate}, {"sigma_min", sigma_min},
                              {"sigma_max", sigma_max}};
  if (iterations < 0) throw_bad_input("iterations must be >= 0", ctx);
  if (batch_size < 1) throw_bad_input("batch size must be >= 1", ctx);
  if (!(learning_rate > 0.0)) throw_bad_input("learning rate must be > 0", ctx);
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) throw_bad_input("final_lr_fraction must lie in (0, 1]");
  if (!(sigma_min > 0.0 && sigma_min < sigma_max) || !std::isfinite(sigma_max)) {
    throw_bad_input("training needs 0 < sigma_min < sigma_max", ctx);
  }
  for (int h : hidden) {
    if (h < 1) throw_bad_input("hidden widths must be >= 1");
  }
}

namespace {

struct Batch {
  Mat y;
  Mat eps;
  Vec sigmas;
};

Batch draw_batch(CounterRng& rng, const std::vector<Vec>& data, int size, double sigma_min, double sigma_max) {
  const int d = static_cast<int>(data.front().size());
  Batch b{Mat(d, size), Mat(d, size), Vec(size)};
  const double lo = std::log(sigma_min);
  const double hi = std::log(sigma_max);
  for (int j = 0; j < size; ++j) {
    b.y.col(j) = data[rng.below(data.size())];
    b.sigmas(j) = std::exp(rng.uniform(lo, hi));
    b.eps.col(j) = rng.normal_vector(d);
  }
  return b;
}

void check_data(const std::vector<Vec>& data) {
  if (data.empty()) throw_bad_input("training data is empty");
  const Eigen::Index d = data.front().size();
  for (const auto& p : data) {
    if (p.size() != d || !p.allFinite()) throw_bad_input("training data must be finite points of equal dimension");
  }
}

}  // namespace

TrainResult train_denoiser(const TrainConfig& config, const std::vector<Vec>& data) {
  config.validate();
  check_data(data);
  const int d = static_cast<int>(data.front().size());

  MlpShape shape;
  shape.dim = d;
  shape.hidden = config.hidden;
  shape.sigma_min = config.sigma_min;
  shape.sigma_max = config.sigma_max;
  shape.data_mean = Vec::Zero(d);
  for (const auto& p : data) shape.data_mean += p;
  shape.data_mean /= static_cast<double>(data.size());
  double spread = 0.0;
  for (const auto& p : data) spread += (p - shape.data_mean).squaredNorm();
  shape.sigma_data = std::max(1e-3, std::sqrt(spread / (static_cast<double>(data.size()) * d)));

  TrainResult result;
  result.net = std::make_shared<MlpDenoiser>(shape, config.seed);
  MlpDenoiser& net = *result.net;

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double adam_eps = 1e-8;
  Vec params = net.parameters();
  Vec m1 = Vec::Zero(params.size());
  Vec m2 = Vec::Zero(params.size());
  Vec grad;
  CounterRng rng(config.seed, 7);
  result.curve.reserve(static_cast<std::size_t>(config.iterations));

  for (int it = 0; it < config.iterations; ++it) {
    const double progress = config.iterations > 1 ? static_cast<double>(it) / (config.iterations - 1) : 1.0;
    const double floor = config.final_lr_fraction;
    const double lr =
        config.learning_rate * (floor + (1.0 - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));

    const Batch b = draw_batch(rng, data, config.batch_size, config.sigma_min, config.sigma_max);
    const double loss = net.loss_and_gradient(b.y, b.eps, b.sigmas, &grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      throw_numerical("training diverged", {{"iteration", it}, {"loss", std::isfinite(loss) ? loss : -1.0}});
    }
    result.curve.push_back({it, loss, lr});

    m1 = beta1 * m1 + (1.0 - beta1) * grad;
    m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, it + 1);
    const double c2 = 1.0 - std::pow(beta2, it + 1);
    params.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + adam_eps);
    net.set_parameters(params);
  }
  return result;
}

double validation_loss(const MlpDenoiser& net, const std::vector<Vec>& data, int draws, std::uint64_t seed) {
  check_data(data);
  if (draws < 1) throw_bad_input("validation needs at least one draw");
  CounterRng rng(seed, 11);
  constexpr int chunk = 1024;
  double total = 0.0;
  for (int done = 0; done < draws; done += chunk) {
    const int n = std::min(chunk, draws - done);
    const Batch b = draw_batch(rng, data, n, net.sigma_min(), net.sigma_max());
    total += net.loss(b.y, b.eps, b.sigmas) * n;
  }
  return total / draws;
}

}  // namespace mad
