#pragma once

// Learned score oracles. A denoiser D(x, sigma) relates to the score by
// D = sigma^2 S + x, so either one can be wrapped as the other.
//
// MlpDenoiser predicts the noise: D(x, sigma) = x + sigma G(c_in (x - mu_d), log(sigma) / 4)
// with c_in = 1 / sqrt(sigma^2 + sigma_d^2). Training minimizes |G + eps|^2,
// which is the plain denoising loss |D - y|^2 weighted by 1 / sigma^2.

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mad/types.hpp"
#include "mad/xscore.hpp"

namespace mad {

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual int dim() const = 0;
  virtual Vec denoise(double sigma, const Vec& x) const = 0;
  virtual double sigma_min() const { return 0.0; }
  virtual double sigma_max() const { return std::numeric_limits<double>::infinity(); }
};

/// (D(x, sigma) - x) / sigma^2, after a validity-range check.
Vec score_from_denoiser(const Denoiser& net, double sigma, const Vec& x);

/// D = sigma^2 S + x for any score oracle.
class ScoreDenoiser final : public Denoiser {
 public:
  explicit ScoreDenoiser(std::shared_ptr<const ScoreOracle> oracle) : oracle_(std::move(oracle)) {}
  int dim() const override { return oracle_->dim(); }
  Vec denoise(double sigma, const Vec& x) const override;
  double sigma_min() const override { return oracle_->sigma_min(); }
  double sigma_max() const override { return oracle_->sigma_max(); }

 private:
  std::shared_ptr<const ScoreOracle> oracle_;
};

std::shared_ptr<Denoiser> denoiser_from_score(std::shared_ptr<const ScoreOracle> oracle);

/// Denoiser backed by a callable; used for hard-wired test networks.
class FunctionDenoiser final : public Denoiser {
 public:
  using Fn = std::function<Vec(double, const Vec&)>;
  FunctionDenoiser(int dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
  int dim() const override { return dim_; }
  Vec denoise(double sigma, const Vec& x) const override { return fn_(sigma, x); }

 private:
  int dim_;
  Fn fn_;
};

/// Score oracle view of a denoiser.
class DenoiserOracle final : public ScoreOracle {
 public:
  explicit DenoiserOracle(std::shared_ptr<const Denoiser> net) : net_(std::move(net)) {}
  int dim() const override { return net_->dim(); }
  Vec evaluate(double sigma, const Vec& x) const override { return score_from_denoiser(*net_, sigma, x); }
  double sigma_min() const override { return net_->sigma_min(); }
  double sigma_max() const override { return net_->sigma_max(); }

 private:
  std::shared_ptr<const Denoiser> net_;
};

// ---------------------------------------------------------------------------

struct MlpShape {
  int dim = 2;
  std::vector<int> hidden = {128, 128, 128};
  double sigma_min = 0.002;
  double sigma_max = 100.0;
  double sigma_data = 1.0;
  Vec data_mean;  // empty means zero
};

struct DenseLayer {
  Mat weight;  // out x in
  Vec bias;    // out
};

class MlpDenoiser final : public Denoiser {
 public:
  /// Hidden layers get N(0, 1/fan_in) weights from the seed; the output layer
  /// starts at zero, so a fresh net is the identity denoiser.
  MlpDenoiser(MlpShape shape, std::uint64_t seed);
  MlpDenoiser(MlpShape shape, std::vector<DenseLayer> layers);

  int dim() const override { return shape_.dim; }
  double sigma_min() const override { return shape_.sigma_min; }
  double sigma_max() const override { return shape_.sigma_max; }
  Vec denoise(double sigma, const Vec& x) const override;

  const MlpShape& shape() const { return shape_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Network input for a batch: columns are c_in (x - mu_d) stacked on log(sigma)/4.
  Mat features(const Mat& x, const Vec& sigmas) const;
  /// Raw network output G for a batch of feature columns.
  Mat forward_raw(const Mat& features) const;

  int parameter_count() const;
  Vec parameters() const;
  void set_parameters(const Vec& flat);

  /// Mean over batch and coordinates of (G + eps)^2 for clean points y (columns),
  /// noise eps (columns) and per-column sigmas; fills the flat gradient.
  double loss_and_gradient(const Mat& y, const Mat& eps, const Vec& sigmas, Vec* gradient) const;
  double loss(const Mat& y, const Mat& eps, const Vec& sigmas) const {
    return loss_and_gradient(y, eps, sigmas, nullptr);
  }

 private:
  void check() const;

  MlpShape shape_;
  std::vector<DenseLayer> layers_;
};

// ---------------------------------------------------------------------------

struct TrainConfig {
  int iterations = 4000;
  int batch_size = 256;
  double learning_rate = 2e-3;
  /// Cosine decay from learning_rate to learning_rate * final_lr_fraction.
  double final_lr_fraction = 0.05;
  /// sigma ~ log-uniform on [sigma_min, sigma_max].
  double sigma_min = 0.002;
  double sigma_max = 100.0;
  std::vector<int> hidden = {128, 128, 128};
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainRecord {
  int iteration = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  std::shared_ptr<MlpDenoiser> net;
  std::vector<TrainRecord> curve;
};

/// Adam with manual gradients. Deterministic given the config and data.
TrainResult train_denoiser(const TrainConfig& config, const std::vector<Vec>& data);

/// The training loss on a fixed noise draw: `draws` samples with data index,
/// log-uniform sigma and noise all taken from `seed`.
double validation_loss(const MlpDenoiser& net, const std::vector<Vec>& data, int draws, std::uint64_t seed);

// ---------------------------------------------------------------------------

inline constexpr int kCheckpointSchemaVersion = 1;

struct Checkpoint {
  std::shared_ptr<MlpDenoiser> net;
  std::optional<double> validation_loss;
  nlohmann::json config;  // snapshot of whatever produced the net
};

/// Versioned JSON; every double is written as a hex float so loading is bit exact.
void save_checkpoint(const std::string& path, const MlpDenoiser& net, std::optional<double> validation_loss = {},
                     const nlohmann::json& config = nlohmann::json::object());
Checkpoint load_checkpoint(const std::string& path);

nlohmann::json checkpoint_to_json(const MlpDenoiser& net, std::optional<double> validation_loss,
                                  const nlohmann::json& config);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

std::string hex_double(double v);
double parse_hex_double(const std::string& s);

}  // namespace mad
