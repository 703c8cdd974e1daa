#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>

#include <Eigen/Core>

#include "aglae/featureio.hpp"
#include "aglae/rng.hpp"

namespace aglae {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// M x C row-stochastic matrix of predicted class distributions.
using ProbMatrix = RowMatrix;

/// Linear softmax head: logits = W x + b with W of shape C x D.
struct HeadParams {
  RowMatrix weights;
  Eigen::VectorXd bias;

  std::size_t num_classes() const noexcept { return static_cast<std::size_t>(weights.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(weights.cols()); }

  bool operator==(const HeadParams& other) const {
    return weights.rows() == other.weights.rows() && weights.cols() == other.weights.cols() &&
           weights == other.weights && bias == other.bias;
  }
};

/// Optimizer and schedule settings for the head. Defaults correspond to the
/// "long training" regime with a head-sized learning rate.
struct TrainConfig {
  std::size_t epochs = 15;
  double learning_rate = 1e-2;
  double warmup_fraction = 0.05;
  double weight_decay = 0.01;
  std::size_t minibatch_size = 20;
  double numeric_epsilon = 1e-12;

  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Presets mirroring the short / long / long+ training regimes.
TrainConfig short_training();
TrainConfig long_training();
TrainConfig long_plus_training();

/// Learning-rate multiplier in (0, 1] for 0-based `step` of `total` steps.
/// Linear ramp over ceil(warmup_fraction * total) steps, then linear decay.
double schedule_multiplier(std::size_t step, std::size_t total, double warmup_fraction);

/// Uniform weights in [-1/sqrt(d), 1/sqrt(d)], zero bias.
HeadParams init_params(std::size_t dim, std::size_t num_classes, Rng& rng);

struct TrainResult {
  HeadParams params;
  double initial_loss = 0.0;  ///< full-set loss of the starting parameters
  double final_loss = 0.0;    ///< full-set loss after the last step
  std::size_t steps = 0;
};

/// AdamW on mean cross-entropy, starting from `start`. Moments start at zero.
/// The minibatch order is reshuffled every epoch from `shuffle_rng`.
TrainResult train(const HeadParams& start, const FeatureMatrix& features,
                  std::span<const std::uint32_t> labels, const TrainConfig& cfg, Rng& shuffle_rng);

/// Cold start: fresh parameters from `init_rng`, then `train`.
TrainResult train_from_scratch(std::size_t num_classes, const FeatureMatrix& features,
                               std::span<const std::uint32_t> labels, const TrainConfig& cfg,
                               Rng& init_rng, Rng& shuffle_rng);

/// Mean cross-entropy of `params` on the given rows.
double mean_loss(const HeadParams& params, const FeatureMatrix& features,
                 std::span<const std::uint32_t> labels, double epsilon = 1e-12);

RowMatrix logits(const HeadParams& params, const FeatureMatrix& features);
ProbMatrix predict_proba(const HeadParams& params, const FeatureMatrix& features);

/// Row-wise argmax, ties to the lowest class id.
std::vector<std::uint32_t> argmax_rows(const ProbMatrix& probs);

/// Last-layer gradient of cross-entropy at the pseudo-label argmax p,
/// flattened class-major: row r = [(p_0 - e_0) x, (p_0 - e_0), (p_1 - e_1) x, ...].
RowMatrix grad_embedding(const HeadParams& params, const FeatureMatrix& features);

void write_params(const HeadParams& params, const std::filesystem::path& path);
HeadParams read_params(const std::filesystem::path& path);

}  // namespace aglae
