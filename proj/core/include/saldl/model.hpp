#pragma once

#include "saldl/data.hpp"
#include "saldl/label_distribution.hpp"
#include "saldl/stage_params.hpp"
#include "saldl/staging.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <string_view>
#include <vector>

namespace saldl {

enum class Activation { relu, tanh };

std::string_view to_string(Activation activation) noexcept;
Activation parse_activation(std::string_view text);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out

  bool operator==(const DenseLayer& other) const {
    return weights == other.weights && bias == other.bias;
  }
};

/// Fully connected classifier: input -> hidden... -> one logit per label.
/// The activations feeding the last layer are the embedding.
class Model {
 public:
  Model(std::vector<int> layer_dims, Activation activation, std::vector<DenseLayer> layers);

  std::span<const int> layer_dims() const noexcept { return dims_; }
  Activation activation() const noexcept { return activation_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(dims_.front()); }
  std::size_t output_dim() const noexcept { return static_cast<std::size_t>(dims_.back()); }
  std::size_t embedding_dim() const noexcept {
    return static_cast<std::size_t>(dims_[dims_.size() - 2]);
  }

  /// Layer by layer: weights row-major, then bias.
  std::size_t parameter_count() const noexcept;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> values);
  bool all_finite() const;

  /// Versioned checkpoint; parameters as exact decimal strings.
  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& doc);

  bool operator==(const Model& other) const = default;

 private:
  std::vector<int> dims_;
  Activation activation_;
  std::vector<DenseLayer> layers_;
};

struct ForwardTrace {
  Logits logits;
  std::vector<double> embedding;
  std::vector<Eigen::VectorXd> inputs;          // input to each layer
  std::vector<Eigen::VectorXd> pre_activations;  // W x + b of each layer
};

/// Fan-in scaled uniform weights, zero biases, deterministic per seed.
Model init_model(std::vector<int> layer_dims, Activation activation, std::uint64_t seed,
                 const LabelSupport& support);

ForwardTrace forward(const Model& model, std::span<const double> features);

struct ModelGradient {
  std::vector<DenseLayer> layers;

  static ModelGradient zeros_like(const Model& model);
  std::vector<double> flat() const;
};

/// Per-stage sums gathered while computing batch gradients, for the stage
/// parameter update: sigma_grad accumulates w_kl * dKL/dsigma, alpha_grad
/// accumulates KL - CE.
struct StageGradients {
  std::vector<double> sigma_grad;
  std::vector<double> alpha_grad;
  std::vector<std::size_t> counts;

  explicit StageGradients(std::size_t stages = 0)
      : sigma_grad(stages, 0.0), alpha_grad(stages, 0.0), counts(stages, 0) {}
  void reset();
  bool empty() const noexcept;
};

struct BatchEvaluation {
  ModelGradient gradient;  // of the batch-mean loss
  LossBreakdown loss;      // batch means of each term
};

/// Forward and backward pass over the batch. Each sample uses the sigma and
/// alpha of its label's stage. When `stage_grads` is non-null, per-stage sums
/// are added into it.
BatchEvaluation evaluate_batch(const Model& model, std::span<const Sample> batch,
                               const StageParams& params, const StagePartition& partition,
                               LossMode mode, StageGradients* stage_grads = nullptr);

/// Batch-mean loss only, for finite-difference checks.
LossBreakdown batch_loss(const Model& model, std::span<const Sample> batch,
                         const StageParams& params, const StagePartition& partition,
                         LossMode mode);

struct StepResult {
  Model model;
  LossBreakdown loss;  // before the step
};

/// One plain SGD step on the batch-mean loss.
StepResult backward_step(const Model& model, std::span<const Sample> batch,
                         const StageParams& params, const StagePartition& partition,
                         double learning_rate, LossMode mode = LossMode::saw);

}  // namespace saldl
