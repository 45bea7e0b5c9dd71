#pragma once

#include "saldl/data.hpp"
#include "saldl/error.hpp"
#include "saldl/model.hpp"
#include "saldl/stage_params.hpp"
#include "saldl/staging.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace saldl {

/// How stage parameters are proposed between validation checks.
///   grid      one coordinate move per epoch, round-robin over stages
///   gradient  sigma takes a descent step on the accumulated KL gradient;
///             alpha still follows grid moves unless alpha_update says otherwise
enum class AdaptationMode { gradient, grid };
enum class AlphaUpdate { grid, gradient };

std::string_view to_string(AdaptationMode mode) noexcept;
AdaptationMode parse_adaptation_mode(std::string_view text);
std::string_view to_string(AlphaUpdate update) noexcept;
AlphaUpdate parse_alpha_update(std::string_view text);
std::string_view to_string(PredictionRule rule) noexcept;
PredictionRule parse_prediction_rule(std::string_view text);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double momentum = 0.0;
  double stage_lr = 0.5;
  AdaptationMode adaptation_mode = AdaptationMode::grid;
  AlphaUpdate alpha_update = AlphaUpdate::grid;
  std::vector<double> sigma_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<double> alpha_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  bool adapt_sigma = true;  // stage-wise adaptive variance
  bool adapt_alpha = true;  // stage-wise adaptive weights (saw loss only)
  LossMode loss = LossMode::saw;
  std::uint64_t seed = 0;
  PredictionRule prediction_rule = PredictionRule::expectation;
  double cs_threshold = 5.0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown train_loss;  // epoch mean over samples
  double val_l1 = 0.0;
  double val_mae = 0.0;
  double best_val_l1 = 0.0;  // after this epoch's acceptance test
  bool snapshot = false;
  std::vector<double> sigmas;  // stage parameters trained with this epoch
  std::vector<double> alphas;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  /// Accepted best-val-L1 values, in order.
  std::vector<double> snapshot_l1() const;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

struct TrainResult {
  Model model;
  StageParams params;
  TrainHistory history;
};

/// Raised when a training loss turns non-finite; carries the history so far.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& message, TrainHistory history);
  const TrainHistory& history() const noexcept { return history_; }

 private:
  TrainHistory history_;
};

/// Deterministic cycle of coordinate moves used in grid mode.
struct GridMove {
  enum class Target { sigma, alpha };
  std::size_t stage = 0;
  Target target = Target::sigma;
  double value = 0.0;

  friend bool operator==(const GridMove&, const GridMove&) = default;
};

/// For each stage in order: its sigma candidates (when sigma is grid-adapted),
/// then its alpha candidates (when alpha is grid-adapted).
std::vector<GridMove> grid_schedule(std::size_t stages, const TrainConfig& config);

struct ProposalState {
  std::size_t grid_cursor = 0;
};

/// Next candidate stage parameters. Gradient steps act on the raw
/// parameterization, using per-stage mean gradients from `grads`.
StageParams propose_stage_update(const StageParams& params, const TrainConfig& config,
                                 const StageGradients& grads, ProposalState& state);

std::vector<double> predict_ages(const Model& model, const Dataset& data, PredictionRule rule);
std::vector<std::vector<double>> embeddings(const Model& model, const Dataset& data);

/// Mean |yhat - y| over the dataset.
double evaluate_l1(const Model& model, const Dataset& data, PredictionRule rule);

/// Validation-gated outer loop: every epoch trains the model with candidate
/// stage parameters, measures L1 on `val`, and snapshots (model, params)
/// whenever L1 drops below the running minimum. Returns the last snapshot.
TrainResult train_sav(const Dataset& train, const Dataset& val, const StagePartition& partition,
                      const Model& model0, const StageParams& params0, const TrainConfig& config);

}  // namespace saldl
