#include "saldl/trainer.hpp"
#include "saldl/eval.hpp"
#include "saldl/numeric_text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace saldl {

std::string_view to_string(AdaptationMode mode) noexcept {
  return mode == AdaptationMode::gradient ? "gradient" : "grid";
}

AdaptationMode parse_adaptation_mode(std::string_view text) {
  if (text == "gradient") return AdaptationMode::gradient;
  if (text == "grid") return AdaptationMode::grid;
  throw Error(ErrorKind::parse_error, "unknown adaptation mode '" + std::string(text) + "'");
}

std::string_view to_string(AlphaUpdate update) noexcept {
  return update == AlphaUpdate::gradient ? "gradient" : "grid";
}

AlphaUpdate parse_alpha_update(std::string_view text) {
  if (text == "gradient") return AlphaUpdate::gradient;
  if (text == "grid") return AlphaUpdate::grid;
  throw Error(ErrorKind::parse_error, "unknown alpha update '" + std::string(text) + "'");
}

std::string_view to_string(PredictionRule rule) noexcept {
  return rule == PredictionRule::argmax ? "argmax" : "expectation";
}

PredictionRule parse_prediction_rule(std::string_view text) {
  if (text == "expectation") return PredictionRule::expectation;
  if (text == "argmax") return PredictionRule::argmax;
  throw Error(ErrorKind::parse_error, "unknown prediction rule '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::invalid_parameter, what); };
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(stage_lr >= 0.0) || !std::isfinite(stage_lr)) fail("stage_lr must be non-negative");
  if (!(cs_threshold >= 0.0)) fail("cs_threshold must be non-negative");
  if (sigma_grid.empty() || alpha_grid.empty()) fail("grids must hold at least one value");
  for (double s : sigma_grid) {
    if (!(s > kSigmaMin) || !std::isfinite(s)) fail("sigma grid values must exceed sigma_min");
  }
  for (double a : alpha_grid) {
    if (!(a > 0.0 && a < 1.0)) fail("alpha grid values must lie in (0, 1)");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return nlohmann::json{{"epochs", epochs},
                        {"batch_size", batch_size},
                        {"learning_rate", learning_rate},
                        {"momentum", momentum},
                        {"stage_lr", stage_lr},
                        {"adaptation_mode", std::string(to_string(adaptation_mode))},
                        {"alpha_update", std::string(to_string(alpha_update))},
                        {"sigma_grid", sigma_grid},
                        {"alpha_grid", alpha_grid},
                        {"adapt_sigma", adapt_sigma},
                        {"adapt_alpha", adapt_alpha},
                        {"loss", std::string(to_string(loss))},
                        {"seed", seed},
                        {"prediction_rule", std::string(to_string(prediction_rule))},
                        {"cs_threshold", cs_threshold}};
}

std::vector<double> TrainHistory::snapshot_l1() const {
  std::vector<double> out;
  for (const auto& e : epochs) {
    if (e.snapshot) out.push_back(e.best_val_l1);
  }
  return out;
}

std::string TrainHistory::to_csv() const {
  const std::size_t k = epochs.empty() ? 0 : epochs.front().sigmas.size();
  std::string out =
      "epoch,loss_total,loss_kl,loss_ce,loss_mse,val_l1,val_mae,best_val_l1,snapshot";
  for (std::size_t s = 0; s < k; ++s) out += ",sigma_" + std::to_string(s);
  for (std::size_t s = 0; s < k; ++s) out += ",alpha_" + std::to_string(s);
  out += '\n';
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch);
    for (double v : {e.train_loss.total, e.train_loss.kl, e.train_loss.ce, e.train_loss.mse,
                     e.val_l1, e.val_mae, e.best_val_l1}) {
      out += ',' + format_double(v);
    }
    out += e.snapshot ? ",1" : ",0";
    for (double v : e.sigmas) out += ',' + format_double(v);
    for (double v : e.alphas) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

nlohmann::json TrainHistory::to_json() const {
  auto rows = nlohmann::json::array();
  for (const auto& e : epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"loss", {{"total", e.train_loss.total},
                              {"kl", e.train_loss.kl},
                              {"ce", e.train_loss.ce},
                              {"mse", e.train_loss.mse}}},
                    {"val_l1", e.val_l1},
                    {"val_mae", e.val_mae},
                    {"best_val_l1", e.best_val_l1},
                    {"snapshot", e.snapshot},
                    {"sigmas", e.sigmas},
                    {"alphas", e.alphas}});
  }
  return nlohmann::json{{"epochs", std::move(rows)}};
}

TrainingDiverged::TrainingDiverged(const std::string& message, TrainHistory history)
    : Error(ErrorKind::training_diverged, message), history_(std::move(history)) {}

std::vector<GridMove> grid_schedule(std::size_t stages, const TrainConfig& config) {
  const bool sigma_moves = config.adapt_sigma && config.adaptation_mode == AdaptationMode::grid;
  const bool alpha_moves = config.adapt_alpha && config.loss == LossMode::saw &&
                           (config.adaptation_mode == AdaptationMode::grid ||
                            config.alpha_update == AlphaUpdate::grid);
  std::vector<GridMove> moves;
  for (std::size_t s = 0; s < stages; ++s) {
    if (sigma_moves) {
      for (double v : config.sigma_grid) moves.push_back({s, GridMove::Target::sigma, v});
    }
    if (alpha_moves) {
      for (double v : config.alpha_grid) moves.push_back({s, GridMove::Target::alpha, v});
    }
  }
  return moves;
}

StageParams propose_stage_update(const StageParams& params, const TrainConfig& config,
                                 const StageGradients& grads, ProposalState& state) {
  StageParams next = params;
  if (config.adaptation_mode == AdaptationMode::gradient && grads.counts.size() == params.size()) {
    for (std::size_t s = 0; s < params.size(); ++s) {
      if (grads.counts[s] == 0) continue;
      const double n = static_cast<double>(grads.counts[s]);
      if (config.adapt_sigma) {
        // d sigma / d raw = logistic(raw)
        const double raw = params.raw_sigma()[s];
        next.set_raw_sigma(s, raw - config.stage_lr * (grads.sigma_grad[s] / n) * logistic(raw));
      }
      if (config.adapt_alpha && config.loss == LossMode::saw &&
          config.alpha_update == AlphaUpdate::gradient) {
        const double raw = params.raw_alpha()[s];
        const double a = logistic(raw);
        next.set_raw_alpha(s, raw - config.stage_lr * (grads.alpha_grad[s] / n) * a * (1.0 - a));
      }
    }
  }
  const auto schedule = grid_schedule(params.size(), config);
  if (!schedule.empty()) {
    const GridMove& move = schedule[state.grid_cursor % schedule.size()];
    ++state.grid_cursor;
    if (move.target == GridMove::Target::sigma) {
      next.set_sigma(move.stage, move.value);
    } else {
      next.set_alpha(move.stage, move.value);
    }
  }
  return next;
}

std::vector<double> predict_ages(const Model& model, const Dataset& data, PredictionRule rule) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& s : data.samples()) {
    out.push_back(predict_age(softmax(forward(model, s.features).logits, data.support()), rule));
  }
  return out;
}

std::vector<std::vector<double>> embeddings(const Model& model, const Dataset& data) {
  std::vector<std::vector<double>> out;
  out.reserve(data.size());
  for (const auto& s : data.samples()) out.push_back(forward(model, s.features).embedding);
  return out;
}

double evaluate_l1(const Model& model, const Dataset& data, PredictionRule rule) {
  data.require_non_empty("evaluation");
  const auto preds = predict_ages(model, data, rule);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    sum += std::abs(preds[i] - static_cast<double>(data[i].label));
  }
  return sum / static_cast<double>(preds.size());
}

namespace {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
}

}  // namespace

TrainResult train_sav(const Dataset& train, const Dataset& val, const StagePartition& partition,
                      const Model& model0, const StageParams& params0, const TrainConfig& config) {
  config.validate();
  train.require_non_empty("training");
  val.require_non_empty("validation");
  if (params0.size() != partition.k()) {
    throw Error(ErrorKind::shape_error, "initial stage parameters do not match the partition");
  }
  if (train.support() != partition.support() || val.support() != partition.support()) {
    throw Error(ErrorKind::shape_error, "dataset and partition supports differ");
  }

  TrainResult result{model0, params0, {}};
  if (config.epochs == 0) return result;

  Model model = model0;
  StageParams accepted = params0;
  double best_l1 = std::numeric_limits<double>::infinity();
  ProposalState proposal_state;
  StageGradients stage_grads(partition.k());
  ModelGradient velocity = ModelGradient::zeros_like(model);
  std::mt19937_64 rng(config.seed);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Sample> batch;
  batch.reserve(config.batch_size);
  auto diverged = [&](const std::string& message, const EpochRecord& record) {
    result.history.epochs.push_back(record);
    throw TrainingDiverged(message, result.history);
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // The first epoch trains with the initial parameters as given.
    const StageParams candidate =
        epoch == 0 ? accepted
                   : propose_stage_update(accepted, config, stage_grads, proposal_state);
    stage_grads.reset();

    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss.alpha_used = 0.0;
    const double inv_n = 1.0 / static_cast<double>(train.size());
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);

      BatchEvaluation eval;
      try {
        eval = evaluate_batch(model, batch, candidate, partition, config.loss, &stage_grads);
      } catch (const Error& e) {
        // Inputs are validated finite, so a non-finite logit means the weights blew up.
        if (e.kind() != ErrorKind::invalid_input) throw;
        diverged("non-finite forward pass in epoch " + std::to_string(epoch), record);
      }
      if (!std::isfinite(eval.loss.total)) {
        diverged("non-finite training loss in epoch " + std::to_string(epoch), record);
      }
      const double share = static_cast<double>(batch.size()) * inv_n;
      record.train_loss.kl += eval.loss.kl * share;
      record.train_loss.ce += eval.loss.ce * share;
      record.train_loss.mse += eval.loss.mse * share;
      record.train_loss.total += eval.loss.total * share;
      record.train_loss.alpha_used += eval.loss.alpha_used * share;

      auto& layers = model.layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        velocity.layers[l].weights =
            config.momentum * velocity.layers[l].weights - config.learning_rate * eval.gradient.layers[l].weights;
        velocity.layers[l].bias =
            config.momentum * velocity.layers[l].bias - config.learning_rate * eval.gradient.layers[l].bias;
        layers[l].weights += velocity.layers[l].weights;
        layers[l].bias += velocity.layers[l].bias;
      }
    }
    if (!model.all_finite()) {
      diverged("non-finite model parameters after epoch " + std::to_string(epoch), record);
    }

    try {
      record.val_l1 = evaluate_l1(model, val, config.prediction_rule);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::invalid_input) throw;
      diverged("non-finite validation forward pass in epoch " + std::to_string(epoch), record);
    }
    record.val_mae = record.val_l1;
    record.sigmas = candidate.sigmas();
    record.alphas = candidate.alphas();
    if (record.val_l1 < best_l1) {
      best_l1 = record.val_l1;
      accepted = candidate;
      result.model = model;
      result.params = candidate;
      record.snapshot = true;
    }
    record.best_val_l1 = best_l1;
    result.history.epochs.push_back(std::move(record));
  }
  return result;
}

}  // namespace saldl
