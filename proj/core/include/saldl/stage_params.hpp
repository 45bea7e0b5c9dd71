#pragma once

#include "saldl/label_distribution.hpp"

#include <cstddef>
#include <nlohmann/json.hpp>
#include <span>
#include <string_view>
#include <vector>

namespace saldl {

/// Which terms the training objective uses.
///   kl     KL divergence to the stage Gaussian target only
///   ce     cross-entropy only
///   kl_ce  unweighted KL + CE
///   saw    alpha_s KL + (1 - alpha_s) CE + 0.01 MSE, alpha per stage
enum class LossMode { kl, ce, kl_ce, saw };

std::string_view to_string(LossMode mode) noexcept;
LossMode parse_loss_mode(std::string_view text);

LossWeights loss_weights(LossMode mode, double alpha);

/// Per-stage standard deviation and loss weight. Values are stored through
/// unconstrained raw parameters, sigma = kSigmaMin + softplus(raw) and
/// alpha = logistic(raw), so every update keeps sigma >= kSigmaMin and
/// alpha in (0, 1).
class StageParams {
 public:
  /// sigma = kSigmaMin + softplus(0), alpha = 0.5 for every stage.
  static StageParams initial(std::size_t stages);
  static StageParams from_values(std::span<const double> sigmas, std::span<const double> alphas);
  static StageParams from_raw(std::vector<double> raw_sigma, std::vector<double> raw_alpha);

  std::size_t size() const noexcept { return raw_sigma_.size(); }
  double sigma(std::size_t stage) const;
  double alpha(std::size_t stage) const;
  std::vector<double> sigmas() const;
  std::vector<double> alphas() const;
  std::span<const double> raw_sigma() const noexcept { return raw_sigma_; }
  std::span<const double> raw_alpha() const noexcept { return raw_alpha_; }

  void set_sigma(std::size_t stage, double sigma);
  void set_alpha(std::size_t stage, double alpha);
  void set_raw_sigma(std::size_t stage, double raw);
  void set_raw_alpha(std::size_t stage, double raw);

  /// Raw values are written as exact decimal strings; derived values are informative.
  nlohmann::json to_json() const;
  static StageParams from_json(const nlohmann::json& doc);

  friend bool operator==(const StageParams&, const StageParams&) = default;

 private:
  StageParams(std::vector<double> raw_sigma, std::vector<double> raw_alpha);

  std::vector<double> raw_sigma_;
  std::vector<double> raw_alpha_;
};

double softplus(double x) noexcept;
double inverse_softplus(double y);
double logistic(double x) noexcept;
double logit(double p);

}  // namespace saldl
