#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace saldl {

/// Probability floor applied inside logarithms of KL and cross-entropy.
inline constexpr double kProbabilityFloor = 1e-12;
/// Smallest standard deviation a label distribution is ever built with.
inline constexpr double kSigmaMin = 0.25;
/// Fixed weight of the regression term in the stage-weighted loss.
inline constexpr double kMseWeight = 0.01;

/// Consecutive integer labels [min_label, max_label].
class LabelSupport {
 public:
  LabelSupport() = default;
  LabelSupport(int min_label, int max_label);

  int min_label() const noexcept { return min_; }
  int max_label() const noexcept { return max_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(max_ - min_ + 1); }
  bool contains(int label) const noexcept { return label >= min_ && label <= max_; }

  /// Position of `label` in probability vectors; throws invalid-label.
  std::size_t index_of(int label) const;
  int label_at(std::size_t index) const noexcept { return min_ + static_cast<int>(index); }

  friend bool operator==(const LabelSupport&, const LabelSupport&) = default;

 private:
  int min_ = 0;
  int max_ = 100;
};

/// A probability vector over a LabelSupport. Construction validates that all
/// entries are finite and non-negative and that they sum to one within 1e-9.
class LabelDistribution {
 public:
  LabelDistribution(LabelSupport support, std::vector<double> probs);

  const LabelSupport& support() const noexcept { return support_; }
  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t index) const noexcept { return probs_[index]; }
  double at_label(int label) const { return probs_[support_.index_of(label)]; }

 private:
  LabelSupport support_;
  std::vector<double> probs_;
};

/// Unnormalized scores over the support, one per label.
struct Logits {
  std::vector<double> values;
};

enum class PredictionRule { expectation, argmax };

/// Per-term weights of the composite objective.
struct LossWeights {
  double kl = 1.0;
  double ce = 0.0;
  double mse = 0.0;

  /// alpha * KL + (1 - alpha) * CE + 0.01 * MSE; alpha must lie in (0, 1).
  static LossWeights stage_weighted(double alpha);
};

struct LossBreakdown {
  double kl = 0.0;
  double ce = 0.0;
  double mse = 0.0;
  double total = 0.0;
  double alpha_used = 0.5;
};

/// Discretized Gaussian target centred on `y`, evaluated at every integer of
/// the support and renormalized by the discrete sum, so truncated targets near
/// the support edges are still proper distributions.
LabelDistribution gaussian_label_distribution(int y, double sigma, const LabelSupport& support);

LabelDistribution softmax(const Logits& logits, const LabelSupport& support);
/// Convenience overload over the support 0..n-1.
LabelDistribution softmax(const Logits& logits);

/// sum_k p_k ln(p_k / q_k), with 0 ln 0 = 0 and q floored at kProbabilityFloor.
double kl_divergence(const LabelDistribution& p, const LabelDistribution& q);

double cross_entropy(const LabelDistribution& pred, int y);
/// Mean over the batch.
double cross_entropy(std::span<const LabelDistribution> preds, std::span<const int> labels);

double mse_loss(double pred_age, int y) noexcept;
/// Mean over the batch.
double mse_loss(std::span<const double> pred_ages, std::span<const int> labels);

double expected_age(const LabelDistribution& dist) noexcept;
int argmax_age(const LabelDistribution& dist) noexcept;
double predict_age(const LabelDistribution& dist, PredictionRule rule) noexcept;

/// Evaluates the weighted objective for one sample. The regression term always
/// reads the expectation of the predicted distribution, which keeps it
/// differentiable. `alpha_used` reports `weights.kl`.
LossBreakdown weighted_loss(const Logits& logits, int y, double sigma, const LossWeights& weights,
                            const LabelSupport& support);

/// Same as weighted_loss, and writes d(total)/d(logits) into `grad`.
LossBreakdown weighted_loss_and_gradient(const Logits& logits, int y, double sigma,
                                         const LossWeights& weights, const LabelSupport& support,
                                         std::span<double> grad);

LossBreakdown saw_loss(const Logits& logits, int y, double sigma, double alpha,
                       const LabelSupport& support);

/// Exact gradient of saw_loss().total with respect to each logit:
/// alpha (p - d) + (1 - alpha) (p - onehot(y)) + 0.02 (yhat - y) p_k (k - yhat).
std::vector<double> saw_gradient_logits(const Logits& logits, int y, double sigma, double alpha,
                                        const LabelSupport& support);

/// d KL(d(y, sigma) || pred) / d sigma through the renormalized Gaussian target.
/// sigma below kSigmaMin is clamped to kSigmaMin.
double kl_gradient_sigma(int y, double sigma, const LabelDistribution& pred,
                         const LabelSupport& support);

}  // namespace saldl
