#include "saldl/label_distribution.hpp"
#include "saldl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace saldl {

namespace {

void require_same_size(std::size_t expected, std::size_t actual, const char* what) {
  if (expected != actual) {
    throw Error(ErrorKind::shape_error, std::string(what) + ": expected " +
                                            std::to_string(expected) + " entries, got " +
                                            std::to_string(actual));
  }
}

double floored_log(double p) { return std::log(std::max(p, kProbabilityFloor)); }

}  // namespace

LabelSupport::LabelSupport(int min_label, int max_label) : min_(min_label), max_(max_label) {
  if (max_label <= min_label) {
    throw Error(ErrorKind::invalid_parameter,
                "label support needs at least two labels, got [" + std::to_string(min_label) +
                    ", " + std::to_string(max_label) + "]");
  }
}

std::size_t LabelSupport::index_of(int label) const {
  if (!contains(label)) {
    throw Error(ErrorKind::invalid_label, "label " + std::to_string(label) + " outside support [" +
                                              std::to_string(min_) + ", " + std::to_string(max_) +
                                              "]");
  }
  return static_cast<std::size_t>(label - min_);
}

LabelDistribution::LabelDistribution(LabelSupport support, std::vector<double> probs)
    : support_(support), probs_(std::move(probs)) {
  require_same_size(support_.size(), probs_.size(), "label distribution");
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorKind::invalid_input, "label distribution has a negative or non-finite entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::invalid_input,
                "label distribution sums to " + std::to_string(sum) + ", not 1");
  }
}

LossWeights LossWeights::stage_weighted(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::invalid_parameter,
                "stage weight alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  return LossWeights{alpha, 1.0 - alpha, kMseWeight};
}

LabelDistribution gaussian_label_distribution(int y, double sigma, const LabelSupport& support) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::invalid_parameter,
                "sigma must be positive and finite, got " + std::to_string(sigma));
  }
  support.index_of(y);

  // The 1/(sqrt(2 pi) sigma) factor cancels in the renormalization.
  std::vector<double> probs(support.size());
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double offset = static_cast<double>(support.label_at(i) - y);
    probs[i] = std::exp(-offset * offset * inv_two_var);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return LabelDistribution(support, std::move(probs));
}

LabelDistribution softmax(const Logits& logits, const LabelSupport& support) {
  require_same_size(support.size(), logits.values.size(), "softmax logits");
  double max_logit = -INFINITY;
  for (double z : logits.values) {
    if (!std::isfinite(z)) throw Error(ErrorKind::invalid_input, "non-finite logit");
    max_logit = std::max(max_logit, z);
  }
  std::vector<double> probs(logits.values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = std::exp(logits.values[i] - max_logit);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return LabelDistribution(support, std::move(probs));
}

LabelDistribution softmax(const Logits& logits) {
  if (logits.values.size() < 2) {
    throw Error(ErrorKind::shape_error, "softmax needs at least two logits");
  }
  return softmax(logits, LabelSupport(0, static_cast<int>(logits.values.size()) - 1));
}

double kl_divergence(const LabelDistribution& p, const LabelDistribution& q) {
  if (p.support() != q.support()) {
    throw Error(ErrorKind::shape_error, "KL divergence between distributions on different supports");
  }
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) kl += p[k] * (std::log(p[k]) - floored_log(q[k]));
  }
  // Flooring q can push the sum a hair below zero.
  return std::max(kl, 0.0);
}

double cross_entropy(const LabelDistribution& pred, int y) {
  return -floored_log(pred.at_label(y));
}

double cross_entropy(std::span<const LabelDistribution> preds, std::span<const int> labels) {
  require_same_size(preds.size(), labels.size(), "cross-entropy batch");
  if (preds.empty()) throw Error(ErrorKind::empty_input, "cross-entropy of an empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += cross_entropy(preds[i], labels[i]);
  return sum / static_cast<double>(preds.size());
}

double mse_loss(double pred_age, int y) noexcept {
  const double err = pred_age - static_cast<double>(y);
  return err * err;
}

double mse_loss(std::span<const double> pred_ages, std::span<const int> labels) {
  require_same_size(pred_ages.size(), labels.size(), "MSE batch");
  if (pred_ages.empty()) throw Error(ErrorKind::empty_input, "MSE of an empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred_ages.size(); ++i) sum += mse_loss(pred_ages[i], labels[i]);
  return sum / static_cast<double>(pred_ages.size());
}

double expected_age(const LabelDistribution& dist) noexcept {
  double age = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    age += static_cast<double>(dist.support().label_at(k)) * dist[k];
  }
  return age;
}

int argmax_age(const LabelDistribution& dist) noexcept {
  const auto probs = dist.probs();
  const auto best = std::max_element(probs.begin(), probs.end());
  return dist.support().label_at(static_cast<std::size_t>(best - probs.begin()));
}

double predict_age(const LabelDistribution& dist, PredictionRule rule) noexcept {
  return rule == PredictionRule::argmax ? static_cast<double>(argmax_age(dist))
                                        : expected_age(dist);
}

LossBreakdown weighted_loss_and_gradient(const Logits& logits, int y, double sigma,
                                         const LossWeights& weights, const LabelSupport& support,
                                         std::span<double> grad) {
  const LabelDistribution target = gaussian_label_distribution(y, sigma, support);
  const LabelDistribution pred = softmax(logits, support);
  const double pred_age = expected_age(pred);

  LossBreakdown out;
  out.kl = kl_divergence(target, pred);
  out.ce = cross_entropy(pred, y);
  out.mse = mse_loss(pred_age, y);
  out.total = weights.kl * out.kl + weights.ce * out.ce + weights.mse * out.mse;
  out.alpha_used = weights.kl;

  if (!grad.empty()) {
    require_same_size(support.size(), grad.size(), "logit gradient");
    const std::size_t truth = support.index_of(y);
    const double mse_scale = 2.0 * weights.mse * (pred_age - static_cast<double>(y));
    for (std::size_t k = 0; k < grad.size(); ++k) {
      const double p = pred[k];
      const double onehot = k == truth ? 1.0 : 0.0;
      grad[k] = weights.kl * (p - target[k]) + weights.ce * (p - onehot) +
                mse_scale * p * (static_cast<double>(support.label_at(k)) - pred_age);
    }
  }
  return out;
}

LossBreakdown weighted_loss(const Logits& logits, int y, double sigma, const LossWeights& weights,
                            const LabelSupport& support) {
  return weighted_loss_and_gradient(logits, y, sigma, weights, support, {});
}

LossBreakdown saw_loss(const Logits& logits, int y, double sigma, double alpha,
                       const LabelSupport& support) {
  return weighted_loss(logits, y, sigma, LossWeights::stage_weighted(alpha), support);
}

std::vector<double> saw_gradient_logits(const Logits& logits, int y, double sigma, double alpha,
                                        const LabelSupport& support) {
  std::vector<double> grad(support.size());
  weighted_loss_and_gradient(logits, y, sigma, LossWeights::stage_weighted(alpha), support, grad);
  return grad;
}

double kl_gradient_sigma(int y, double sigma, const LabelDistribution& pred,
                         const LabelSupport& support) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::invalid_parameter,
                "sigma must be positive and finite, got " + std::to_string(sigma));
  }
  if (pred.support() != support) {
    throw Error(ErrorKind::shape_error, "prediction and target supports differ");
  }
  support.index_of(y);
  sigma = std::max(sigma, kSigmaMin);

  // Work in the log domain: ln d_k = -(k-y)^2 / (2 sigma^2) - ln Z stays finite
  // even where d_k underflows.
  const std::size_t n = support.size();
  std::vector<double> log_g(n);
  std::vector<double> dlog_g(n);  // d ln g_k / d sigma = (k-y)^2 / sigma^3
  const double inv_sigma2 = 1.0 / (sigma * sigma);
  double max_log = -INFINITY;
  for (std::size_t k = 0; k < n; ++k) {
    const double sq = std::pow(static_cast<double>(support.label_at(k) - y), 2);
    log_g[k] = -0.5 * sq * inv_sigma2;
    dlog_g[k] = sq * inv_sigma2 / sigma;
    max_log = std::max(max_log, log_g[k]);
  }
  double z = 0.0;
  for (double lg : log_g) z += std::exp(lg - max_log);
  const double log_z = max_log + std::log(z);

  std::vector<double> d(n);
  double mean_dlog = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    d[k] = std::exp(log_g[k] - log_z);
    mean_dlog += d[k] * dlog_g[k];
  }
  double grad = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dd = d[k] * (dlog_g[k] - mean_dlog);
    grad += dd * ((log_g[k] - log_z) - floored_log(pred[k]));
  }
  return grad;
}

}  // namespace saldl
