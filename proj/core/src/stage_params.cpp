#include "saldl/stage_params.hpp"
#include "saldl/error.hpp"
#include "saldl/numeric_text.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace saldl {

namespace {
constexpr double kRawAlphaLimit = 30.0;
}  // namespace

std::string_view to_string(LossMode mode) noexcept {
  switch (mode) {
    case LossMode::kl: return "kl";
    case LossMode::ce: return "ce";
    case LossMode::kl_ce: return "kl_ce";
    case LossMode::saw: return "saw";
  }
  return "saw";
}

LossMode parse_loss_mode(std::string_view text) {
  if (text == "kl") return LossMode::kl;
  if (text == "ce") return LossMode::ce;
  if (text == "kl_ce") return LossMode::kl_ce;
  if (text == "saw") return LossMode::saw;
  throw Error(ErrorKind::parse_error, "unknown loss mode '" + std::string(text) + "'");
}

LossWeights loss_weights(LossMode mode, double alpha) {
  switch (mode) {
    case LossMode::kl: return LossWeights{1.0, 0.0, 0.0};
    case LossMode::ce: return LossWeights{0.0, 1.0, 0.0};
    case LossMode::kl_ce: return LossWeights{1.0, 1.0, 0.0};
    case LossMode::saw: return LossWeights::stage_weighted(alpha);
  }
  return LossWeights::stage_weighted(alpha);
}

double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  if (!(y > 0.0) || !std::isfinite(y)) {
    throw Error(ErrorKind::invalid_parameter, "softplus output must be positive");
  }
  return y > 20.0 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "alpha must lie in (0, 1), got " + std::to_string(p));
  }
  return std::log(p) - std::log1p(-p);
}

StageParams::StageParams(std::vector<double> raw_sigma, std::vector<double> raw_alpha)
    : raw_sigma_(std::move(raw_sigma)), raw_alpha_(std::move(raw_alpha)) {
  if (raw_sigma_.empty() || raw_sigma_.size() != raw_alpha_.size()) {
    throw Error(ErrorKind::invalid_parameter,
                "stage parameters need one sigma and one alpha per stage");
  }
  for (std::size_t s = 0; s < raw_sigma_.size(); ++s) {
    if (!std::isfinite(raw_sigma_[s]) || !std::isfinite(raw_alpha_[s])) {
      throw Error(ErrorKind::invalid_parameter, "non-finite stage parameter");
    }
  }
}

StageParams StageParams::initial(std::size_t stages) {
  return StageParams(std::vector<double>(stages, 0.0), std::vector<double>(stages, 0.0));
}

StageParams StageParams::from_values(std::span<const double> sigmas,
                                     std::span<const double> alphas) {
  if (sigmas.size() != alphas.size()) {
    throw Error(ErrorKind::invalid_parameter, "sigma and alpha vectors differ in length");
  }
  StageParams params = initial(sigmas.size());
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    params.set_sigma(s, sigmas[s]);
    params.set_alpha(s, alphas[s]);
  }
  return params;
}

StageParams StageParams::from_raw(std::vector<double> raw_sigma, std::vector<double> raw_alpha) {
  return StageParams(std::move(raw_sigma), std::move(raw_alpha));
}

double StageParams::sigma(std::size_t stage) const {
  return kSigmaMin + softplus(raw_sigma_.at(stage));
}

double StageParams::alpha(std::size_t stage) const {
  // Beyond |raw| = 30 the logistic rounds to exactly 0 or 1, which the loss rejects.
  return logistic(std::clamp(raw_alpha_.at(stage), -kRawAlphaLimit, kRawAlphaLimit));
}

std::vector<double> StageParams::sigmas() const {
  std::vector<double> out(size());
  for (std::size_t s = 0; s < size(); ++s) out[s] = sigma(s);
  return out;
}

std::vector<double> StageParams::alphas() const {
  std::vector<double> out(size());
  for (std::size_t s = 0; s < size(); ++s) out[s] = alpha(s);
  return out;
}

void StageParams::set_sigma(std::size_t stage, double sigma) {
  if (!(sigma > kSigmaMin)) {
    throw Error(ErrorKind::invalid_parameter,
                "sigma must exceed " + std::to_string(kSigmaMin) + ", got " + std::to_string(sigma));
  }
  raw_sigma_.at(stage) = inverse_softplus(sigma - kSigmaMin);
}

void StageParams::set_alpha(std::size_t stage, double alpha) { raw_alpha_.at(stage) = logit(alpha); }

void StageParams::set_raw_sigma(std::size_t stage, double raw) {
  if (!std::isfinite(raw)) throw Error(ErrorKind::invalid_parameter, "non-finite raw sigma");
  raw_sigma_.at(stage) = raw;
}

void StageParams::set_raw_alpha(std::size_t stage, double raw) {
  if (!std::isfinite(raw)) throw Error(ErrorKind::invalid_parameter, "non-finite raw alpha");
  raw_alpha_.at(stage) = raw;
}

namespace {

nlohmann::json exact_array(std::span<const double> values) {
  auto out = nlohmann::json::array();
  for (double v : values) out.push_back(format_double(v));
  return out;
}

std::vector<double> parse_exact_array(const nlohmann::json& doc, const char* key) {
  std::vector<double> out;
  for (const auto& item : doc.at(key)) {
    double v = 0.0;
    if (!parse_double(item.get<std::string>(), v)) {
      throw Error(ErrorKind::parse_error, std::string("bad number in '") + key + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

nlohmann::json StageParams::to_json() const {
  return nlohmann::json{{"raw_sigma", exact_array(raw_sigma_)},
                        {"raw_alpha", exact_array(raw_alpha_)},
                        {"sigmas", sigmas()},
                        {"alphas", alphas()}};
}

StageParams StageParams::from_json(const nlohmann::json& doc) {
  try {
    return StageParams(parse_exact_array(doc, "raw_sigma"), parse_exact_array(doc, "raw_alpha"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("malformed stage parameters: ") + e.what());
  }
}

}  // namespace saldl
