#include "saldl/model.hpp"
#include "saldl/error.hpp"
#include "saldl/numeric_text.hpp"

#include <cmath>
#include <random>
#include <string>

namespace saldl {

std::string_view to_string(Activation activation) noexcept {
  return activation == Activation::tanh ? "tanh" : "relu";
}

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::relu;
  if (text == "tanh") return Activation::tanh;
  throw Error(ErrorKind::parse_error, "unknown activation '" + std::string(text) + "'");
}

namespace {

constexpr const char* kCheckpointFormat = "saldl-model";
constexpr int kCheckpointVersion = 1;

void validate_dims(std::span<const int> dims) {
  if (dims.size() < 2) {
    throw Error(ErrorKind::invalid_parameter, "a model needs an input and an output width");
  }
  for (int d : dims) {
    if (d < 1) throw Error(ErrorKind::invalid_parameter, "layer widths must be positive");
  }
}

Eigen::VectorXd activate(const Eigen::VectorXd& z, Activation activation) {
  if (activation == Activation::tanh) return z.array().tanh().matrix();
  return z.cwiseMax(0.0);
}

// Derivative of the activation expressed through its pre-activation.
Eigen::VectorXd activation_slope(const Eigen::VectorXd& z, Activation activation) {
  if (activation == Activation::tanh) {
    return (1.0 - z.array().tanh().square()).matrix();
  }
  return (z.array() > 0.0).cast<double>().matrix();
}

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Model::Model(std::vector<int> layer_dims, Activation activation, std::vector<DenseLayer> layers)
    : dims_(std::move(layer_dims)), activation_(activation), layers_(std::move(layers)) {
  validate_dims(dims_);
  if (layers_.size() != dims_.size() - 1) {
    throw Error(ErrorKind::invalid_parameter, "layer count does not match the layer widths");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weights.rows() != dims_[l + 1] || layers_[l].weights.cols() != dims_[l] ||
        layers_[l].bias.size() != dims_[l + 1]) {
      throw Error(ErrorKind::shape_error, "layer " + std::to_string(l) + " has the wrong shape");
    }
  }
}

std::size_t Model::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  return n;
}

std::vector<double> Model::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) out.push_back(layer.weights(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out.push_back(layer.bias(r));
  }
  return out;
}

void Model::set_flat_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw Error(ErrorKind::shape_error, "expected " + std::to_string(parameter_count()) +
                                            " parameters, got " + std::to_string(values.size()));
  }
  std::size_t i = 0;
  for (auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = values[i++];
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = values[i++];
  }
}

bool Model::all_finite() const {
  for (const auto& layer : layers_) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

nlohmann::json Model::to_json() const {
  auto params = nlohmann::json::array();
  for (double v : flat_parameters()) params.push_back(format_double(v));
  return nlohmann::json{{"format", kCheckpointFormat},
                        {"version", kCheckpointVersion},
                        {"layer_dims", dims_},
                        {"activation", std::string(to_string(activation_))},
                        {"parameters", std::move(params)}};
}

Model Model::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat) {
      throw Error(ErrorKind::parse_error, "not a saldl model checkpoint");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw Error(ErrorKind::parse_error,
                  "unsupported checkpoint version " + std::to_string(version));
    }
    auto dims = doc.at("layer_dims").get<std::vector<int>>();
    validate_dims(dims);
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      layers.push_back({Eigen::MatrixXd::Zero(dims[l + 1], dims[l]),
                        Eigen::VectorXd::Zero(dims[l + 1])});
    }
    Model model(std::move(dims), parse_activation(doc.at("activation").get<std::string>()),
                std::move(layers));
    std::vector<double> values;
    for (const auto& item : doc.at("parameters")) {
      double v = 0.0;
      if (!parse_double(item.get<std::string>(), v)) {
        throw Error(ErrorKind::parse_error, "bad parameter value in checkpoint");
      }
      values.push_back(v);
    }
    model.set_flat_parameters(values);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("malformed checkpoint: ") + e.what());
  }
}

Model init_model(std::vector<int> layer_dims, Activation activation, std::uint64_t seed,
                 const LabelSupport& support) {
  validate_dims(layer_dims);
  if (static_cast<std::size_t>(layer_dims.back()) != support.size()) {
    throw Error(ErrorKind::invalid_parameter,
                "final layer width " + std::to_string(layer_dims.back()) +
                    " differs from the support size " + std::to_string(support.size()));
  }
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const double gain = activation == Activation::relu ? 6.0 : 3.0;
    const double limit = std::sqrt(gain / fan_in);
    DenseLayer layer{Eigen::MatrixXd(layer_dims[l + 1], fan_in),
                     Eigen::VectorXd::Zero(layer_dims[l + 1])};
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = (2.0 * unit_uniform(rng) - 1.0) * limit;
      }
    }
    layers.push_back(std::move(layer));
  }
  return Model(std::move(layer_dims), activation, std::move(layers));
}

ForwardTrace forward(const Model& model, std::span<const double> features) {
  if (features.size() != model.input_dim()) {
    throw Error(ErrorKind::shape_error, "feature width " + std::to_string(features.size()) +
                                            " differs from model input " +
                                            std::to_string(model.input_dim()));
  }
  const auto& layers = model.layers();
  ForwardTrace trace;
  trace.inputs.reserve(layers.size());
  trace.pre_activations.reserve(layers.size());

  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(features.data(),
                                                       static_cast<Eigen::Index>(features.size()));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd z = layers[l].weights * a + layers[l].bias;
    trace.inputs.push_back(std::move(a));
    if (l + 1 < layers.size()) a = activate(z, model.activation());
    trace.pre_activations.push_back(std::move(z));
  }
  const Eigen::VectorXd& emb = trace.inputs.back();
  trace.embedding.assign(emb.data(), emb.data() + emb.size());
  const Eigen::VectorXd& out = trace.pre_activations.back();
  trace.logits.values.assign(out.data(), out.data() + out.size());
  return trace;
}

ModelGradient ModelGradient::zeros_like(const Model& model) {
  ModelGradient g;
  for (const auto& layer : model.layers()) {
    g.layers.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return g;
}

std::vector<double> ModelGradient::flat() const {
  std::vector<double> out;
  for (const auto& layer : layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) out.push_back(layer.weights(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out.push_back(layer.bias(r));
  }
  return out;
}

void StageGradients::reset() {
  std::fill(sigma_grad.begin(), sigma_grad.end(), 0.0);
  std::fill(alpha_grad.begin(), alpha_grad.end(), 0.0);
  std::fill(counts.begin(), counts.end(), 0);
}

bool StageGradients::empty() const noexcept {
  for (std::size_t c : counts) {
    if (c != 0) return false;
  }
  return true;
}

namespace {

void check_batch_inputs(const Model& model, std::span<const Sample> batch,
                        const StageParams& params, const StagePartition& partition) {
  if (batch.empty()) throw Error(ErrorKind::empty_input, "empty training batch");
  if (params.size() != partition.k()) {
    throw Error(ErrorKind::shape_error, "stage parameters do not match the partition");
  }
  if (model.output_dim() != partition.support().size()) {
    throw Error(ErrorKind::shape_error, "model output width differs from the label support");
  }
}

}  // namespace

BatchEvaluation evaluate_batch(const Model& model, std::span<const Sample> batch,
                               const StageParams& params, const StagePartition& partition,
                               LossMode mode, StageGradients* stage_grads) {
  check_batch_inputs(model, batch, params, partition);
  if (stage_grads != nullptr && stage_grads->counts.size() != partition.k()) {
    *stage_grads = StageGradients(partition.k());
  }
  const LabelSupport& support = partition.support();
  const auto& layers = model.layers();
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  BatchEvaluation out{ModelGradient::zeros_like(model), LossBreakdown{}};
  std::vector<double> logit_grad(support.size());
  double alpha_sum = 0.0;

  for (const Sample& sample : batch) {
    const std::size_t stage = partition.stage_of(sample.label);
    const double sigma = params.sigma(stage);
    const double alpha = params.alpha(stage);
    const LossWeights weights = loss_weights(mode, alpha);

    const ForwardTrace trace = forward(model, sample.features);
    const LossBreakdown loss = weighted_loss_and_gradient(trace.logits, sample.label, sigma,
                                                          weights, support, logit_grad);
    out.loss.kl += loss.kl * inv_n;
    out.loss.ce += loss.ce * inv_n;
    out.loss.mse += loss.mse * inv_n;
    out.loss.total += loss.total * inv_n;
    alpha_sum += weights.kl;

    if (stage_grads != nullptr) {
      const LabelDistribution pred = softmax(trace.logits, support);
      stage_grads->sigma_grad[stage] +=
          weights.kl * kl_gradient_sigma(sample.label, sigma, pred, support);
      stage_grads->alpha_grad[stage] += loss.kl - loss.ce;
      stage_grads->counts[stage] += 1;
    }

    Eigen::VectorXd delta =
        Eigen::Map<const Eigen::VectorXd>(logit_grad.data(), static_cast<Eigen::Index>(logit_grad.size())) *
        inv_n;
    for (std::size_t l = layers.size(); l-- > 0;) {
      out.gradient.layers[l].weights.noalias() += delta * trace.inputs[l].transpose();
      out.gradient.layers[l].bias += delta;
      if (l > 0) {
        delta = (layers[l].weights.transpose() * delta)
                    .cwiseProduct(activation_slope(trace.pre_activations[l - 1], model.activation()));
      }
    }
  }
  out.loss.alpha_used = alpha_sum * inv_n;
  return out;
}

LossBreakdown batch_loss(const Model& model, std::span<const Sample> batch,
                         const StageParams& params, const StagePartition& partition,
                         LossMode mode) {
  check_batch_inputs(model, batch, params, partition);
  const LabelSupport& support = partition.support();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  LossBreakdown out;
  double alpha_sum = 0.0;
  for (const Sample& sample : batch) {
    const std::size_t stage = partition.stage_of(sample.label);
    const LossWeights weights = loss_weights(mode, params.alpha(stage));
    const LossBreakdown loss = weighted_loss(forward(model, sample.features).logits, sample.label,
                                             params.sigma(stage), weights, support);
    out.kl += loss.kl * inv_n;
    out.ce += loss.ce * inv_n;
    out.mse += loss.mse * inv_n;
    out.total += loss.total * inv_n;
    alpha_sum += weights.kl;
  }
  out.alpha_used = alpha_sum * inv_n;
  return out;
}

StepResult backward_step(const Model& model, std::span<const Sample> batch,
                         const StageParams& params, const StagePartition& partition,
                         double learning_rate, LossMode mode) {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::invalid_parameter, "learning rate must be finite and non-negative");
  }
  BatchEvaluation eval = evaluate_batch(model, batch, params, partition, mode);
  StepResult result{model, eval.loss};
  if (learning_rate == 0.0) return result;
  auto& layers = result.model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weights -= learning_rate * eval.gradient.layers[l].weights;
    layers[l].bias -= learning_rate * eval.gradient.layers[l].bias;
  }
  return result;
}

}  // namespace saldl
