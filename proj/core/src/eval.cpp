#include "saldl/eval.hpp"
#include "saldl/error.hpp"
#include "saldl/numeric_text.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace saldl {

namespace {

void check_pairs(std::span<const double> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    throw Error(ErrorKind::shape_error, std::to_string(preds.size()) + " predictions for " +
                                            std::to_string(labels.size()) + " labels");
  }
  if (preds.empty()) throw Error(ErrorKind::empty_input, "no predictions to score");
}

double abs_error(double pred, int label) { return std::abs(pred - static_cast<double>(label)); }

}  // namespace

double mae(std::span<const double> preds, std::span<const int> labels) {
  check_pairs(preds, labels);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += abs_error(preds[i], labels[i]);
  return sum / static_cast<double>(preds.size());
}

double cumulative_score(std::span<const double> preds, std::span<const int> labels,
                        double threshold) {
  check_pairs(preds, labels);
  if (!(threshold >= 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "CS threshold must be non-negative");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (abs_error(preds[i], labels[i]) <= threshold) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::vector<std::optional<double>> per_stage_mae(std::span<const double> preds,
                                                 std::span<const int> labels,
                                                 const StagePartition& partition) {
  check_pairs(preds, labels);
  std::vector<double> sum(partition.k(), 0.0);
  std::vector<std::size_t> count(partition.k(), 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const std::size_t s = partition.stage_of(labels[i]);
    sum[s] += abs_error(preds[i], labels[i]);
    ++count[s];
  }
  std::vector<std::optional<double>> out(partition.k());
  for (std::size_t s = 0; s < out.size(); ++s) {
    if (count[s] > 0) out[s] = sum[s] / static_cast<double>(count[s]);
  }
  return out;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json cs_doc = nlohmann::json::object();
  for (const auto& [threshold, value] : cs) cs_doc[format_double(threshold)] = value;
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& v : per_stage_mae) stages.push_back(v ? nlohmann::json(*v) : nlohmann::json());
  return nlohmann::json{{"n", n}, {"mae", mae}, {"cs", cs_doc}, {"per_stage_mae", stages}};
}

std::string MetricsReport::to_csv() const {
  std::string out = "metric,key,value\n";
  out += "n,," + std::to_string(n) + "\n";
  out += "mae,," + format_double(mae) + "\n";
  for (const auto& [threshold, value] : cs) {
    out += "cs," + format_double(threshold) + "," + format_double(value) + "\n";
  }
  for (std::size_t s = 0; s < per_stage_mae.size(); ++s) {
    out += "stage_mae," + std::to_string(s) + "," +
           (per_stage_mae[s] ? format_double(*per_stage_mae[s]) : std::string()) + "\n";
  }
  return out;
}

MetricsReport make_report(std::span<const double> preds, std::span<const int> labels,
                          std::span<const double> cs_thresholds, const StagePartition* partition) {
  MetricsReport report;
  report.n = preds.size();
  report.mae = mae(preds, labels);
  for (double t : cs_thresholds) report.cs[t] = cumulative_score(preds, labels, t);
  if (partition != nullptr) report.per_stage_mae = per_stage_mae(preds, labels, *partition);
  return report;
}

std::string SimilarityCurve::to_csv() const {
  std::string out = "label,mean_cos,count\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += std::to_string(support.label_at(i)) + "," +
           (values[i] ? format_double(*values[i]) : std::string()) + "," +
           std::to_string(counts[i]) + "\n";
  }
  return out;
}

SimilarityCurve anchor_similarity_curve(std::span<const std::vector<double>> embeddings,
                                        std::span<const int> labels, int anchor,
                                        const LabelSupport& support,
                                        SimilarityAggregation aggregation) {
  if (embeddings.size() != labels.size()) {
    throw Error(ErrorKind::shape_error, "embedding and label counts differ");
  }
  if (!support.contains(anchor)) {
    throw Error(ErrorKind::invalid_label, "anchor " + std::to_string(anchor) + " outside support");
  }
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().size();

  // Unit-normalized copies grouped by label.
  std::vector<std::vector<std::vector<double>>> groups(support.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != dim) {
      throw Error(ErrorKind::shape_error, "embeddings differ in width");
    }
    double norm = 0.0;
    for (double v : embeddings[i]) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorKind::degenerate_embedding,
                  "embedding " + std::to_string(i) + " has zero or non-finite norm");
    }
    std::vector<double> unit(embeddings[i]);
    for (double& v : unit) v /= norm;
    groups[support.index_of(labels[i])].push_back(std::move(unit));
  }
  const std::size_t a = support.index_of(anchor);
  if (groups[a].empty()) {
    throw Error(ErrorKind::invalid_label, "anchor label " + std::to_string(anchor) +
                                              " has no samples");
  }

  auto dot = [dim](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += x[d] * y[d];
    return s;
  };

  SimilarityCurve curve;
  curve.anchor = anchor;
  curve.support = support;
  curve.values.assign(support.size(), std::nullopt);
  curve.counts.assign(support.size(), 0);

  if (aggregation == SimilarityAggregation::mean_embedding) {
    auto mean_unit = [&](const std::vector<std::vector<double>>& group) {
      // Mean of the raw direction vectors, renormalized.
      std::vector<double> m(dim, 0.0);
      for (const auto& e : group) {
        for (std::size_t d = 0; d < dim; ++d) m[d] += e[d];
      }
      double norm = std::sqrt(dot(m, m));
      if (!(norm > 0.0)) {
        throw Error(ErrorKind::degenerate_embedding, "label mean embedding has zero norm");
      }
      for (double& v : m) v /= norm;
      return m;
    };
    const auto anchor_mean = mean_unit(groups[a]);
    for (std::size_t l = 0; l < groups.size(); ++l) {
      curve.counts[l] = groups[l].size();
      if (groups[l].empty()) continue;
      curve.values[l] = std::clamp(dot(anchor_mean, mean_unit(groups[l])), -1.0, 1.0);
    }
    return curve;
  }

  for (std::size_t l = 0; l < groups.size(); ++l) {
    curve.counts[l] = groups[l].size();
    if (groups[l].empty()) continue;
    const bool skip_self = l == a && groups[l].size() > 1;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < groups[a].size(); ++i) {
      for (std::size_t j = 0; j < groups[l].size(); ++j) {
        if (skip_self && i == j) continue;
        sum += dot(groups[a][i], groups[l][j]);
        ++pairs;
      }
    }
    curve.values[l] = std::clamp(sum / static_cast<double>(pairs), -1.0, 1.0);
  }
  return curve;
}

}  // namespace saldl
