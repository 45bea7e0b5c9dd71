#pragma once

#include "saldl/label_distribution.hpp"
#include "saldl/staging.hpp"

#include <cstddef>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace saldl {

double mae(std::span<const double> preds, std::span<const int> labels);

/// Percentage of samples with |pred - label| <= threshold (inclusive).
double cumulative_score(std::span<const double> preds, std::span<const int> labels,
                        double threshold);

/// MAE restricted to each stage's samples; stages with no samples are nullopt.
std::vector<std::optional<double>> per_stage_mae(std::span<const double> preds,
                                                 std::span<const int> labels,
                                                 const StagePartition& partition);

struct MetricsReport {
  std::size_t n = 0;
  double mae = 0.0;
  std::map<double, double> cs;  // threshold (years) -> percentage
  std::vector<std::optional<double>> per_stage_mae;

  nlohmann::json to_json() const;
  /// Rows of `metric,key,value`.
  std::string to_csv() const;
};

MetricsReport make_report(std::span<const double> preds, std::span<const int> labels,
                          std::span<const double> cs_thresholds,
                          const StagePartition* partition = nullptr);

enum class SimilarityAggregation {
  pairwise,        // mean cosine over all (anchor sample, label sample) pairs
  mean_embedding,  // cosine between the two labels' mean embeddings
};

struct SimilarityCurve {
  int anchor = 0;
  LabelSupport support;
  std::vector<std::optional<double>> values;  // per support label; nullopt if absent
  std::vector<std::size_t> counts;

  /// `label,mean_cos,count`, absent values left empty.
  std::string to_csv() const;
};

/// Cosine similarity between the anchor label's embeddings and every other
/// label's. Self-pairs are excluded at the anchor unless it has one sample.
SimilarityCurve anchor_similarity_curve(std::span<const std::vector<double>> embeddings,
                                        std::span<const int> labels, int anchor,
                                        const LabelSupport& support,
                                        SimilarityAggregation aggregation =
                                            SimilarityAggregation::pairwise);

}  // namespace saldl
