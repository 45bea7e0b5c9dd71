#pragma once

#include "saldl/label_distribution.hpp"

#include <cstddef>
#include <nlohmann/json.hpp>
#include <span>
#include <string_view>
#include <vector>

namespace saldl {

enum class PartitionProvenance { kmeans, decade, manual };

std::string_view to_string(PartitionProvenance provenance) noexcept;
PartitionProvenance parse_provenance(std::string_view text);

/// Contiguous, exhaustive grouping of a label support into K stages. Stage s
/// covers [boundaries[s], boundaries[s+1] - 1]; the last stage runs to the
/// support maximum.
class StagePartition {
 public:
  StagePartition(LabelSupport support, std::vector<int> boundaries,
                 PartitionProvenance provenance);

  const LabelSupport& support() const noexcept { return support_; }
  std::span<const int> boundaries() const noexcept { return boundaries_; }
  std::size_t k() const noexcept { return boundaries_.size(); }
  PartitionProvenance provenance() const noexcept { return provenance_; }

  std::size_t stage_of(int label) const;
  int first_label(std::size_t stage) const { return boundaries_.at(stage); }
  int last_label(std::size_t stage) const;

  /// {"boundaries": [...], "k": K, "provenance": "..."}
  nlohmann::json to_json() const;
  static StagePartition from_json(const nlohmann::json& doc, const LabelSupport& support);

  friend bool operator==(const StagePartition&, const StagePartition&) = default;

 private:
  LabelSupport support_;
  std::vector<int> boundaries_;
  PartitionProvenance provenance_;
};

/// Optimal 1-D clustering of sorted distinct values with multiplicities.
struct Clustering1d {
  std::vector<std::size_t> starts;  // index of each cluster's first distinct value
  double cost = 0.0;                // total within-cluster sum of squared deviations
};

/// Exact DP over sorted distinct values; `values` must be strictly increasing.
Clustering1d optimal_clusters_1d(std::span<const double> values, std::span<const double> counts,
                                 std::size_t k);

/// Globally optimal K-means on the label multiset, converted to contiguous label
/// intervals. Support labels absent from the data join the nearest cluster,
/// ties going to the lower stage.
StagePartition kmeans_1d(std::span<const int> labels, std::size_t k, const LabelSupport& support);

/// Ten-label stages from the support minimum; a trailing partial decade is
/// absorbed by the last full one (0..100 gives [90..100] as its last stage).
StagePartition decade_partition(const LabelSupport& support);

StagePartition manual_partition(std::vector<int> boundaries, const LabelSupport& support);

inline std::size_t stage_of(const StagePartition& partition, int label) {
  return partition.stage_of(label);
}

}  // namespace saldl
