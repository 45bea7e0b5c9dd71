#include "saldl/staging.hpp"
#include "saldl/error.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>

namespace saldl {

std::string_view to_string(PartitionProvenance provenance) noexcept {
  switch (provenance) {
    case PartitionProvenance::kmeans: return "kmeans";
    case PartitionProvenance::decade: return "decade";
    case PartitionProvenance::manual: return "manual";
  }
  return "manual";
}

PartitionProvenance parse_provenance(std::string_view text) {
  if (text == "kmeans") return PartitionProvenance::kmeans;
  if (text == "decade") return PartitionProvenance::decade;
  if (text == "manual") return PartitionProvenance::manual;
  throw Error(ErrorKind::parse_error, "unknown partition provenance '" + std::string(text) + "'");
}

StagePartition::StagePartition(LabelSupport support, std::vector<int> boundaries,
                               PartitionProvenance provenance)
    : support_(support), boundaries_(std::move(boundaries)), provenance_(provenance) {
  if (boundaries_.empty()) {
    throw Error(ErrorKind::invalid_parameter, "a partition needs at least one stage");
  }
  if (boundaries_.front() != support_.min_label()) {
    throw Error(ErrorKind::invalid_parameter,
                "first stage must start at the support minimum " +
                    std::to_string(support_.min_label()));
  }
  for (std::size_t s = 1; s < boundaries_.size(); ++s) {
    if (boundaries_[s] <= boundaries_[s - 1] || !support_.contains(boundaries_[s])) {
      throw Error(ErrorKind::invalid_parameter,
                  "stage boundaries must be strictly increasing and inside the support");
    }
  }
}

std::size_t StagePartition::stage_of(int label) const {
  support_.index_of(label);
  const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), label);
  return static_cast<std::size_t>(it - boundaries_.begin()) - 1;
}

int StagePartition::last_label(std::size_t stage) const {
  if (stage >= boundaries_.size()) {
    throw Error(ErrorKind::invalid_parameter, "stage index out of range");
  }
  return stage + 1 < boundaries_.size() ? boundaries_[stage + 1] - 1 : support_.max_label();
}

nlohmann::json StagePartition::to_json() const {
  return nlohmann::json{{"boundaries", boundaries_},
                        {"k", boundaries_.size()},
                        {"provenance", std::string(to_string(provenance_))}};
}

StagePartition StagePartition::from_json(const nlohmann::json& doc, const LabelSupport& support) {
  try {
    auto boundaries = doc.at("boundaries").get<std::vector<int>>();
    const auto k = doc.at("k").get<std::size_t>();
    if (k != boundaries.size()) {
      throw Error(ErrorKind::parse_error, "partition 'k' disagrees with its boundary count");
    }
    return StagePartition(support, std::move(boundaries),
                          parse_provenance(doc.at("provenance").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("malformed partition JSON: ") + e.what());
  }
}

Clustering1d optimal_clusters_1d(std::span<const double> values, std::span<const double> counts,
                                 std::size_t k) {
  const std::size_t n = values.size();
  if (n == 0) throw Error(ErrorKind::empty_input, "cannot cluster an empty set");
  if (counts.size() != n) throw Error(ErrorKind::shape_error, "values and counts differ in length");
  if (k == 0 || k > n) {
    throw Error(ErrorKind::invalid_parameter,
                "K=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  }

  std::vector<double> w(n + 1, 0.0), s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    w[i + 1] = w[i] + counts[i];
    s1[i + 1] = s1[i] + counts[i] * values[i];
    s2[i + 1] = s2[i] + counts[i] * values[i] * values[i];
  }
  // Sum of squared deviations of values[i..j] (inclusive).
  auto sse = [&](std::size_t i, std::size_t j) {
    const double cw = w[j + 1] - w[i];
    const double c1 = s1[j + 1] - s1[i];
    return std::max(0.0, (s2[j + 1] - s2[i]) - c1 * c1 / cw);
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  // cost[m][j]: best cost of values[0..j] in m+1 clusters; split[m][j]: start of the last.
  std::vector<std::vector<double>> cost(k, std::vector<double>(n, inf));
  std::vector<std::vector<std::size_t>> split(k, std::vector<std::size_t>(n, 0));
  for (std::size_t j = 0; j < n; ++j) cost[0][j] = sse(0, j);
  for (std::size_t m = 1; m < k; ++m) {
    for (std::size_t j = m; j < n; ++j) {
      for (std::size_t i = m; i <= j; ++i) {
        const double c = cost[m - 1][i - 1] + sse(i, j);
        if (c < cost[m][j]) {
          cost[m][j] = c;
          split[m][j] = i;
        }
      }
    }
  }

  Clustering1d out;
  out.cost = cost[k - 1][n - 1];
  out.starts.assign(k, 0);
  std::size_t end = n - 1;
  for (std::size_t m = k - 1; m > 0; --m) {
    out.starts[m] = split[m][end];
    end = out.starts[m] - 1;
  }
  return out;
}

StagePartition kmeans_1d(std::span<const int> labels, std::size_t k, const LabelSupport& support) {
  if (labels.empty()) throw Error(ErrorKind::empty_input, "no labels to cluster");
  std::map<int, double> histogram;
  for (int label : labels) {
    support.index_of(label);
    histogram[label] += 1.0;
  }
  if (k == 0 || k > histogram.size()) {
    throw Error(ErrorKind::invalid_parameter,
                "K=" + std::to_string(k) + " exceeds the " + std::to_string(histogram.size()) +
                    " distinct labels (or is zero)");
  }
  std::vector<double> values, counts;
  for (const auto& [label, count] : histogram) {
    values.push_back(static_cast<double>(label));
    counts.push_back(count);
  }
  const Clustering1d clusters = optimal_clusters_1d(values, counts, k);

  std::vector<int> boundaries{support.min_label()};
  for (std::size_t c = 1; c < k; ++c) {
    const int hi_prev = static_cast<int>(values[clusters.starts[c] - 1]);
    const int lo_next = static_cast<int>(values[clusters.starts[c]]);
    // First gap label strictly closer to the upper cluster.
    const int sum = hi_prev + lo_next;
    const int midpoint_floor = sum >= 0 ? sum / 2 : -((-sum + 1) / 2);
    boundaries.push_back(midpoint_floor + 1);
  }
  return StagePartition(support, std::move(boundaries), PartitionProvenance::kmeans);
}

StagePartition decade_partition(const LabelSupport& support) {
  const std::size_t decades = std::max<std::size_t>(1, support.size() / 10);
  std::vector<int> boundaries;
  for (std::size_t d = 0; d < decades; ++d) {
    boundaries.push_back(support.min_label() + static_cast<int>(10 * d));
  }
  return StagePartition(support, std::move(boundaries), PartitionProvenance::decade);
}

StagePartition manual_partition(std::vector<int> boundaries, const LabelSupport& support) {
  return StagePartition(support, std::move(boundaries), PartitionProvenance::manual);
}

}  // namespace saldl
