#pragma once

#include "saldl/label_distribution.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace saldl {

struct Sample {
  std::vector<double> features;
  int label = 0;
  std::string id;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Ordered samples with a uniform feature width, all labels inside `support`.
class Dataset {
 public:
  Dataset(LabelSupport support, std::size_t feature_dim, std::vector<Sample> samples = {});

  const LabelSupport& support() const noexcept { return support_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  void add(Sample sample);
  std::vector<int> labels() const;
  /// Throws empty-input naming `role` when the dataset has no samples.
  void require_non_empty(const char* role) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  LabelSupport support_;
  std::size_t feature_dim_;
  std::vector<Sample> samples_;
};

/// Planted stage-wise ambiguity for the synthetic generator. Stage s spans
/// [boundaries[s], boundaries[s+1]) and the step between adjacent-label
/// prototypes in that stage is inversely proportional to levels[s].
struct AmbiguityProfile {
  LabelSupport support;
  std::vector<int> boundaries{0};
  std::vector<double> levels{1.0};
  std::size_t feature_dim = 16;
  double noise = 0.05;

  void validate() const;
  nlohmann::json to_json() const;
  static AmbiguityProfile from_json(const nlohmann::json& doc);
};

/// Unit-norm prototype for every label of the support, in support order.
std::vector<std::vector<double>> prototype_curve(const AmbiguityProfile& profile);

/// n_per_label samples of every support label: prototype plus isotropic
/// Gaussian noise. Deterministic per seed.
Dataset generate_synthetic(const AmbiguityProfile& profile, std::size_t n_per_label,
                           std::uint64_t seed);

/// CSV with header `id,age,f0,...`; features written in shortest round-trip form.
void save_csv(const Dataset& dataset, const std::filesystem::path& path);
std::string to_csv(const Dataset& dataset);
Dataset load_csv(const std::filesystem::path& path, const LabelSupport& support);
Dataset parse_csv(const std::string& text, const LabelSupport& support);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Label-stratified shuffle split with exact global sizes
/// (round(train * n), round(val * n), remainder). Every label with at least
/// three samples lands in train.
DatasetSplit split(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed);

}  // namespace saldl
