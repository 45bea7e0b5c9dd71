#pragma once

#include "saldl/data.hpp"
#include "saldl/eval.hpp"
#include "saldl/model.hpp"
#include "saldl/staging.hpp"
#include "saldl/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace saldl::experiment {

struct SyntheticSpec {
  AmbiguityProfile profile;
  std::size_t n_per_label = 20;
};

struct DataSpec {
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::filesystem::path> csv;  // single file, split by `split`
  std::optional<std::filesystem::path> train_csv;
  std::optional<std::filesystem::path> val_csv;
  std::optional<std::filesystem::path> test_csv;
  SplitFractions split{0.6, 0.2, 0.2};
};

struct PartitionSpec {
  PartitionProvenance mode = PartitionProvenance::kmeans;
  std::size_t k = 10;
  std::vector<int> boundaries;  // manual mode
};

struct ModelSpec {
  std::vector<int> hidden{64, 32};
  Activation activation = Activation::relu;
};

struct AblationSpec {
  bool sav = true;
  bool saw = true;
  double fixed_sigma = 2.0;
  std::optional<LossMode> loss;  // overrides the loss implied by `saw`
  std::vector<std::uint64_t> seeds;
};

struct EvalSpec {
  std::vector<double> cs_thresholds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> anchors;
  SimilarityAggregation similarity = SimilarityAggregation::pairwise;
  std::optional<std::filesystem::path> checkpoint;
};

/// One JSON document describing a reproducible experiment. Unknown keys are
/// rejected at every level.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  LabelSupport support;
  DataSpec data;
  PartitionSpec partition;
  ModelSpec model;
  TrainConfig train;
  AblationSpec ablation;
  EvalSpec eval;

  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  /// FNV-1a of the canonical JSON dump, as 16 hex digits.
  std::string hash() const;
};

struct ExperimentData {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Synthetic data is regenerated from the seed; CSV inputs are loaded.
ExperimentData load_data(const ExperimentConfig& config, std::uint64_t seed);

StagePartition build_partition(const ExperimentConfig& config, const Dataset& train);

/// The config's training settings with the SAV/SAW switches applied.
TrainConfig arm_train_config(const ExperimentConfig& config, bool sav, bool saw,
                             std::optional<LossMode> loss_override, std::uint64_t seed);

/// Adapted sigmas start at kSigmaMin + softplus(0); a disabled SAV pins every
/// stage to the fixed sigma. Alpha starts at 0.5.
StageParams initial_stage_params(const ExperimentConfig& config, bool sav, std::size_t stages);

Model initial_model(const ExperimentConfig& config, std::size_t feature_dim, std::uint64_t seed);

struct Checkpoint {
  Model model;
  StageParams params;
  StagePartition partition;

  nlohmann::json to_json() const;
  static Checkpoint from_json(const nlohmann::json& doc);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

struct ArmOutcome {
  TrainResult result;
  StagePartition partition;
  MetricsReport test;
};

/// Train one ablation arm on the seed's data and score it on the test split.
ArmOutcome run_arm(const ExperimentConfig& config, std::uint64_t seed, bool sav, bool saw,
                   std::optional<LossMode> loss_override = std::nullopt);

// Commands; each returns the process exit code and writes into output_dir.
int cmd_gen_data(const ExperimentConfig& config, std::ostream& log);
int cmd_stage(const ExperimentConfig& config, std::ostream& log);
int cmd_train(const ExperimentConfig& config, std::ostream& log);
int cmd_eval(const ExperimentConfig& config, std::ostream& log);
int cmd_analyze(const ExperimentConfig& config, std::ostream& log);
int cmd_run_ablation(const ExperimentConfig& config, std::ostream& log);

std::string code_version();

}  // namespace saldl::experiment
