#include "experiment.hpp"

#include "saldl/error.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace saldl;
namespace ex = saldl::experiment;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config(const fs::path& out) {
  auto doc = nlohmann::json::parse(R"({
    "seed": 11,
    "data": {
      "synthetic": {
        "profile": {"boundaries": [0, 50], "levels": [1.0, 6.0], "feature_dim": 8, "noise": 0.05},
        "n_per_label": 4
      },
      "split": {"train": 0.5, "val": 0.25, "test": 0.25}
    },
    "partition": {"mode": "decade"},
    "model": {"hidden": [8]},
    "train": {"epochs": 3, "batch_size": 16, "learning_rate": 0.05, "momentum": 0.9},
    "ablation": {"seeds": [1, 2]},
    "eval": {"anchors": [10, 50, 90]}
  })");
  doc["output_dir"] = out.string();
  return doc;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string command =
      std::string(SALDL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream(path) << doc.dump(2);
}

/// Test split of one-hot samples, one per label, for a model that maps
/// one-hot input i straight to label i.
ex::ExperimentConfig perfect_oracle_setup(const fs::path& dir) {
  const LabelSupport ages(0, 100);
  Dataset test(ages, ages.size());
  for (int label = 0; label <= 100; ++label) {
    std::vector<double> x(ages.size(), 0.0);
    x[ages.index_of(label)] = 1.0;
    test.add({x, label, "t" + std::to_string(label)});
  }
  save_csv(test, dir / "test.csv");

  const int n = static_cast<int>(ages.size());
  const Model model({n, n}, Activation::relu,
                    {DenseLayer{1000.0 * Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n)}});
  ex::Checkpoint{model, StageParams::initial(10), decade_partition(ages)}.save(dir / "checkpoint.json");

  auto doc = nlohmann::json::parse(R"({"data": {}, "eval": {"cs_thresholds": [0, 5]}})");
  doc["data"]["test_csv"] = (dir / "test.csv").string();
  doc["output_dir"] = dir.string();
  return ex::ExperimentConfig::from_json(doc);
}

}  // namespace

TEST(Config, RejectsUnknownKeysAtEveryLevel) {
  const auto base = small_config("unused");
  for (const char* pointer : {"/colour", "/train/colour", "/data/synthetic/colour",
                              "/data/synthetic/profile/colour", "/eval/colour"}) {
    auto doc = base;
    doc[nlohmann::json::json_pointer(pointer)] = 1;
    try {
      ex::ExperimentConfig::from_json(doc);
      ADD_FAILURE() << pointer << " accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config_error) << pointer;
      EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos) << e.what();
    }
  }
}

TEST(Config, JsonRoundTripKeepsHash) {
  const auto c = ex::ExperimentConfig::from_json(small_config("x"));
  const auto back = ex::ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(c.hash().size(), 16u);
}

TEST(Commands, GenDataIsByteIdenticalAndReloads) {
  const auto a = oracle::scratch_dir("gen_a");
  const auto b = oracle::scratch_dir("gen_b");
  std::ostringstream log;
  ASSERT_EQ(ex::cmd_gen_data(ex::ExperimentConfig::from_json(small_config(a)), log), 0);
  ASSERT_EQ(ex::cmd_gen_data(ex::ExperimentConfig::from_json(small_config(b)), log), 0);
  for (const char* name : {"train.csv", "val.csv", "test.csv", "profile.json"}) {
    EXPECT_EQ(oracle::slurp(a / name), oracle::slurp(b / name)) << name;
  }
  const auto train = load_csv(a / "train.csv", LabelSupport(0, 100));
  EXPECT_EQ(train.size(), 202u);
  EXPECT_EQ(train.feature_dim(), 8u);
  EXPECT_TRUE(fs::exists(a / "run_gen-data.json"));
}

TEST(Commands, StageWritesPartition) {
  const auto dir = oracle::scratch_dir("stage");
  auto doc = small_config(dir);
  std::ostringstream log;
  ASSERT_EQ(ex::cmd_stage(ex::ExperimentConfig::from_json(doc), log), 0);
  auto partition = nlohmann::json::parse(oracle::slurp(dir / "partition.json"));
  EXPECT_EQ(partition.at("k"), 10);

  doc["partition"] = {{"mode", "kmeans"}, {"k", 4}};
  ASSERT_EQ(ex::cmd_stage(ex::ExperimentConfig::from_json(doc), log), 0);
  partition = nlohmann::json::parse(oracle::slurp(dir / "partition.json"));
  EXPECT_EQ(partition.at("k"), 4);
  EXPECT_EQ(partition.at("provenance"), "kmeans");

  doc["partition"]["k"] = 500;
  EXPECT_THROW(ex::cmd_stage(ex::ExperimentConfig::from_json(doc), log), Error);
}

TEST(Commands, TrainWithZeroEpochsCheckpointsTheInitialModel) {
  const auto dir = oracle::scratch_dir("train0");
  auto doc = small_config(dir);
  doc["train"]["epochs"] = 0;
  const auto config = ex::ExperimentConfig::from_json(doc);
  std::ostringstream log;
  ASSERT_EQ(ex::cmd_train(config, log), 0);
  const auto checkpoint = ex::Checkpoint::load(dir / "checkpoint.json");
  EXPECT_EQ(checkpoint.model, ex::initial_model(config, 8, config.seed));
  EXPECT_EQ(checkpoint.params.size(), 10u);
}

TEST(Commands, TrainIsDeterministic) {
  const auto a = oracle::scratch_dir("train_a");
  const auto b = oracle::scratch_dir("train_b");
  std::ostringstream log;
  ASSERT_EQ(ex::cmd_train(ex::ExperimentConfig::from_json(small_config(a)), log), 0);
  ASSERT_EQ(ex::cmd_train(ex::ExperimentConfig::from_json(small_config(b)), log), 0);
  for (const char* name : {"history.csv", "history.json", "checkpoint.json", "stage_params.json"}) {
    EXPECT_EQ(oracle::slurp(a / name), oracle::slurp(b / name)) << name;
  }
  const auto meta = nlohmann::json::parse(oracle::slurp(a / "run_train.json"));
  EXPECT_TRUE(meta.at("complete").get<bool>());
}

TEST(Commands, EvalOfPerfectOracle) {
  const auto dir = oracle::scratch_dir("eval_oracle");
  const auto config = perfect_oracle_setup(dir);
  std::ostringstream log;
  ASSERT_EQ(ex::cmd_eval(config, log), 0);
  const auto metrics = nlohmann::json::parse(oracle::slurp(dir / "metrics.json"));
  EXPECT_EQ(metrics.at("mae").get<double>(), 0.0);
  EXPECT_EQ(metrics.at("n").get<int>(), 101);
  const std::string csv = oracle::slurp(dir / "metrics.csv");
  EXPECT_NE(csv.find("cs,5,100"), std::string::npos) << csv;
}

TEST(Commands, AnalyzeWritesOneCurvePerAnchor) {
  const auto dir = oracle::scratch_dir("analyze");
  std::ostringstream log;
  const auto config = ex::ExperimentConfig::from_json(small_config(dir));
  ASSERT_EQ(ex::cmd_train(config, log), 0);
  ASSERT_EQ(ex::cmd_analyze(config, log), 0);
  for (int anchor : {10, 50, 90}) {
    const auto path = dir / ("similarity_anchor_" + std::to_string(anchor) + ".csv");
    ASSERT_TRUE(fs::exists(path)) << path;
    EXPECT_EQ(oracle::slurp(path).rfind("label,mean_cos,count\n", 0), 0u);
  }
}

TEST(Commands, RunAblationWritesEveryArm) {
  const auto dir = oracle::scratch_dir("ablation");
  std::ostringstream log;
  ASSERT_EQ(ex::cmd_run_ablation(ex::ExperimentConfig::from_json(small_config(dir)), log), 0);
  std::istringstream csv(oracle::slurp(dir / "ablation.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "arm,sav,saw,seed,test_mae,test_cs");
  int per_seed = 0, means = 0;
  while (std::getline(csv, line)) {
    (line.find(",mean,") != std::string::npos ? means : per_seed) += 1;
  }
  EXPECT_EQ(per_seed, 8);
  EXPECT_EQ(means, 4);
}

TEST(Binary, MissingCheckpointFailsNamingThePath) {
  const auto dir = oracle::scratch_dir("cli_missing");
  auto doc = small_config(dir);
  doc["eval"]["checkpoint"] = (dir / "nowhere.json").string();
  write_json(dir / "config.json", doc);
  const int code = run_cli("eval --config " + (dir / "config.json").string(), dir / "log.txt");
  EXPECT_NE(code, 0);
  EXPECT_NE(oracle::slurp(dir / "log.txt").find("nowhere.json"), std::string::npos);
}

TEST(Binary, GenDataAndBadConfig) {
  const auto dir = oracle::scratch_dir("cli_gen");
  write_json(dir / "config.json", small_config(dir / "out"));
  EXPECT_EQ(run_cli("gen-data --config " + (dir / "config.json").string(), dir / "log.txt"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "train.csv"));

  auto bad = small_config(dir / "out");
  bad["partition"] = {{"mode", "kmeans"}, {"k", 500}};
  write_json(dir / "bad.json", bad);
  EXPECT_NE(run_cli("stage --config " + (dir / "bad.json").string(), dir / "log.txt"), 0);
  EXPECT_NE(run_cli("no-such-command", dir / "log.txt"), 0);
}
