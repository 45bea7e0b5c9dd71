#include "experiment.hpp"

#include "saldl/error.hpp"
#include "saldl/numeric_text.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <initializer_list>
#include <sstream>

#ifndef SALDL_VERSION
#define SALDL_VERSION "0.0.0"
#endif

namespace saldl::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version() { return "saldl " SALDL_VERSION; }

namespace {

[[noreturn]] void config_fail(const std::string& what) {
  throw Error(ErrorKind::config_error, what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  if (!obj.is_object()) config_fail(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) config_fail("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t { kDataStream = 1, kSplitStream = 2, kInitStream = 3, kShuffleStream = 4 };

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::io_error, "cannot open " + path.string() + " for writing");
  file << text;
  if (!file) throw Error(ErrorKind::io_error, "failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::io_error, "cannot open " + path.string());
  try {
    return json::parse(file);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, path.string() + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create " + dir.string() + ": " + ec.message());
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

/// Wall time and completion status live only in run_<command>.json, so every
/// other output is byte-identical across reruns.
class RunRecorder {
 public:
  RunRecorder(const ExperimentConfig& config, std::string command)
      : config_(config), command_(std::move(command)), start_(std::chrono::steady_clock::now()),
        started_at_(utc_now()) {
    ensure_dir(config.output_dir);
  }

  fs::path output(const std::string& name) {
    outputs_.push_back(name);
    return config_.output_dir / name;
  }

  void finish(bool complete, const std::string& note = {}) const {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json meta{{"metadata_version", 1},
              {"command", command_},
              {"config_hash", config_.hash()},
              {"code_version", code_version()},
              {"seed", config_.seed},
              {"outputs", outputs_},
              {"complete", complete},
              {"started_at", started_at_},
              {"wall_time_seconds", wall}};
    if (!note.empty()) meta["note"] = note;
    write_text(config_.output_dir / ("run_" + command_ + ".json"), meta.dump(2) + "\n");
  }

 private:
  const ExperimentConfig& config_;
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  std::string started_at_;
  std::vector<std::string> outputs_;
};

SplitFractions parse_split(const json& doc) {
  check_keys(doc, {"train", "val", "test"}, "data.split");
  return SplitFractions{doc.at("train").get<double>(), doc.at("val").get<double>(),
                        doc.at("test").get<double>()};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  ExperimentConfig c;
  try {
    check_keys(doc, {"seed", "output_dir", "support", "data", "partition", "model", "train",
                     "ablation", "eval"},
               "config");
    c.seed = get_or<std::uint64_t>(doc, "seed", 0);
    c.output_dir = get_or<std::string>(doc, "output_dir", "out");

    if (doc.contains("support")) {
      const json& s = doc.at("support");
      check_keys(s, {"min_label", "max_label"}, "support");
      c.support = LabelSupport(get_or(s, "min_label", 0), get_or(s, "max_label", 100));
    }

    if (!doc.contains("data")) config_fail("missing 'data' section");
    const json& d = doc.at("data");
    check_keys(d, {"synthetic", "csv", "train_csv", "val_csv", "test_csv", "split"}, "data");
    if (d.contains("split")) c.data.split = parse_split(d.at("split"));
    if (d.contains("synthetic")) {
      const json& syn = d.at("synthetic");
      check_keys(syn, {"profile", "n_per_label"}, "data.synthetic");
      json profile = syn.at("profile");
      for (const auto& [key, value] : std::initializer_list<std::pair<const char*, int>>{
               {"min_label", c.support.min_label()}, {"max_label", c.support.max_label()}}) {
        if (profile.contains(key) && profile.at(key).get<int>() != value) {
          config_fail(std::string("data.synthetic.profile.") + key + " disagrees with support");
        }
        profile[key] = value;
      }
      c.data.synthetic = SyntheticSpec{AmbiguityProfile::from_json(profile),
                                       get_or<std::size_t>(syn, "n_per_label", 20)};
    }
    if (d.contains("csv")) c.data.csv = d.at("csv").get<std::string>();
    if (d.contains("train_csv")) c.data.train_csv = d.at("train_csv").get<std::string>();
    if (d.contains("val_csv")) c.data.val_csv = d.at("val_csv").get<std::string>();
    if (d.contains("test_csv")) c.data.test_csv = d.at("test_csv").get<std::string>();
    const int sources = (c.data.synthetic ? 1 : 0) + (c.data.csv ? 1 : 0) +
                        ((c.data.train_csv || c.data.val_csv || c.data.test_csv) ? 1 : 0);
    if (sources != 1) {
      config_fail("data needs exactly one source: synthetic, csv, or train_csv/val_csv/test_csv");
    }

    if (doc.contains("partition")) {
      const json& p = doc.at("partition");
      check_keys(p, {"mode", "k", "boundaries"}, "partition");
      c.partition.mode = parse_provenance(get_or<std::string>(p, "mode", "kmeans"));
      c.partition.k = get_or<std::size_t>(p, "k", 10);
      c.partition.boundaries = get_or<std::vector<int>>(p, "boundaries", {});
      if (c.partition.mode == PartitionProvenance::manual) {
        manual_partition(c.partition.boundaries, c.support);
      }
    }

    if (doc.contains("model")) {
      const json& m = doc.at("model");
      check_keys(m, {"hidden", "activation"}, "model");
      c.model.hidden = get_or<std::vector<int>>(m, "hidden", c.model.hidden);
      c.model.activation = parse_activation(get_or<std::string>(m, "activation", "relu"));
      for (int h : c.model.hidden) {
        if (h < 1) config_fail("model.hidden widths must be positive");
      }
    }

    if (doc.contains("train")) {
      const json& t = doc.at("train");
      check_keys(t, {"epochs", "batch_size", "learning_rate", "momentum", "stage_lr",
                     "adaptation_mode", "alpha_update", "sigma_grid", "alpha_grid",
                     "prediction_rule", "cs_threshold"},
                 "train");
      TrainConfig& tc = c.train;
      tc.epochs = get_or(t, "epochs", tc.epochs);
      tc.batch_size = get_or(t, "batch_size", tc.batch_size);
      tc.learning_rate = get_or(t, "learning_rate", tc.learning_rate);
      tc.momentum = get_or(t, "momentum", tc.momentum);
      tc.stage_lr = get_or(t, "stage_lr", tc.stage_lr);
      tc.adaptation_mode =
          parse_adaptation_mode(get_or<std::string>(t, "adaptation_mode", "grid"));
      tc.alpha_update = parse_alpha_update(get_or<std::string>(t, "alpha_update", "grid"));
      tc.sigma_grid = get_or(t, "sigma_grid", tc.sigma_grid);
      tc.alpha_grid = get_or(t, "alpha_grid", tc.alpha_grid);
      tc.prediction_rule =
          parse_prediction_rule(get_or<std::string>(t, "prediction_rule", "expectation"));
      tc.cs_threshold = get_or(t, "cs_threshold", tc.cs_threshold);
    }
    c.train.validate();

    if (doc.contains("ablation")) {
      const json& a = doc.at("ablation");
      check_keys(a, {"sav", "saw", "fixed_sigma", "loss", "seeds"}, "ablation");
      c.ablation.sav = get_or(a, "sav", true);
      c.ablation.saw = get_or(a, "saw", true);
      c.ablation.fixed_sigma = get_or(a, "fixed_sigma", 2.0);
      if (a.contains("loss")) c.ablation.loss = parse_loss_mode(a.at("loss").get<std::string>());
      c.ablation.seeds = get_or<std::vector<std::uint64_t>>(a, "seeds", {});
      if (!(c.ablation.fixed_sigma > kSigmaMin)) {
        config_fail("ablation.fixed_sigma must exceed " + format_double(kSigmaMin));
      }
    }

    if (doc.contains("eval")) {
      const json& e = doc.at("eval");
      check_keys(e, {"cs_thresholds", "anchors", "similarity", "checkpoint"}, "eval");
      c.eval.cs_thresholds = get_or(e, "cs_thresholds", c.eval.cs_thresholds);
      c.eval.anchors = get_or(e, "anchors", c.eval.anchors);
      const auto sim = get_or<std::string>(e, "similarity", "pairwise");
      if (sim == "pairwise") {
        c.eval.similarity = SimilarityAggregation::pairwise;
      } else if (sim == "mean_embedding") {
        c.eval.similarity = SimilarityAggregation::mean_embedding;
      } else {
        config_fail("eval.similarity must be 'pairwise' or 'mean_embedding'");
      }
      if (e.contains("checkpoint")) c.eval.checkpoint = e.at("checkpoint").get<std::string>();
      for (double t : c.eval.cs_thresholds) {
        if (!(t >= 0.0)) config_fail("eval.cs_thresholds must be non-negative");
      }
    }
  } catch (const json::exception& e) {
    config_fail(std::string("malformed config: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config_error) throw;
    config_fail(e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::io_error, "config not found: " + path.string());
  return from_json(read_json(path));
}

json ExperimentConfig::to_json() const {
  json data = json::object();
  if (this->data.synthetic) {
    data["synthetic"] = {{"profile", this->data.synthetic->profile.to_json()},
                         {"n_per_label", this->data.synthetic->n_per_label}};
  }
  if (this->data.csv) data["csv"] = this->data.csv->string();
  if (this->data.train_csv) data["train_csv"] = this->data.train_csv->string();
  if (this->data.val_csv) data["val_csv"] = this->data.val_csv->string();
  if (this->data.test_csv) data["test_csv"] = this->data.test_csv->string();
  data["split"] = {{"train", this->data.split.train},
                   {"val", this->data.split.val},
                   {"test", this->data.split.test}};

  json train_doc = train.to_json();
  for (const char* derived : {"seed", "adapt_sigma", "adapt_alpha", "loss"}) {
    train_doc.erase(derived);
  }
  json ablation_doc{{"sav", ablation.sav},
                    {"saw", ablation.saw},
                    {"fixed_sigma", ablation.fixed_sigma},
                    {"seeds", ablation.seeds}};
  if (ablation.loss) ablation_doc["loss"] = std::string(to_string(*ablation.loss));
  json eval_doc{{"cs_thresholds", eval.cs_thresholds},
                {"anchors", eval.anchors},
                {"similarity",
                 eval.similarity == SimilarityAggregation::pairwise ? "pairwise" : "mean_embedding"}};
  if (eval.checkpoint) eval_doc["checkpoint"] = eval.checkpoint->string();

  return json{{"seed", seed},
              {"output_dir", output_dir.string()},
              {"support", {{"min_label", support.min_label()}, {"max_label", support.max_label()}}},
              {"data", data},
              {"partition",
               {{"mode", std::string(to_string(partition.mode))},
                {"k", partition.k},
                {"boundaries", partition.boundaries}}},
              {"model",
               {{"hidden", model.hidden}, {"activation", std::string(to_string(model.activation))}}},
              {"train", train_doc},
              {"ablation", ablation_doc},
              {"eval", eval_doc}};
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return buf.data();
}

ExperimentData load_data(const ExperimentConfig& config, std::uint64_t seed) {
  const auto& d = config.data;
  if (d.synthetic) {
    const Dataset all =
        generate_synthetic(d.synthetic->profile, d.synthetic->n_per_label, mix_seed(seed, kDataStream));
    auto parts = split(all, d.split, mix_seed(seed, kSplitStream));
    return {std::move(parts.train), std::move(parts.val), std::move(parts.test)};
  }
  if (d.csv) {
    auto parts = split(load_csv(*d.csv, config.support), d.split, mix_seed(seed, kSplitStream));
    return {std::move(parts.train), std::move(parts.val), std::move(parts.test)};
  }
  auto load_or_empty = [&](const std::optional<fs::path>& path) {
    return path ? load_csv(*path, config.support) : Dataset(config.support, 0);
  };
  return {load_or_empty(d.train_csv), load_or_empty(d.val_csv), load_or_empty(d.test_csv)};
}

StagePartition build_partition(const ExperimentConfig& config, const Dataset& train) {
  switch (config.partition.mode) {
    case PartitionProvenance::kmeans:
      return kmeans_1d(train.labels(), config.partition.k, config.support);
    case PartitionProvenance::decade:
      return decade_partition(config.support);
    case PartitionProvenance::manual:
      return manual_partition(config.partition.boundaries, config.support);
  }
  return decade_partition(config.support);
}

TrainConfig arm_train_config(const ExperimentConfig& config, bool sav, bool saw,
                             std::optional<LossMode> loss_override, std::uint64_t seed) {
  TrainConfig tc = config.train;
  tc.adapt_sigma = sav;
  tc.loss = loss_override.value_or(saw ? LossMode::saw : LossMode::kl);
  tc.adapt_alpha = saw && tc.loss == LossMode::saw;
  tc.seed = mix_seed(seed, kShuffleStream);
  return tc;
}

StageParams initial_stage_params(const ExperimentConfig& config, bool sav, std::size_t stages) {
  StageParams params = StageParams::initial(stages);
  if (!sav) {
    for (std::size_t s = 0; s < stages; ++s) params.set_sigma(s, config.ablation.fixed_sigma);
  }
  return params;
}

Model initial_model(const ExperimentConfig& config, std::size_t feature_dim, std::uint64_t seed) {
  std::vector<int> dims{static_cast<int>(feature_dim)};
  dims.insert(dims.end(), config.model.hidden.begin(), config.model.hidden.end());
  dims.push_back(static_cast<int>(config.support.size()));
  return init_model(std::move(dims), config.model.activation, mix_seed(seed, kInitStream),
                    config.support);
}

json Checkpoint::to_json() const {
  return json{{"model", model.to_json()},
              {"stage_params", params.to_json()},
              {"partition", partition.to_json()},
              {"support",
               {{"min_label", partition.support().min_label()},
                {"max_label", partition.support().max_label()}}}};
}

Checkpoint Checkpoint::from_json(const json& doc) {
  try {
    const json& s = doc.at("support");
    const LabelSupport support(s.at("min_label").get<int>(), s.at("max_label").get<int>());
    Checkpoint c{Model::from_json(doc.at("model")), StageParams::from_json(doc.at("stage_params")),
                 StagePartition::from_json(doc.at("partition"), support)};
    if (c.params.size() != c.partition.k() || c.model.output_dim() != support.size()) {
      throw Error(ErrorKind::parse_error, "checkpoint parts disagree in shape");
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("malformed checkpoint: ") + e.what());
  }
}

void Checkpoint::save(const fs::path& path) const { write_text(path, to_json().dump(1) + "\n"); }

Checkpoint Checkpoint::load(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::io_error, "checkpoint not found: " + path.string());
  try {
    return from_json(read_json(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

ArmOutcome run_arm(const ExperimentConfig& config, std::uint64_t seed, bool sav, bool saw,
                   std::optional<LossMode> loss_override) {
  const ExperimentData data = load_data(config, seed);
  data.test.require_non_empty("test");
  StagePartition partition = build_partition(config, data.train);
  const TrainConfig tc = arm_train_config(config, sav, saw, loss_override, seed);
  TrainResult result =
      train_sav(data.train, data.val, partition, initial_model(config, data.train.feature_dim(), seed),
                initial_stage_params(config, sav, partition.k()), tc);
  const auto preds = predict_ages(result.model, data.test, tc.prediction_rule);
  const std::array<double, 1> thresholds{tc.cs_threshold};
  MetricsReport test = make_report(preds, data.test.labels(), thresholds, &partition);
  return ArmOutcome{std::move(result), std::move(partition), std::move(test)};
}

int cmd_gen_data(const ExperimentConfig& config, std::ostream& log) {
  if (!config.data.synthetic) config_fail("gen-data needs a data.synthetic section");
  RunRecorder run(config, "gen-data");
  const ExperimentData data = load_data(config, config.seed);
  save_csv(data.train, run.output("train.csv"));
  save_csv(data.val, run.output("val.csv"));
  save_csv(data.test, run.output("test.csv"));
  json profile = config.data.synthetic->profile.to_json();
  profile["n_per_label"] = config.data.synthetic->n_per_label;
  write_text(run.output("profile.json"), profile.dump(2) + "\n");

  // Validate by reloading what was written.
  for (const auto& [name, expected] :
       {std::pair{"train.csv", &data.train}, {"val.csv", &data.val}, {"test.csv", &data.test}}) {
    if (load_csv(config.output_dir / name, config.support) != *expected) {
      run.finish(false, std::string(name) + " failed reload validation");
      log << "error: " << name << " did not reload identically\n";
      return 1;
    }
  }
  run.finish(true);
  log << "wrote " << data.train.size() << "/" << data.val.size() << "/" << data.test.size()
      << " train/val/test samples to " << config.output_dir.string() << "\n";
  return 0;
}

int cmd_stage(const ExperimentConfig& config, std::ostream& log) {
  const ExperimentData data = load_data(config, config.seed);
  data.train.require_non_empty("training");
  const StagePartition partition = build_partition(config, data.train);
  RunRecorder run(config, "stage");
  write_text(run.output("partition.json"), partition.to_json().dump(2) + "\n");
  run.finish(true);
  log << "partition (" << to_string(partition.provenance()) << ", K=" << partition.k() << "):";
  for (int b : partition.boundaries()) log << " " << b;
  log << "\n";
  return 0;
}

int cmd_train(const ExperimentConfig& config, std::ostream& log) {
  const ExperimentData data = load_data(config, config.seed);
  data.train.require_non_empty("training");
  const StagePartition partition = build_partition(config, data.train);
  const TrainConfig tc = arm_train_config(config, config.ablation.sav, config.ablation.saw,
                                          config.ablation.loss, config.seed);
  RunRecorder run(config, "train");
  const fs::path history_csv = run.output("history.csv");
  const fs::path history_json = run.output("history.json");

  TrainResult result{initial_model(config, data.train.feature_dim(), config.seed),
                     initial_stage_params(config, config.ablation.sav, partition.k()), {}};
  try {
    result = train_sav(data.train, data.val, partition, result.model, result.params, tc);
  } catch (const TrainingDiverged& e) {
    write_text(history_csv, e.history().to_csv());
    write_text(history_json, e.history().to_json().dump(1) + "\n");
    run.finish(false, e.what());
    log << "error: " << e.what() << " (history written)\n";
    return 2;
  }

  const Checkpoint checkpoint{result.model, result.params, partition};
  const fs::path checkpoint_path = run.output("checkpoint.json");
  checkpoint.save(checkpoint_path);
  write_text(run.output("stage_params.json"), result.params.to_json().dump(2) + "\n");
  write_text(history_csv, result.history.to_csv());
  write_text(history_json, result.history.to_json().dump(1) + "\n");

  const Checkpoint reloaded = Checkpoint::load(checkpoint_path);
  if (!(reloaded.model == result.model) || !(reloaded.params == result.params)) {
    run.finish(false, "checkpoint failed bit-exact reload validation");
    log << "error: checkpoint did not reload bit-exactly\n";
    return 1;
  }
  run.finish(true);
  const auto best = result.history.snapshot_l1();
  log << "trained " << result.history.epochs.size() << " epochs; best val L1 "
      << (best.empty() ? std::string("n/a") : format_double(best.back())) << "\n";
  return 0;
}

namespace {

fs::path checkpoint_path(const ExperimentConfig& config) {
  return config.eval.checkpoint.value_or(config.output_dir / "checkpoint.json");
}

}  // namespace

int cmd_eval(const ExperimentConfig& config, std::ostream& log) {
  const Checkpoint checkpoint = Checkpoint::load(checkpoint_path(config));
  const Dataset test = load_data(config, config.seed).test;
  test.require_non_empty("test");
  const auto preds = predict_ages(checkpoint.model, test, config.train.prediction_rule);
  const MetricsReport report =
      make_report(preds, test.labels(), config.eval.cs_thresholds, &checkpoint.partition);
  RunRecorder run(config, "eval");
  write_text(run.output("metrics.json"), report.to_json().dump(2) + "\n");
  write_text(run.output("metrics.csv"), report.to_csv());
  run.finish(true);
  log << "MAE " << format_double(report.mae) << " over " << report.n << " samples\n";
  return 0;
}

int cmd_analyze(const ExperimentConfig& config, std::ostream& log) {
  if (config.eval.anchors.empty()) config_fail("analyze needs at least one eval.anchors entry");
  const Checkpoint checkpoint = Checkpoint::load(checkpoint_path(config));
  const Dataset test = load_data(config, config.seed).test;
  test.require_non_empty("test");
  const auto embs = embeddings(checkpoint.model, test);
  const auto labels = test.labels();
  std::vector<SimilarityCurve> curves;
  for (int anchor : config.eval.anchors) {
    curves.push_back(
        anchor_similarity_curve(embs, labels, anchor, config.support, config.eval.similarity));
  }
  RunRecorder run(config, "analyze");
  for (const auto& curve : curves) {
    write_text(run.output("similarity_anchor_" + std::to_string(curve.anchor) + ".csv"),
               curve.to_csv());
  }
  run.finish(true);
  log << "wrote " << curves.size() << " similarity curves\n";
  return 0;
}

int cmd_run_ablation(const ExperimentConfig& config, std::ostream& log) {
  struct Arm {
    const char* name;
    bool sav;
    bool saw;
  };
  static constexpr Arm kArms[] = {
      {"baseline", false, false}, {"sav", true, false}, {"saw", false, true}, {"sav+saw", true, true}};
  const std::vector<std::uint64_t> seeds =
      config.ablation.seeds.empty() ? std::vector<std::uint64_t>{config.seed} : config.ablation.seeds;

  RunRecorder run(config, "run-ablation");
  std::string csv = "arm,sav,saw,seed,test_mae,test_cs\n";
  std::string summary;
  for (const Arm& arm : kArms) {
    double mae_sum = 0.0;
    double cs_sum = 0.0;
    for (std::uint64_t seed : seeds) {
      const ArmOutcome outcome = run_arm(config, seed, arm.sav, arm.saw);
      const double cs = outcome.test.cs.begin()->second;
      csv += std::string(arm.name) + "," + (arm.sav ? "1" : "0") + "," + (arm.saw ? "1" : "0") +
             "," + std::to_string(seed) + "," + format_double(outcome.test.mae) + "," +
             format_double(cs) + "\n";
      mae_sum += outcome.test.mae;
      cs_sum += cs;
      log << arm.name << " seed " << seed << ": test MAE " << format_double(outcome.test.mae) << "\n";
    }
    const double n = static_cast<double>(seeds.size());
    summary += std::string(arm.name) + "," + (arm.sav ? "1" : "0") + "," + (arm.saw ? "1" : "0") +
               ",mean," + format_double(mae_sum / n) + "," + format_double(cs_sum / n) + "\n";
  }
  write_text(run.output("ablation.csv"), csv + summary);
  run.finish(true);
  return 0;
}

}  // namespace saldl::experiment
