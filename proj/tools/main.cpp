#include "experiment.hpp"

#include "saldl/error.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>

namespace ex = saldl::experiment;

int main(int argc, char** argv) {
  CLI::App app{"Stage-wise adaptive label distribution learning experiments"};
  app.set_version_flag("--version", ex::code_version());
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  using Command = std::function<int(const ex::ExperimentConfig&, std::ostream&)>;
  const std::map<std::string, std::pair<std::string, Command>> commands{
      {"gen-data", {"Generate synthetic train/val/test CSVs", ex::cmd_gen_data}},
      {"stage", {"Partition the training labels into stages", ex::cmd_stage}},
      {"train", {"Run validation-gated stage-adaptive training", ex::cmd_train}},
      {"eval", {"Score a checkpoint on the test split", ex::cmd_eval}},
      {"analyze", {"Write anchor cosine-similarity curves", ex::cmd_analyze}},
      {"run-ablation", {"Run the four SAV/SAW ablation arms", ex::cmd_run_ablation}},
  };
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config_path, "Experiment JSON")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out, "Override the output directory");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    ex::ExperimentConfig config = ex::ExperimentConfig::load(config_path);
    if (seed) config.seed = *seed;
    if (out) config.output_dir = *out;
    for (const auto& [name, entry] : commands) {
      if (app.got_subcommand(name)) return entry.second(config, std::cout);
    }
  } catch (const saldl::Error& e) {
    std::cerr << "saldl: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "saldl: unexpected failure: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
