// rdm: spectral-filter and effective-rank laboratory for non-contrastive
// learning dynamics.
//
//   rdm simulate --config c.json [--set key=value ...]
//   rdm align    --config c.json [--set key=value ...]
//   rdm filters  --filter pow:-0.5 --seed 3 [--set key=value ...]
//   rdm verify   --seed 7 --instances 1000 [--out-dir DIR]
//
// RDM_OUT_DIR overrides the configured output directory.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "rdm/config.hpp"
#include "rdm/experiments.hpp"
#include "rdm/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string filter;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::int64_t instances = 0;
};

int run(const std::string& forced_kind, const CommonArgs& args) {
  rdm::ExperimentConfig config;
  try {
    if (!args.config_path.empty())
      config = rdm::load_config_file(args.config_path);
    if (!forced_kind.empty()) config.kind = forced_kind;
    if (!args.filter.empty()) config.filter = args.filter;
    if (args.seed_given) config.seed = args.seed;
    if (args.instances > 0) config.instances = args.instances;
    if (!args.out_dir.empty()) config.out_dir = args.out_dir;
    for (const auto& assignment : args.overrides)
      rdm::apply_override(config, assignment);
    rdm::validate_config(config);
  } catch (const rdm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return rdm::run_experiment_exit_code(config);
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_config) {
  if (with_config)
    cmd->add_option("--config", args.config_path, "experiment config JSON");
  cmd->add_option("--set", args.overrides, "override a config key (key=value)")
      ->take_all();
  cmd->add_option("--out-dir", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "master seed")
      ->each([&args](const std::string&) { args.seed_given = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral-filter and effective-rank laboratory"};
  app.set_version_flag("--version", std::string(rdm::kToolVersion));
  app.require_subcommand(1);

  CommonArgs sim_args, align_args, filter_args, verify_args;

  CLI::App* simulate =
      app.add_subcommand("simulate", "run the experiment described by a config");
  add_common(simulate, sim_args, true);

  CLI::App* align = app.add_subcommand(
      "align", "predictor gradient descent with alignment diagnostics");
  add_common(align, align_args, true);

  CLI::App* filters = app.add_subcommand(
      "filters", "apply a filter to a seeded batch and extract it back");
  add_common(filters, filter_args, false);
  filters->add_option("--filter", filter_args.filter, "filter spec string")
      ->required();

  CLI::App* verify =
      app.add_subcommand("verify", "run the randomized property suite");
  add_common(verify, verify_args, false);
  verify->add_option("--instances", verify_args.instances,
                     "instances per property");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) return run("", sim_args);
  if (align->parsed()) return run("align", align_args);
  if (filters->parsed()) return run("filters", filter_args);
  if (verify->parsed()) return run("verify", verify_args);
  return 2;
}
