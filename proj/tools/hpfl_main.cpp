#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hpfl/commands.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool print_config = false;

  hpfl::CliOverrides overrides() const {
    return {out_dir, seed, threads, print_config};
  }
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  cmd->add_option("--config", flags.config, "JSON run configuration")
      ->required(config_required);
  cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "master seed (overrides config)");
  cmd->add_option("--threads", flags.threads, "worker thread count (overrides config)");
  cmd->add_flag("--print-config", flags.print_config,
                "print the effective configuration and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hpfl — federated learning with pruned-subnetwork pre-training"};
  app.require_subcommand(1);

  CommonFlags pre_flags;
  CLI::App* pre = app.add_subcommand(
      "pretrain", "train the denoising autoencoder and prune it down to a subnetwork");
  add_common(pre, pre_flags, /*config_required=*/true);

  CommonFlags fed_flags;
  std::string fed_checkpoint;
  CLI::App* fed =
      app.add_subcommand("federate", "run federated training and write the report");
  add_common(fed, fed_flags, /*config_required=*/true);
  fed->add_option("--checkpoint", fed_checkpoint,
                  "pretrain checkpoint (hp_fl) or mid-run snapshot to resume");

  CommonFlags rep_flags;
  std::vector<std::string> rep_histories;
  CLI::App* rep =
      app.add_subcommand("report", "recompute metrics from run histories into one table");
  add_common(rep, rep_flags, /*config_required=*/false);
  rep->add_option("histories", rep_histories, "report.json files from federate runs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) {
      hpfl::cmd_pretrain(pre_flags.config, pre_flags.overrides());
    } else if (fed->parsed()) {
      std::optional<std::string> ckpt;
      if (!fed_checkpoint.empty()) ckpt = fed_checkpoint;
      hpfl::cmd_federate(fed_flags.config, ckpt, fed_flags.overrides());
    } else if (rep->parsed()) {
      std::optional<std::string> cfg;
      if (!rep_flags.config.empty()) cfg = rep_flags.config;
      hpfl::cmd_report(rep_histories, cfg, rep_flags.overrides());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
