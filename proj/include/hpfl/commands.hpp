#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hpfl {

// CLI flag values that override the loaded config.
struct CliOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool print_config = false;
};

// The three subcommands. Each throws on any error; the CLI wrapper turns
// that into a nonzero exit. With print_config set they dump the effective
// configuration and do no work.
void cmd_pretrain(const std::string& config_path, const CliOverrides& cli);
void cmd_federate(const std::string& config_path, const std::optional<std::string>& checkpoint,
                  const CliOverrides& cli);
void cmd_report(const std::vector<std::string>& history_paths,
                const std::optional<std::string>& config_path, const CliOverrides& cli);

}  // namespace hpfl
