#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wfl/cli/commands.hpp"
#include "wfl/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Completion time of wireless federated learning under TDMA and random access"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::optional<std::string> protocol;
  std::optional<std::string> out_dir;
  bool json = false;

  const char* blurbs[] = {
      "print nu and required iterations K(eps)",
      "iteration and completion time for one allocation",
      "batch allocation (stepwise or optimal)",
      "expected completion time over a list of batch gaps",
      "federated SGD on the synthetic task with slot accounting",
      "slot-by-slot trace of one iteration",
  };
  std::size_t i = 0;
  for (std::string_view name : wfl::cli::kCommands) {
    CLI::App* sub = app.add_subcommand(std::string(name), blurbs[i++]);
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "base seed");
    sub->add_option("--trials", trials, "Monte-Carlo trials");
    sub->add_option("--protocol", protocol, "tdma or ra")->check(CLI::IsMember({"tdma", "ra"}));
    sub->add_option("--out", out_dir, "write <command>.csv and <command>.meta.json here");
    sub->add_flag("--json", json, "print JSON instead of CSV");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  wfl::cli::Flags flags;
  flags.seed = seed;
  flags.trials = trials;
  flags.out_dir = out_dir;
  flags.json = json;
  if (protocol) flags.protocol = wfl::parse_protocol(*protocol);

  const std::string command = app.get_subcommands().front()->get_name();
  return wfl::cli::execute(command, config_path, flags, std::cout, std::cerr);
}
