#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wfl/core.hpp"

namespace wfl::cli {

/// Command-line overrides. Each one, when set, replaces the matching config key.
struct Flags {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::optional<Protocol> protocol;
  std::optional<std::string> out_dir;
  bool json = false;
};

/// A command's result: one CSV table plus a summary object.
struct Report {
  std::string command;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  nlohmann::json summary = nlohmann::json::object();
  nlohmann::json resolved = nlohmann::json::object();  // config after defaults and overrides
};

inline constexpr std::string_view kCommands[] = {"ktarget", "time",  "allocate",
                                                 "sweep-delta", "train", "simulate"};

Report cmd_ktarget(const nlohmann::json& config, const Flags& flags);
Report cmd_time(const nlohmann::json& config, const Flags& flags);
Report cmd_allocate(const nlohmann::json& config, const Flags& flags);
Report cmd_sweep_delta(const nlohmann::json& config, const Flags& flags);
Report cmd_train(const nlohmann::json& config, const Flags& flags);
Report cmd_simulate(const nlohmann::json& config, const Flags& flags);

Report run(std::string_view command, const nlohmann::json& config, const Flags& flags);

/// Shortest round-trip decimal form.
std::string format_number(double value);

void write_csv(std::ostream& out, const Report& report);
nlohmann::json to_json(const Report& report);

/// Writes <dir>/<command>.csv and <dir>/<command>.meta.json.
void write_outputs(const std::string& dir, const Report& report, const Flags& flags);

/// Runs a command end to end and maps errors to exit codes:
/// 0 ok, 2 config error, 3 numerical non-convergence, 4 slot cap exceeded, 1 anything else.
int execute(std::string_view command, const std::optional<std::string>& config_path,
            const Flags& flags, std::ostream& out, std::ostream& err);

}  // namespace wfl::cli
