#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "crsa/cli/config.hpp"

namespace crsa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInternal = 3;

/// Larger sweeps are refused before any work is done.
inline constexpr std::uint64_t kMaxSweepCells = 10'000'000;

enum class Command { Region, Optimize, Simulate, Estimate, Sweep };

std::string_view to_string(Command c) noexcept;
std::optional<Command> command_from_string(std::string_view name) noexcept;

/// Command-line flags that take precedence over the config document.
/// `mode` is the simulation mode for simulate and the estimator mode for
/// estimate; other commands reject it.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::string> mode;
};

/// Throws ConfigError when an override does not apply to the command.
void apply_overrides(RunConfig& cfg, Command cmd, const Overrides& o);

// Each command writes its files into cfg.output_dir (created if missing) and
// returns the JSON document it also wrote there. Config problems surface as
// ConfigError.

/// region_<scheme>.csv per scheme, region_UNION.csv and region_summary.json.
nlohmann::json cmd_region(const RunConfig& cfg);
/// optimize.json
nlohmann::json cmd_optimize(const RunConfig& cfg);
/// simulate.json, plus trace.csv when record_traces is set.
nlohmann::json cmd_simulate(const RunConfig& cfg);
/// estimate.json
nlohmann::json cmd_estimate(const RunConfig& cfg);
/// sweep.csv and sweep_summary.json.
nlohmann::json cmd_sweep(const RunConfig& cfg);

nlohmann::json dispatch(Command cmd, const RunConfig& cfg);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double x);

}  // namespace crsa::cli
