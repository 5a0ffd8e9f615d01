#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cfgame/inference.hpp"
#include "cfgame/model.hpp"
#include "cfgame/simulate.hpp"

namespace cfgame::cli {

enum ExitCode : int { kOk = 0, kInternalError = 1, kInvalidInput = 2, kReplicationFailed = 3 };

struct CheckItem {
    std::string name;
    double computed;
    double published;
    double tolerance;
    bool pass;
};

/// Recomputes the published aggregation values and odds-ratio transforms.
/// `tolerance_override` replaces every per-item tolerance.
std::vector<CheckItem> replication_checks(std::optional<double> tolerance_override = std::nullopt);

struct RunConfig {
    std::optional<std::filesystem::path> out_dir;  // created if absent
    std::optional<std::filesystem::path> log_path;
    std::uint64_t seed = 42;
    std::optional<std::int64_t> replications;  // overrides per-scenario counts
    unsigned threads = 0;
    bool json = false;  // stdout format; files are always written as both
};

int cmd_solve(const GameParams& params, std::ostream& out);
int cmd_replicate(std::ostream& out, std::optional<double> tolerance_override, bool json);
int cmd_simulate(std::vector<Scenario> design, const RunConfig& cfg, std::ostream& out);
int cmd_analyze(const std::filesystem::path& log, Outcome model, bool mixture, bool json,
                std::ostream& out);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cfgame::cli
