#pragma once

#include "droplet/config.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace droplet::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 1,
    exit_solver = 2,
    exit_rate = 3,
};

struct Overrides {
    std::optional<std::filesystem::path> out;
    std::optional<int> jobs;
    std::optional<DumpFormat> dump;
};

// Loads the config, applies overrides and dispatches. Never throws; errors
// are reported on stderr and mapped to exit codes.
int run(const std::string& command, const std::filesystem::path& config, const Overrides& overrides);

int cmd_equilibrium(const RunConfig& cfg);
int cmd_thermal(const RunConfig& cfg);
int cmd_radial(const RunConfig& cfg);
int cmd_expansion(const RunConfig& cfg);
int cmd_verify(const RunConfig& cfg);

} // namespace droplet::cli
