#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "vilab/config.hpp"

namespace vilab {

// exit codes of a config run
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitVerifyFailed = 3;

struct RunOptions {
    std::optional<std::string> output_dir_override; // beats config and env
    bool dump_mesh = false;
    bool dump_matrix = false;
    std::ostream* log = nullptr;
};

/// Executes one config: solves, verifies, writes CSV/JSON artifacts.
/// Output directory precedence: override, VILAB_OUTPUT_DIR, config.
int run_config_file(const std::filesystem::path& config_path, const RunOptions& opts = {});

/// Runs a registered fixture study, printing the table; exit 0 when the
/// observed order lies in the case window, 3 otherwise.
int run_fixture(const std::string& name, const RunOptions& opts = {});

} // namespace vilab
