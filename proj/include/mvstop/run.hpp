#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace mvstop {

enum ExitCode : int { exit_success = 0, exit_error = 1, exit_certification_failure = 2 };

struct RunOverrides {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
};

/// Executes the config's command and writes manifest.json, field CSVs and
/// report.json under the output directory. Errors are printed to `err`.
int run(const std::filesystem::path& config_path, const RunOverrides& overrides,
        std::ostream& out, std::ostream& err);

}  // namespace mvstop
