#pragma once

#include "mvstop/model.hpp"
#include "mvstop/simulate.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvstop {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Section = std::map<std::string, std::string>;

struct OutputConfig {
  std::filesystem::path directory = "mvstop_out";
  bool csv = true;
  bool json = true;
  int stride = 1;
};

/// Parsed INI run description: [problem], [grid], [output], [mc] and exactly
/// one command section.
struct RunConfig {
  std::string command;
  std::map<std::string, Section> sections;  ///< every key as written
  std::filesystem::path base_dir;
  std::optional<ProblemSpec> problem;
  std::optional<Grid> grid;
  OutputConfig output;
  MCConfig mc;

  const Section& command_section() const { return sections.at(command); }
  bool has(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  double number(const std::string& key) const;
  long integer(const std::string& key, long fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> list(const std::string& key, std::vector<double> fallback) const;
};

const std::vector<std::string>& command_names();

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// "constant 0.3", "affine 1 -1", "gbm 0.05", "tabulated file.csv".
CoefficientSpec parse_coefficient(const std::string& text, const Grid* grid, double horizon,
                                  const std::filesystem::path& base_dir);

}  // namespace mvstop
