#pragma once

#include "mvstop/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testing_helpers {

inline mvstop::ProblemSpec constant_reward(double sigma = 0.3, double lambda = 0.3,
                                           double horizon = 1.0) {
  mvstop::ProblemSpec s;
  s.drift = mvstop::CoefficientSpec::constant(0.0);
  s.diffusion = mvstop::CoefficientSpec::constant(sigma);
  s.reward = mvstop::CoefficientSpec::constant(1.0);
  s.gamma = 1.0;
  s.lambda = lambda;
  s.horizon = horizon;
  return s;
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("mvstop_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    const auto p = path / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testing_helpers
