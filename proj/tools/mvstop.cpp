#include "mvstop/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium mean-variance stopping: solvers, simulation and verification"};
  std::string config;
  std::string output_dir;
  std::uint64_t seed = 0;
  app.add_option("config", config, "INI run configuration")->required();
  auto* out_opt = app.add_option("--output-dir", output_dir, "override [output] directory");
  auto* seed_opt = app.add_option("--seed", seed, "override [mc] seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mvstop::exit_error;
  }
  mvstop::RunOverrides ov;
  if (*out_opt) ov.output_dir = output_dir;
  if (*seed_opt) ov.seed = seed;
  return mvstop::run(config, ov, std::cout, std::cerr);
}
