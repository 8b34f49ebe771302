#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "qsdlab/config.hpp"
#include "qsdlab/errors.hpp"
#include "qsdlab/experiments.hpp"
#include "qsdlab/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quasi-stationary distribution experiments for Langevin dynamics"};
  std::string experiment;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("experiment", experiment, "kernels_check, oracle, fv, sweep, coupling, exit_law or gibbs")
      ->required()
      ->check(CLI::IsMember({"kernels_check", "oracle", "fv", "sweep", "coupling", "exit_law", "gibbs"}));
  app.add_option("--config", config_path, "run file")->required();
  app.add_option("--seed", seed, "master seed, overrides the run file");
  app.add_option("--out", out_dir, "output directory, overrides the run file");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::ifstream file(config_path, std::ios::binary);
  if (!file) {
    std::cerr << "configuration error: cannot read " << config_path << "\n";
    return 2;
  }
  std::ostringstream text;
  text << file.rdbuf();

  qsdlab::RunConfig cfg;
  try {
    cfg = qsdlab::parse_config(text.str(), qsdlab::experiment_from_string(experiment));
  } catch (const qsdlab::ConfigError& e) {
    std::cerr << "configuration error: " << config_path << ": " << e.what() << "\n";
    return 2;
  }
  if (seed) cfg.seed = *seed;

  qsdlab::RunOptions options;
  options.threads = qsdlab::default_thread_count();
  options.out_dir = out_dir;
  return qsdlab::run(cfg, options, std::cout, std::cerr);
}
