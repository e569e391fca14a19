#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "zeroflow/config.hpp"
#include "zeroflow/errors.hpp"
#include "zeroflow/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"zeroflow: zero-number experiments for scalar parabolic equations on a periodic torus"};
  std::string experiment;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  app.add_option("experiment", experiment, "simulate | balance | vfamily | colehopf | ensemble | allencahn | check")
      ->required()
      ->check(CLI::IsMember(zeroflow::experiment_names()));
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out_dir, "override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return zeroflow::exit_config;
  }

  zeroflow::ExperimentConfig config;
  try {
    config = zeroflow::load_config(config_path);
  } catch (const zeroflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return zeroflow::exit_config;
  }
  config.experiment = experiment;
  if (seed) config.seed = *seed;
  if (out_dir) config.output = *out_dir;
  return zeroflow::run(config, std::cout);
}
