// nmode: command-line front end.
//
//   nmode <command> [--config run.json] [--out DIR] [--seed INT] [--threads INT]
//         [--set key.path=value ...]

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nmode/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"N-mode nonlinear lattice model: spectra, stationary states, bifurcations, dynamics"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::string> overrides;

  auto* config_opt = app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "PRNG seed for random starts");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--set", overrides, "override a config field, e.g. model.N=8");
  // Options may appear on either side of the subcommand.
  app.fallthrough();
  for (const auto& name : nmode::command_names()) app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : nmode::exit_parameter;
  }

  nmode::RunConfig cfg;
  try {
    if (*config_opt) cfg = nmode::RunConfig::from_file(config_path);
    for (const auto& o : overrides) cfg.set(o);
    if (*seed_opt) cfg.set("seed=" + std::to_string(seed));
    if (*threads_opt) cfg.set("threads=" + std::to_string(threads));
    if (*out_opt) cfg.doc["output_path"] = out_dir;
  } catch (const nmode::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return nmode::exit_parameter;
  } catch (const nmode::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return nmode::exit_io;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  return nmode::run_command(command, cfg, cfg.output_path());
}
