// acim-sim: batch driver for the analog compute-in-memory simulator.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "acim/cli/commands.hpp"
#include "acim/error.hpp"

namespace {

int threads_from_env() {
  const char* env = std::getenv("ACIM_SIM_THREADS");
  if (!env || !*env) return 1;
  try {
    std::size_t used = 0;
    const int n = std::stoi(env, &used);
    if (used != std::string(env).size() || n < 1) throw std::invalid_argument(env);
    return n;
  } catch (const std::exception&) {
    throw acim::ConfigError(std::string("ACIM_SIM_THREADS must be a positive integer, got '") +
                            env + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bit-wise simulator for analog compute-in-memory DNN inference"};
  app.require_subcommand(1, 1);

  acim::cli::RunOptions opts;
  std::string out_dir;
  int threads = 0;
  std::uint64_t seed = 0;
  for (const auto& name : acim::cli::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
    sub->add_option("--threads", threads, "worker threads (default: ACIM_SIM_THREADS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "override the config seed");
    sub->callback([&opts, name] { opts.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    for (const CLI::App* sub : app.get_subcommands()) {
      if (sub->count("--out")) opts.out_dir = out_dir;
      if (sub->count("--seed")) opts.seed = seed;
      opts.threads = sub->count("--threads") ? threads : threads_from_env();
    }
    acim::cli::run(opts);
  } catch (const acim::ConfigError& e) {
    std::cerr << "acim-sim: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "acim-sim: error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
