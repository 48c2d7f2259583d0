// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// purlab run <config> | validate <config> | list | counterexample [flags]
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "purlab/csv.hpp"
#include "purlab/error.hpp"
#include "purlab/experiments.hpp"
#include "purlab/keyvalue.hpp"

int main(int argc, char** argv) {
  CLI::App app{"purlab: quantum trajectory purification laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", purlab::kVersion);

  std::string config_path;
  std::string out_dir;
  std::size_t threads = 0;

  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run->add_option("--threads", threads, "worker threads (PURLAB_THREADS takes precedence)");

  auto* validate = app.add_subcommand("validate", "parse a config and check the model without running");
  validate->add_option("config", config_path, "config file")->required();

  app.add_subcommand("list", "list registered experiments");

  double c = 0.5, z = 3.0, gamma0 = 0.5;
  long horizon = 200, trajectories = 1000;
  std::uint64_t seed = 0;
  auto* ce = app.add_subcommand("counterexample", "run the shift-model counterexample ensemble");
  ce->add_option("--c", c, "limit c of alpha(k) = c - 1/(k+z)")->capture_default_str();
  ce->add_option("--z", z, "offset z")->capture_default_str();
  ce->add_option("--gamma0", gamma0, "initial weight on e_1")->capture_default_str();
  ce->add_option("--horizon", horizon, "steps T")->capture_default_str();
  ce->add_option("--trajectories", trajectories, "ensemble size M")->capture_default_str();
  ce->add_option("--seed", seed, "base seed")->capture_default_str();
  ce->add_option("--out", out_dir, "output directory");
  ce->add_option("--threads", threads, "worker threads (PURLAB_THREADS takes precedence)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : purlab::kExitValidation;
  }

  purlab::RunOptions options;
  if (!out_dir.empty()) options.output_dir = out_dir;
  if (threads > 0) options.threads = threads;

  if (app.got_subcommand("list")) {
    purlab::list_experiments(std::cout);
    return purlab::kExitOk;
  }
  if (app.got_subcommand("validate")) return purlab::validate_config_file(config_path, std::cout, std::cerr);
  if (app.got_subcommand("run")) return purlab::run_config_file(config_path, options, std::cout, std::cerr);

  std::ostringstream cfg;
  cfg << "experiment = counterexample\n"
      << "model.kind = shift\n"
      << "model.c = " << purlab::format_double(c) << "\n"
      << "model.z = " << purlab::format_double(z) << "\n"
      << "init.kind = two_point\n"
      << "init.gamma = " << purlab::format_double(gamma0) << "\n"
      << "run.horizon = " << horizon << "\n"
      << "run.trajectories = " << trajectories << "\n"
      << "run.seed = " << seed << "\n";
  std::istringstream in(cfg.str());
  try {
    return purlab::run_config(purlab::KeyValueFile::parse(in, "<counterexample flags>"), options, std::cout, std::cerr);
  } catch (const purlab::Error& e) {
    std::cerr << "error: " << purlab::to_string(e.kind()) << ": " << e.what() << "\n";
    return purlab::is_validation_error(e.kind()) ? purlab::kExitValidation : purlab::kExitIo;
  }
}
