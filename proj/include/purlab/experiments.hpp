// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment registry and batch runner behind the `purlab` command.
//
// Configs are flat `key = value` files (see README). Every run writes its CSV
// outputs and a manifest.json with checksums and per-check verdicts.
#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "purlab/keyvalue.hpp"

namespace purlab {

inline constexpr const char* kVersion = "1.0.0";

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::vector<std::string> required_keys;
};

const std::vector<ExperimentInfo>& experiment_registry();
void list_experiments(std::ostream& out);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct OutputFile {
  std::string name;
  std::string sha256;
  std::size_t bytes = 0;
};

struct RunReport {
  std::string experiment;
  std::filesystem::path output_dir;
  std::vector<OutputFile> outputs;
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

struct RunOptions {
  /// Overrides `output.dir`.
  std::optional<std::filesystem::path> output_dir;
  /// Overrides `run.threads`; PURLAB_THREADS overrides both.
  std::optional<std::size_t> threads;
};

/// Runs a parsed config. Throws purlab::Error on invalid input.
RunReport execute(const KeyValueFile& config, const RunOptions& options = {});

/// Parses the config and builds model and initial state without running.
void validate(const KeyValueFile& config);

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitCheckFailed = 2, kExitIo = 3 };

/// CLI entry points: print diagnostics to `err` and return an exit code.
int run_config_file(const std::filesystem::path& path, const RunOptions& options, std::ostream& out,
                    std::ostream& err);
int run_config(const KeyValueFile& config, const RunOptions& options, std::ostream& out, std::ostream& err);
int validate_config_file(const std::filesystem::path& path, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::string& data);

}  // namespace purlab
