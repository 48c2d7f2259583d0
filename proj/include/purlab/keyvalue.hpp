// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Flat "dotted.key = value" text format shared by run configs and model
// definition files. One entry per line, '#' starts a comment, keys are unique.
#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace purlab {

class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in, const std::string& source = "<input>");
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> find(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Whitespace-separated numbers; accepts `sqrt(x)` and `-sqrt(x)` tokens.
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<long> get_ints(const std::string& key) const;

  /// Entries under `prefix.` with the prefix removed.
  KeyValueFile subtree(const std::string& prefix) const;

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  const std::string& source() const noexcept { return source_; }

 private:
  std::map<std::string, std::string> entries_;
  std::filesystem::path base_dir_;
  std::string source_;
};

/// Parses one numeric token of the format (plain number or [-]sqrt(x)).
double parse_number(const std::string& token, const std::string& context);

}  // namespace purlab
