// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace purlab {

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

/// Minimal CSV writer: comma separated, LF line endings, no quoting (no
/// field produced by this library contains a comma).
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void header(const std::vector<std::string>& columns);

  CsvWriter& field(const std::string& s);
  CsvWriter& field(double x);
  CsvWriter& field(long long x);
  CsvWriter& field(unsigned long long x);
  CsvWriter& field(int x) { return field(static_cast<long long>(x)); }
  CsvWriter& field(long x) { return field(static_cast<long long>(x)); }
  CsvWriter& field(unsigned long x) { return field(static_cast<unsigned long long>(x)); }
  CsvWriter& field(bool b) { return field(std::string(b ? "true" : "false")); }
  void end_row();

 private:
  void sep();
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace purlab
