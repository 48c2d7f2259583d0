// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace purlab {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (const auto& c : columns) field(c);
  end_row();
}

void CsvWriter::sep() {
  if (!first_) out_ << ',';
  first_ = false;
}

CsvWriter& CsvWriter::field(const std::string& s) {
  sep();
  out_ << s;
  return *this;
}

CsvWriter& CsvWriter::field(double x) {
  sep();
  out_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::field(long long x) {
  sep();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::field(unsigned long long x) {
  sep();
  out_ << x;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

}  // namespace purlab
