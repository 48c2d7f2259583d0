// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/keyvalue.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "purlab/error.hpp"

namespace purlab {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char ch : key) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '_' || ch == '-')) return false;
  }
  return true;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

double parse_plain(const std::string& token, const std::string& context) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorKind::ConfigError, context + ": '" + token + "' is not a number");
  }
  return value;
}

}  // namespace

double parse_number(const std::string& token, const std::string& context) {
  std::string t = token;
  double sign = 1.0;
  if (!t.empty() && t[0] == '-' && t.rfind("-sqrt(", 0) == 0) {
    sign = -1.0;
    t = t.substr(1);
  }
  if (t.rfind("sqrt(", 0) == 0) {
    if (t.back() != ')') throw Error(ErrorKind::ConfigError, context + ": unbalanced sqrt in '" + token + "'");
    const double inner = parse_plain(t.substr(5, t.size() - 6), context);
    if (inner < 0) throw Error(ErrorKind::ConfigError, context + ": sqrt of a negative number");
    return sign * std::sqrt(inner);
  }
  return parse_plain(t, context);
}

KeyValueFile KeyValueFile::parse(std::istream& in, const std::string& source) {
  KeyValueFile kv;
  kv.source_ = source;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw Error(ErrorKind::ConfigError, where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw Error(ErrorKind::ConfigError, where + ": invalid key '" + key + "'");
    if (!kv.entries_.emplace(key, value).second) {
      throw Error(ErrorKind::ConfigError, where + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  KeyValueFile kv = parse(in, path.string());
  kv.base_dir_ = path.parent_path();
  return kv;
}

std::optional<std::string> KeyValueFile::find(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueFile::get_string(const std::string& key) const {
  auto v = find(key);
  if (!v) throw Error(ErrorKind::ConfigError, source_ + ": missing required key '" + key + "'");
  return *v;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

double KeyValueFile::get_double(const std::string& key) const {
  return parse_number(get_string(key), source_ + ": key '" + key + "'");
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long KeyValueFile::get_int(const std::string& key) const {
  const std::string s = get_string(key);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::ConfigError, source_ + ": key '" + key + "' is not an integer");
  }
  return value;
}

long KeyValueFile::get_int(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t KeyValueFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_string(key);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::ConfigError, source_ + ": key '" + key + "' is not an unsigned integer");
  }
  return value;
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_string(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw Error(ErrorKind::ConfigError, source_ + ": key '" + key + "' is not a boolean");
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& tok : split_ws(get_string(key))) out.push_back(parse_number(tok, source_ + ": key '" + key + "'"));
  return out;
}

std::vector<long> KeyValueFile::get_ints(const std::string& key) const {
  std::vector<long> out;
  for (const auto& tok : split_ws(get_string(key))) {
    long value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw Error(ErrorKind::ConfigError, source_ + ": key '" + key + "' has a non-integer entry");
    }
    out.push_back(value);
  }
  return out;
}

KeyValueFile KeyValueFile::subtree(const std::string& prefix) const {
  KeyValueFile sub;
  sub.base_dir_ = base_dir_;
  sub.source_ = source_;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : entries_) {
    if (k.rfind(p, 0) == 0) sub.entries_.emplace(k.substr(p.size()), v);
  }
  return sub;
}

}  // namespace purlab
