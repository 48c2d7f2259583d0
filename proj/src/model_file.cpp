// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/model_file.hpp"

#include <sstream>

#include "purlab/csv.hpp"
#include "purlab/error.hpp"

namespace purlab {
namespace {

std::vector<ComplexMatrix> parse_operators(const KeyValueFile& kv) {
  const long dim = kv.get_int("dim");
  const long count = kv.get_int("operators");
  if (dim < 1) throw Error(ErrorKind::InvalidParameters, "model dim must be positive");
  if (count < 1) throw Error(ErrorKind::InvalidParameters, "model needs at least one operator");
  std::vector<ComplexMatrix> ops;
  for (long i = 1; i <= count; ++i) {
    const std::string key = "op." + std::to_string(i);
    const std::vector<double> values = kv.get_doubles(key);
    if (values.size() != static_cast<std::size_t>(2 * dim * dim)) {
      throw Error(ErrorKind::ConfigError, kv.source() + ": '" + key + "' needs " +
                                              std::to_string(2 * dim * dim) + " numbers (re im pairs)");
    }
    ComplexMatrix a(dim, dim);
    std::size_t pos = 0;
    for (Index r = 0; r < dim; ++r)
      for (Index c = 0; c < dim; ++c, pos += 2) a(r, c) = Complex(values[pos], values[pos + 1]);
    ops.push_back(std::move(a));
  }
  return ops;
}

}  // namespace

ModelSpec parse_model(const KeyValueFile& kv) {
  ModelSpec spec;
  const std::string kind = kv.get_string("kind");
  const double tol = kv.get_double("tol", 1e-9);
  if (kind == "explicit") {
    spec.kind = ModelKind::Explicit;
    spec.family.emplace(parse_operators(kv), tol);
  } else if (kind == "shift") {
    spec.kind = ModelKind::Shift;
    if (kv.has("alpha")) {
      spec.shift = WeightedShiftModel::table(kv.get_doubles("alpha"));
    } else {
      spec.shift = WeightedShiftModel::parametric(kv.get_double("c"), kv.get_double("z"));
    }
    spec.window = kv.get_int("window", 8);
    if (spec.window < 2) throw Error(ErrorKind::InvalidParameters, "shift window must be >= 2");
    if (kv.has("truncate")) spec.family = truncate_shift(*spec.shift, kv.get_int("truncate"));
  } else if (kind == "triangular") {
    spec.kind = ModelKind::Triangular;
    for (long r : kv.get_ints("flags")) spec.flag_ranks.push_back(r);
    const auto base = parse_operators(kv);
    spec.family = make_triangular(base, spec.flag_ranks);
  } else {
    throw Error(ErrorKind::InvalidParameters,
                "unknown model kind '" + kind + "' (expected explicit, shift or triangular)");
  }
  return spec;
}

ModelSpec load_model(const std::filesystem::path& path) { return parse_model(KeyValueFile::load(path)); }

std::string format_explicit_model(const KrausFamily& family) {
  std::ostringstream os;
  os << "kind = explicit\n";
  os << "dim = " << family.dim() << "\n";
  os << "operators = " << family.size() << "\n";
  for (std::size_t i = 0; i < family.size(); ++i) {
    os << "op." << i + 1 << " =";
    const ComplexMatrix& a = family.op(i);
    for (Index r = 0; r < a.rows(); ++r)
      for (Index c = 0; c < a.cols(); ++c)
        os << ' ' << format_double(a(r, c).real()) << ' ' << format_double(a(r, c).imag());
    os << "\n";
  }
  return os.str();
}

}  // namespace purlab
