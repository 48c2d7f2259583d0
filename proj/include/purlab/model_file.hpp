// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Model definition files.
//
//   kind = explicit        dim, operators = <count>, op.<i> = row-major "re im" pairs
//   kind = shift           c, z  (or alpha = <table>), window = <K>, truncate = <d> (optional)
//   kind = triangular      explicit keys for the base family, flags = <ranks>
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "purlab/keyvalue.hpp"
#include "purlab/kraus.hpp"

namespace purlab {

enum class ModelKind { Explicit, Shift, Triangular };

struct ModelSpec {
  ModelKind kind = ModelKind::Explicit;
  /// Finite family: explicit, triangular, or a shift truncation (`truncate`).
  std::optional<KrausFamily> family;
  std::optional<WeightedShiftModel> shift;
  Index window = 8;
  std::vector<Index> flag_ranks;
};

ModelSpec parse_model(const KeyValueFile& kv);
ModelSpec load_model(const std::filesystem::path& path);

/// Inverse of the explicit-kind parser (shortest round-trip numbers).
std::string format_explicit_model(const KrausFamily& family);

}  // namespace purlab
