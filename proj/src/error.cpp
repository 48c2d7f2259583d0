// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/error.hpp"

namespace purlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotSquare: return "NotSquare";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotUnitTrace: return "NotUnitTrace";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::NotProjection: return "NotProjection";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorKind::NormalizationDefect: return "NormalizationDefect";
    case ErrorKind::ZeroProbabilityOutcome: return "ZeroProbabilityOutcome";
    case ErrorKind::InvalidParameters: return "InvalidParameters";
    case ErrorKind::InvalidWord: return "InvalidWord";
    case ErrorKind::InvalidFlags: return "InvalidFlags";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::RankTooSmall: return "RankTooSmall";
    case ErrorKind::NotOrthonormal: return "NotOrthonormal";
    case ErrorKind::MissingProjectors: return "MissingProjectors";
    case ErrorKind::MissingSnapshots: return "MissingSnapshots";
    case ErrorKind::MissingObservable: return "MissingObservable";
    case ErrorKind::BoundaryCharged: return "BoundaryCharged";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what, double defect)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what),
      kind_(kind),
      defect_(defect) {}

bool is_validation_error(ErrorKind kind) {
  return kind != ErrorKind::ConfigError && kind != ErrorKind::IoError;
}

}  // namespace purlab
