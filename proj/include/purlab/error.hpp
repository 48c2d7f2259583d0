// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace purlab {

enum class ErrorKind {
  NotSquare,
  NotHermitian,
  NotUnitTrace,
  NotPSD,
  NotProjection,
  DimensionMismatch,
  DimensionTooSmall,
  NormalizationDefect,
  ZeroProbabilityOutcome,
  InvalidParameters,
  InvalidWord,
  InvalidFlags,
  BudgetExceeded,
  RankTooSmall,
  NotOrthonormal,
  MissingProjectors,
  MissingSnapshots,
  MissingObservable,
  BoundaryCharged,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// Every failure in the library is reported through this type. `defect` carries
// the measured size of the violation when one exists (0 otherwise).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double defect = 0.0);

  ErrorKind kind() const noexcept { return kind_; }
  double defect() const noexcept { return defect_; }

 private:
  ErrorKind kind_;
  double defect_;
};

// True for errors that stem from invalid model or numeric input (as opposed to
// configuration parsing or file-system problems).
bool is_validation_error(ErrorKind kind);

}  // namespace purlab
