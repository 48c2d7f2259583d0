// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures and hand-rolled generators for the unit tests.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "purlab/error.hpp"

#include "purlab/kraus.hpp"
#include "purlab/linalg.hpp"
#include "purlab/random_models.hpp"
#include "purlab/rng.hpp"

namespace purlab::testing {

// Kind of the purlab::Error thrown by `f`; records a test failure if none is.
inline ErrorKind kind_of(const std::function<void()>& f, double* defect = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (defect) *defect = e.defect();
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::IoError;
}

inline ComplexMatrix diag2(double a, double b) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// {diag(sqrt .3, sqrt .7), diag(sqrt .7, sqrt .3)}
inline KrausFamily diag_qubit() {
  return KrausFamily({diag2(std::sqrt(0.3), std::sqrt(0.7)), diag2(std::sqrt(0.7), std::sqrt(0.3))});
}

inline ComplexMatrix pauli_x() {
  ComplexMatrix x = ComplexMatrix::Zero(2, 2);
  x(0, 1) = 1.0;
  x(1, 0) = 1.0;
  return x;
}

// {I/sqrt2, U/sqrt2}
inline KrausFamily scaled_unitary(const ComplexMatrix& u) {
  const Index d = u.rows();
  return KrausFamily({ComplexMatrix::Identity(d, d) / std::sqrt(2.0), u / std::sqrt(2.0)});
}

inline KrausFamily scaled_unitary_qubit() { return scaled_unitary(pauli_x()); }

// {diag(sqrt.5, sqrt.5), sqrt.5 |e1><e2|, sqrt.5 |e1><e1|}
inline KrausFamily triangular_qubit() {
  const double s = std::sqrt(0.5);
  ComplexMatrix a2 = ComplexMatrix::Zero(2, 2);
  a2(0, 1) = s;
  ComplexMatrix a3 = ComplexMatrix::Zero(2, 2);
  a3(0, 0) = s;
  return KrausFamily({diag2(s, s), a2, a3});
}

inline ComplexMatrix random_hermitian(RngStream& rng, Index d) {
  const ComplexMatrix g = random_ginibre(rng, d, d);
  return (g + g.adjoint()) * 0.5;
}

inline ComplexVector random_unit(RngStream& rng, Index d) {
  ComplexVector v = random_ginibre(rng, d, 1).col(0);
  return v / v.norm();
}

inline WeightedShiftModel ce(double c = 0.5, double z = 3.0) { return WeightedShiftModel::parametric(c, z); }

}  // namespace purlab::testing
