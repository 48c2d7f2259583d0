// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dense complex Hermitian linear algebra for density matrices: validation,
// deterministic spectral decomposition, entropies and norms.
#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace purlab {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

struct DensityTolerances {
  double herm = 1e-9;
  double trace = 1e-9;
  double psd = 1e-9;
};

/// Hermitian, positive semidefinite, unit-trace matrix.
///
/// Instances are immutable. `make` validates every invariant; `from_trusted`
/// is for states produced by exact update formulas (posteriors, window
/// steps) and only symmetrizes away round-off.
class DensityMatrix {
 public:
  static DensityMatrix make(const ComplexMatrix& m, const DensityTolerances& tol = {});
  static DensityMatrix from_trusted(const ComplexMatrix& m);

  static DensityMatrix pure(const ComplexVector& psi);
  static DensityMatrix basis_state(Index dim, Index k);
  static DensityMatrix maximally_mixed(Index dim);
  static DensityMatrix diagonal(const RealVector& weights);

  const ComplexMatrix& matrix() const noexcept { return mat_; }
  Index dim() const noexcept { return mat_.rows(); }

 private:
  explicit DensityMatrix(ComplexMatrix m) : mat_(std::move(m)) {}
  ComplexMatrix mat_;
};

inline DensityMatrix make_density(const ComplexMatrix& m, const DensityTolerances& tol = {}) {
  return DensityMatrix::make(m, tol);
}

/// Orthogonal projection together with an orthonormal basis of its range.
class Projection {
 public:
  static Projection make(const ComplexMatrix& m, double tol = 1e-9);
  /// Projection onto the span of orthonormal columns.
  static Projection from_orthonormal(const ComplexMatrix& columns, double tol = 1e-8);
  /// Projection onto the first `rank` standard basis vectors.
  static Projection coordinate(Index dim, Index rank);
  static Projection identity(Index dim) { return coordinate(dim, dim); }

  const ComplexMatrix& matrix() const noexcept { return mat_; }
  /// Orthonormal columns spanning the range.
  const ComplexMatrix& range_basis() const noexcept { return basis_; }
  Index rank() const noexcept { return basis_.cols(); }
  Index dim() const noexcept { return mat_.rows(); }

 private:
  Projection(ComplexMatrix m, ComplexMatrix basis) : mat_(std::move(m)), basis_(std::move(basis)) {}
  ComplexMatrix mat_;
  ComplexMatrix basis_;
};

/// Eigenpairs with values sorted non-increasing. Each column of `vectors` has
/// its (first) largest-modulus component real and nonnegative; degenerate
/// eigenspaces get a canonical basis so the output depends only on the matrix.
struct EigenDecomposition {
  RealVector values;
  ComplexMatrix vectors;
};

EigenDecomposition eigen_descending(const ComplexMatrix& h, double tol_herm = 1e-9);
/// Same as above with eigenvalues clamped to [0, 1].
EigenDecomposition eigen_descending(const DensityMatrix& rho);

/// Operator norm of m - m^dagger.
double hermitian_defect(const ComplexMatrix& m);
/// Smallest eigenvalue of the Hermitian part of h.
double min_eigenvalue(const ComplexMatrix& h);

/// tr(rho^2)
double purity(const DensityMatrix& rho);
/// g(rho) = 1 - tr(rho^2)
double linear_entropy(const DensityMatrix& rho);

/// Sum of the N largest eigenvalues, clamped to [0, 1].
double top_sum(const DensityMatrix& rho, Index n);
double top_sum(const EigenDecomposition& eig, Index n);

Projection top2_projector(const DensityMatrix& rho);
Projection top2_projector(const EigenDecomposition& eig);

ComplexMatrix matrix_sqrt_psd(const DensityMatrix& rho, double tol_psd = 1e-9);

enum class NormKind { Operator, Frobenius, Trace };
double norm(const ComplexMatrix& m, NormKind kind);

}  // namespace purlab
