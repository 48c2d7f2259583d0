// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "purlab/error.hpp"

namespace purlab {
namespace {

void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << what << " must be a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw Error(ErrorKind::NotSquare, os.str());
  }
}

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return (m + m.adjoint()) * 0.5; }

// Rotates v so that its first component of (numerically) largest modulus is
// real and nonnegative.
void fix_phase(Eigen::Ref<ComplexVector> v) {
  const double max_mod = v.cwiseAbs().maxCoeff();
  if (max_mod == 0.0) return;
  Index pivot = 0;
  for (Index j = 0; j < v.size(); ++j) {
    if (std::abs(v[j]) >= max_mod * (1.0 - 1e-10)) {
      pivot = j;
      break;
    }
  }
  const double mod = std::abs(v[pivot]);
  const Complex rot = std::conj(v[pivot]) / mod;
  v *= rot;
  v[pivot] = Complex(mod, 0.0);
}

// Component-wise lexicographic "greater" with a small dead band so round-off
// does not decide the order.
bool lex_greater(const ComplexVector& a, const ComplexVector& b) {
  constexpr double band = 1e-12;
  for (Index j = 0; j < a.size(); ++j) {
    const double dr = a[j].real() - b[j].real();
    if (std::abs(dr) > band) return dr > 0;
    const double di = a[j].imag() - b[j].imag();
    if (std::abs(di) > band) return di > 0;
  }
  return false;
}

// Canonical orthonormal basis of range(V V^dagger): pivoted Gram-Schmidt over
// the columns of the spectral projector, which does not depend on which basis
// of the eigenspace the solver happened to return.
ComplexMatrix canonical_cluster_basis(const ComplexMatrix& v) {
  const Index n = v.rows();
  const Index k = v.cols();
  ComplexMatrix residual = v * v.adjoint();
  ComplexMatrix chosen(n, k);
  for (Index s = 0; s < k; ++s) {
    const RealVector norms = residual.colwise().norm().transpose();
    const double best = norms.maxCoeff();
    Index pivot = 0;
    for (Index j = 0; j < n; ++j) {
      if (norms[j] >= best * (1.0 - 1e-10)) {
        pivot = j;
        break;
      }
    }
    ComplexVector q = residual.col(pivot) / norms[pivot];
    if (s > 0) {
      const auto prev = chosen.leftCols(s);
      q -= prev * (prev.adjoint() * q);
      q.normalize();
    }
    chosen.col(s) = q;
    residual -= q * (q.adjoint() * residual);
  }
  return chosen;
}

}  // namespace

double hermitian_defect(const ComplexMatrix& m) {
  require_square(m, "matrix");
  const ComplexMatrix skew = Complex(0.0, 1.0) * (m - m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(skew, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_eigenvalue(const ComplexMatrix& h) {
  require_square(h, "matrix");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(h), Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

DensityMatrix DensityMatrix::make(const ComplexMatrix& m, const DensityTolerances& tol) {
  require_square(m, "density matrix");
  if (!m.allFinite()) throw Error(ErrorKind::NotHermitian, "density matrix has non-finite entries");
  const double herm = hermitian_defect(m);
  if (herm > tol.herm) {
    std::ostringstream os;
    os << "||m - m^dagger|| = " << herm << " exceeds " << tol.herm;
    throw Error(ErrorKind::NotHermitian, os.str(), herm);
  }
  const double trace_defect = std::abs(m.trace() - Complex(1.0, 0.0));
  if (trace_defect > tol.trace) {
    std::ostringstream os;
    os << "|tr(m) - 1| = " << trace_defect << " exceeds " << tol.trace;
    throw Error(ErrorKind::NotUnitTrace, os.str(), trace_defect);
  }
  const double lowest = min_eigenvalue(m);
  if (lowest < -tol.psd) {
    std::ostringstream os;
    os << "smallest eigenvalue " << lowest << " below -" << tol.psd;
    throw Error(ErrorKind::NotPSD, os.str(), -lowest);
  }
  return DensityMatrix(hermitian_part(m));
}

DensityMatrix DensityMatrix::from_trusted(const ComplexMatrix& m) {
  require_square(m, "density matrix");
  return DensityMatrix(hermitian_part(m));
}

DensityMatrix DensityMatrix::pure(const ComplexVector& psi) {
  const double nrm = psi.norm();
  if (psi.size() == 0 || !(nrm > 0.0)) {
    throw Error(ErrorKind::InvalidParameters, "pure state needs a non-zero vector");
  }
  const ComplexVector unit = psi / nrm;
  return DensityMatrix(unit * unit.adjoint());
}

DensityMatrix DensityMatrix::basis_state(Index dim, Index k) {
  if (dim < 1 || k < 0 || k >= dim) {
    throw Error(ErrorKind::InvalidParameters, "basis index out of range");
  }
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  m(k, k) = 1.0;
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  if (dim < 1) throw Error(ErrorKind::InvalidParameters, "dimension must be positive");
  return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::diagonal(const RealVector& weights) {
  ComplexMatrix m = weights.cast<Complex>().asDiagonal();
  return make(m);
}

Projection Projection::make(const ComplexMatrix& m, double tol) {
  require_square(m, "projection");
  const double herm = hermitian_defect(m);
  if (herm > tol) throw Error(ErrorKind::NotHermitian, "projection is not Hermitian", herm);
  const double idem = norm(m * m - m, NormKind::Operator);
  if (idem > tol) throw Error(ErrorKind::NotProjection, "||p^2 - p|| too large", idem);
  const EigenDecomposition eig = eigen_descending(m, tol);
  Index rank = 0;
  while (rank < eig.values.size() && eig.values[rank] > 0.5) ++rank;
  return Projection(hermitian_part(m), eig.vectors.leftCols(rank));
}

Projection Projection::from_orthonormal(const ComplexMatrix& columns, double tol) {
  const Index k = columns.cols();
  const double defect =
      k == 0 ? 0.0 : norm(columns.adjoint() * columns - ComplexMatrix::Identity(k, k), NormKind::Operator);
  if (defect > tol) throw Error(ErrorKind::NotOrthonormal, "columns are not orthonormal", defect);
  return Projection(columns * columns.adjoint(), columns);
}

Projection Projection::coordinate(Index dim, Index rank) {
  if (dim < 1 || rank < 0 || rank > dim) {
    throw Error(ErrorKind::InvalidParameters, "coordinate projection rank out of range");
  }
  const ComplexMatrix basis = ComplexMatrix::Identity(dim, rank);
  return Projection(basis * basis.adjoint(), basis);
}

EigenDecomposition eigen_descending(const ComplexMatrix& h, double tol_herm) {
  require_square(h, "matrix");
  const double herm = hermitian_defect(h);
  if (herm > tol_herm) {
    throw Error(ErrorKind::NotHermitian, "eigen_descending needs a Hermitian matrix", herm);
  }
  const Index n = h.rows();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(h));

  EigenDecomposition out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();

  const double scale = std::max(1.0, out.values.cwiseAbs().maxCoeff());
  const double cluster_tol = 1e-12 * scale;
  Index start = 0;
  while (start < n) {
    Index stop = start + 1;
    while (stop < n && out.values[stop - 1] - out.values[stop] <= cluster_tol) ++stop;
    const Index len = stop - start;
    if (len > 1) {
      ComplexMatrix block = canonical_cluster_basis(out.vectors.middleCols(start, len));
      std::vector<ComplexVector> cols;
      cols.reserve(static_cast<std::size_t>(len));
      for (Index j = 0; j < len; ++j) {
        ComplexVector c = block.col(j);
        fix_phase(c);
        cols.push_back(std::move(c));
      }
      std::stable_sort(cols.begin(), cols.end(), lex_greater);
      for (Index j = 0; j < len; ++j) out.vectors.col(start + j) = cols[static_cast<std::size_t>(j)];
    } else {
      fix_phase(out.vectors.col(start));
    }
    start = stop;
  }
  return out;
}

EigenDecomposition eigen_descending(const DensityMatrix& rho) {
  EigenDecomposition eig = eigen_descending(rho.matrix(), 1.0);
  for (Index k = 0; k < eig.values.size(); ++k) eig.values[k] = std::clamp(eig.values[k], 0.0, 1.0);
  return eig;
}

double purity(const DensityMatrix& rho) { return rho.matrix().squaredNorm(); }

double linear_entropy(const DensityMatrix& rho) { return std::max(0.0, 1.0 - purity(rho)); }

double top_sum(const EigenDecomposition& eig, Index n) {
  if (n < 1) throw Error(ErrorKind::InvalidParameters, "top_sum order must be >= 1");
  const Index count = std::min<Index>(n, eig.values.size());
  return std::clamp(eig.values.head(count).sum(), 0.0, 1.0);
}

double top_sum(const DensityMatrix& rho, Index n) { return top_sum(eigen_descending(rho), n); }

Projection top2_projector(const EigenDecomposition& eig) {
  if (eig.vectors.cols() < 2) {
    throw Error(ErrorKind::DimensionTooSmall, "top-2 projector needs dimension >= 2");
  }
  return Projection::from_orthonormal(eig.vectors.leftCols(2));
}

Projection top2_projector(const DensityMatrix& rho) { return top2_projector(eigen_descending(rho)); }

ComplexMatrix matrix_sqrt_psd(const DensityMatrix& rho, double tol_psd) {
  const EigenDecomposition eig = eigen_descending(rho.matrix(), 1.0);
  const double lowest = eig.values[eig.values.size() - 1];
  if (lowest < -tol_psd) {
    throw Error(ErrorKind::NotPSD, "matrix square root of a non-PSD matrix", -lowest);
  }
  const RealVector roots = eig.values.cwiseMax(0.0).cwiseSqrt();
  return eig.vectors * roots.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
}

double norm(const ComplexMatrix& m, NormKind kind) {
  if (m.size() == 0) return 0.0;
  switch (kind) {
    case NormKind::Frobenius:
      return m.norm();
    case NormKind::Operator:
    case NormKind::Trace: {
      Eigen::BDCSVD<ComplexMatrix> svd(m);
      const RealVector& s = svd.singularValues();
      return kind == NormKind::Operator ? s[0] : s.sum();
    }
  }
  return 0.0;
}

}  // namespace purlab
