// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/random_models.hpp"

#include <cmath>

#include "purlab/error.hpp"

namespace purlab {

long uniform_int(RngStream& rng, long lo, long hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<long>(rng.next_u64() % span);
}

ComplexMatrix random_ginibre(RngStream& rng, Index rows, Index cols) {
  ComplexMatrix g(rows, cols);
  const double s = std::sqrt(0.5);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) {
      const double re = rng.normal();
      const double im = rng.normal();
      g(r, c) = Complex(s * re, s * im);
    }
  return g;
}

ComplexMatrix random_unitary(RngStream& rng, Index dim) {
  const ComplexMatrix g = random_ginibre(rng, dim, dim);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < dim; ++k) {
    const double mod = std::abs(r(k, k));
    if (mod > 0) q.col(k) *= r(k, k) / mod;
  }
  return q;
}

DensityMatrix random_density(RngStream& rng, Index dim, Index rank) {
  const ComplexMatrix g = random_ginibre(rng, dim, rank);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix::make(rho);
}

namespace {

ComplexMatrix inverse_sqrt_pd(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es((m + m.adjoint()) * 0.5);
  const RealVector inv = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

KrausFamily random_kraus_family(RngStream& rng, Index dim, std::size_t outcomes) {
  if (outcomes < 1) throw Error(ErrorKind::InvalidParameters, "need at least one outcome");
  std::vector<ComplexMatrix> ops;
  ComplexMatrix gram = ComplexMatrix::Zero(dim, dim);
  for (std::size_t i = 0; i < outcomes; ++i) {
    ops.push_back(random_ginibre(rng, dim, dim));
    gram += ops.back().adjoint() * ops.back();
  }
  const ComplexMatrix fix = inverse_sqrt_pd(gram);
  for (auto& a : ops) a = a * fix;
  return KrausFamily(std::move(ops));
}

KrausFamily random_triangular_family(RngStream& rng, Index dim, std::size_t outcomes,
                                     const std::vector<Index>& ranks) {
  const KrausFamily base = random_kraus_family(rng, dim, outcomes);
  return make_triangular(base.ops(), ranks);
}

std::vector<Index> random_flag_ranks(RngStream& rng, Index dim) {
  if (dim < 2) throw Error(ErrorKind::DimensionTooSmall, "flags need dim >= 2");
  std::vector<Index> ranks;
  for (Index r = 1; r < dim; ++r) {
    if (rng.uniform() < 0.5) ranks.push_back(r);
  }
  if (ranks.empty()) ranks.push_back(uniform_int(rng, 1, static_cast<long>(dim - 1)));
  return ranks;
}

}  // namespace purlab
