// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded random instances for property audits.
#pragma once

#include <vector>

#include "purlab/kraus.hpp"
#include "purlab/linalg.hpp"
#include "purlab/rng.hpp"

namespace purlab {

/// i.i.d. standard complex Gaussian entries.
ComplexMatrix random_ginibre(RngStream& rng, Index rows, Index cols);
/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
ComplexMatrix random_unitary(RngStream& rng, Index dim);
/// rho = G G^dagger / tr with G of shape dim x rank (rank 1 gives a pure state).
DensityMatrix random_density(RngStream& rng, Index dim, Index rank);
/// a_i = G_i (sum_j G_j^dagger G_j)^{-1/2}.
KrausFamily random_kraus_family(RngStream& rng, Index dim, std::size_t outcomes);
/// Random family that is block upper triangular for the coordinate flag `ranks`.
KrausFamily random_triangular_family(RngStream& rng, Index dim, std::size_t outcomes,
                                     const std::vector<Index>& ranks);
/// Strictly increasing ranks in [1, dim - 1], at least one level (dim >= 2).
std::vector<Index> random_flag_ranks(RngStream& rng, Index dim);

/// Uniform integer in [lo, hi].
long uniform_int(RngStream& rng, long lo, long hi);

}  // namespace purlab
