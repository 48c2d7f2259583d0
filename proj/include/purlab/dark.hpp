// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dark subspaces: ranges of projections p on which every word operator
// compresses to a multiple of p. Exact verification against the span of word
// operators, a multistart search for dark pairs (v, w), and per-step residuals
// of the top-2 projectors along a trajectory.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "purlab/kraus.hpp"
#include "purlab/linalg.hpp"
#include "purlab/trajectory.hpp"

namespace purlab {

/// span{1, a_w^dagger a_w : |w| <= length}, grown by M -> a_i^dagger M a_i.
struct WordSpanBasis {
  /// Orthonormal for <A, B> = Re tr(A B); all Hermitian.
  std::vector<ComplexMatrix> basis;
  /// Raw word operators that enlarged the span, starting with the identity.
  std::vector<ComplexMatrix> generators;
  std::vector<Word> generator_words;  // empty word for the identity
  std::size_t length = 0;
  bool stabilized = false;

  std::size_t dimension() const noexcept { return basis.size(); }
};

inline constexpr double kSpanTolerance = 1e-9;

/// Requires dim <= 64.
WordSpanBasis word_span(const KrausFamily& family, std::size_t max_len, double tol = kSpanTolerance);

enum class Verdict { Dark, NotDark, Inconclusive };
std::string_view to_string(Verdict v);

struct DarkReport {
  std::optional<ComplexVector> v;
  std::optional<ComplexVector> w;
  std::optional<ComplexMatrix> projection;
  double residual = 0.0;
  std::size_t word_length = 0;
  Verdict verdict = Verdict::Inconclusive;
  std::size_t restarts = 0;
};

/// Chebyshev center and radius of the spectrum of V^dagger M V.
struct Compression {
  double lambda = 0.0;
  double residual = 0.0;
};

/// `basis`: orthonormal columns spanning range(p).
Compression chebyshev_compression(const ComplexMatrix& basis, const ComplexMatrix& m);

/// Residual = max over the span generators of ||p M p - lambda_M p||.
DarkReport verify_dark(const Projection& p, const KrausFamily& family, std::size_t max_len, double tol = 1e-9);
DarkReport verify_dark(const Projection& p, const WordSpanBasis& span, double tol = 1e-9);

/// J(v,w) = sum_M |<v,Mv> - <w,Mw>|^2 + |<v,Mw>|^2 over `ops`.
double pair_residual(const ComplexVector& v, const ComplexVector& w, std::span<const ComplexMatrix> ops);
double pair_residual(const ComplexVector& v, const ComplexVector& w, const WordSpanBasis& span);

struct DarkSearchOptions {
  std::size_t restarts = 20;
  std::size_t iterations = 200;
  double tol = 1e-8;
  double floor = 1e-3;
  std::uint64_t seed = 0;
  std::size_t max_len = 6;
};

/// Multistart Levenberg-Marquardt on J over orthonormalized pairs. Stops at
/// the first restart reaching `tol`.
DarkReport search_dark_pair(const KrausFamily& family, const DarkSearchOptions& options = {});
/// Search against a fixed operator list; `stabilized` states whether `ops`
/// spans every word operator.
DarkReport search_dark_pair(std::span<const ComplexMatrix> ops, bool stabilized, std::size_t word_length,
                            const DarkSearchOptions& options = {});

// ---------------------------------------------------------------------------

struct ResidualRow {
  std::size_t n = 0;
  Word word;
  double lambda = 0.0;
  double residual = 0.0;
};

/// Word operator a_w^dagger a_w expressed in a frame of `size` coordinates
/// starting at basis vector `offset`.
using FramedWordOperator = std::function<ComplexMatrix(const Word& w, std::size_t offset, Index size)>;

/// Rows ordered by (n, word) over all words with 1 <= |w| <= max_len.
std::vector<ResidualRow> asymptotic_dark_residuals(const TrajectoryRecord& record, std::size_t alphabet,
                                                   const FramedWordOperator& op, std::size_t max_len);
std::vector<ResidualRow> asymptotic_dark_residuals(const TrajectoryRecord& record, const KrausFamily& family,
                                                   std::size_t max_len);

/// Columns: n, word, lambda, residual.
void write_residual_csv(std::ostream& out, std::span<const ResidualRow> rows);

}  // namespace purlab
