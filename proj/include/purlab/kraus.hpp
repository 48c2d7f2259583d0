// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Measurement models: finite Kraus families, the weighted right-shift model
// and its truncations, word operators, and flag (triangularity) checks.
//
// Outcomes are 0-based indices in the API. Anything written to disk (CSV,
// word strings, configs) uses 1-based labels.
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/SparseCore>

#include "purlab/linalg.hpp"

namespace purlab {

/// Finite outcome sequence (i_1, ..., i_m); i_1 is the first outcome observed.
struct Word {
  std::vector<std::size_t> letters;

  std::size_t length() const noexcept { return letters.size(); }
  bool operator==(const Word&) const = default;
  auto operator<=>(const Word&) const = default;

  /// Dash-joined 1-based labels, e.g. "1-2".
  std::string to_string() const;
  static Word parse(std::string_view text);
};

/// All words of exactly `length` letters over `alphabet` outcomes, in
/// lexicographic order.
std::vector<Word> enumerate_words(std::size_t alphabet, std::size_t length);

namespace detail {
class WordOperatorCache;
}

/// Kraus operators {a_i} with sum_i a_i^dagger a_i = 1.
class KrausFamily {
 public:
  explicit KrausFamily(std::vector<ComplexMatrix> ops, double tol = 1e-9);

  /// Family whose operator `absorbing` only exists to close the normalization
  /// at a truncation boundary; trajectories must never charge its range.
  static KrausFamily boundary_absorbing(std::vector<ComplexMatrix> ops, std::size_t absorbing,
                                        double tol = 1e-9);

  Index dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ops_.size(); }
  const ComplexMatrix& op(std::size_t i) const { return ops_.at(i); }
  const std::vector<ComplexMatrix>& ops() const noexcept { return ops_; }
  /// a_i^dagger a_i
  const ComplexMatrix& effect(std::size_t i) const { return effects_.at(i); }
  double normalization_defect() const noexcept { return defect_; }

  std::optional<std::size_t> absorbing_outcome() const noexcept { return absorbing_; }

  /// a_i rho a_i^dagger (unnormalized); uses a sparse product for sparse a_i.
  ComplexMatrix conjugate(std::size_t i, const ComplexMatrix& rho) const;

  /// a_w^dagger a_w = a_{i_1}^dagger ... a_{i_m}^dagger a_{i_m} ... a_{i_1},
  /// memoized per family (shared by copies, safe for concurrent callers).
  ComplexMatrix word_operator(const Word& w) const;

  void check_word(const Word& w) const;

 private:
  Index dim_ = 0;
  std::vector<ComplexMatrix> ops_;
  std::vector<ComplexMatrix> effects_;
  std::vector<std::optional<Eigen::SparseMatrix<Complex>>> sparse_;
  double defect_ = 0.0;
  std::optional<std::size_t> absorbing_;
  std::shared_ptr<detail::WordOperatorCache> cache_;
};

/// ||sum_i a_i^dagger a_i - 1||_op; throws NormalizationDefect above `tol`.
double validate_kraus(std::span<const ComplexMatrix> ops, double tol = 1e-9);

/// Born probabilities pi_i = tr(rho a_i^dagger a_i); entries below 1e-15 are 0.
std::vector<double> born_probabilities(const DensityMatrix& rho, const KrausFamily& family);

/// a_i rho a_i^dagger / pi_i
DensityMatrix posterior(const DensityMatrix& rho, const KrausFamily& family, std::size_t outcome);

inline ComplexMatrix word_operator(const KrausFamily& family, const Word& w) {
  return family.word_operator(w);
}

inline constexpr double kZeroProbability = 1e-15;

// ---------------------------------------------------------------------------
// Weighted shift model: a_1 = S sqrt(alpha(N)), a_2 = S sqrt(1 - alpha(N)) on
// l^2(N*), where S e_k = e_{k+1}.

class WeightedShiftModel {
 public:
  /// alpha(k) = c - 1/(k + z), c in (0,1), z > 1/c - 1.
  static WeightedShiftModel parametric(double c, double z);
  /// alpha(k) = table[k-1]; held at the last entry for k beyond the table.
  static WeightedShiftModel table(std::vector<double> alpha);

  double alpha(long k) const;
  /// beta_1 = alpha, beta_2 = 1 - alpha (0-based outcome 0 and 1).
  double beta(std::size_t outcome, long k) const;
  /// lim_k alpha(k)
  double limit() const noexcept;

  bool is_parametric() const noexcept { return table_.empty(); }
  double c() const noexcept { return c_; }
  double z() const noexcept { return z_; }
  const std::vector<double>& weights() const noexcept { return table_; }

 private:
  WeightedShiftModel() = default;
  double c_ = 0.0;
  double z_ = 0.0;
  std::vector<double> table_;
};

double alpha_eval(const WeightedShiftModel& model, long k);

/// Diagonal profile of a shift-model word operator:
/// beta_w(k) = prod_j beta_{i_j}(k + j - 1), so a_w^dagger a_w = beta_w(N).
class WordProfile {
 public:
  WordProfile(WeightedShiftModel model, Word w);
  double operator()(long k) const;
  const Word& word() const noexcept { return word_; }

 private:
  WeightedShiftModel model_;
  Word word_;
};

WordProfile shift_word_profile(const WeightedShiftModel& model, const Word& w);

/// d x d view: (a_1)_{k+1,k} = sqrt(alpha(k)), (a_2)_{k+1,k} = sqrt(1-alpha(k))
/// for k < d, plus the absorbing operator |e_d><e_d| as outcome 3.
KrausFamily truncate_shift(const WeightedShiftModel& model, Index d);

// ---------------------------------------------------------------------------
// Flags s_1 <= s_2 <= ... and the triangularity criterion a_i s_m = s_m a_i s_m.

class FlagProjections {
 public:
  static FlagProjections make(std::vector<Projection> levels, double tol = 1e-9);
  /// Nested coordinate projections onto the first r_m basis vectors.
  static FlagProjections coordinate(Index dim, const std::vector<Index>& ranks);

  const std::vector<Projection>& levels() const noexcept { return levels_; }
  std::size_t size() const noexcept { return levels_.size(); }
  Index dim() const noexcept { return levels_.empty() ? 0 : levels_.front().dim(); }

 private:
  explicit FlagProjections(std::vector<Projection> levels) : levels_(std::move(levels)) {}
  std::vector<Projection> levels_;
};

struct KcondReport {
  /// residuals[m][i] = ||a_i s_m - s_m a_i s_m||_op
  std::vector<std::vector<double>> residuals;
  double max_residual = 0.0;
  bool holds = false;
};

KcondReport check_kcond(const KrausFamily& family, const FlagProjections& flags, double tol = 1e-9);

/// Smallest eigenvalue of sum_i a_i^dagger s a_i - s.
double heisenberg_gap(const KrausFamily& family, const Projection& s);

/// Zeroes the blocks of each operator below the coordinate flag given by
/// `ranks`, then restores sum a^dagger a = 1 by right-multiplying with the
/// inverse Cholesky factor (upper triangular, so the block structure stays).
KrausFamily make_triangular(std::span<const ComplexMatrix> base, const std::vector<Index>& ranks);

}  // namespace purlab
