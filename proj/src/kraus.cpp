// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/kraus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "purlab/error.hpp"

namespace purlab {

namespace detail {

class WordOperatorCache {
 public:
  std::optional<ComplexMatrix> find(const std::vector<std::size_t>& key) {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  void insert(const std::vector<std::size_t>& key, const ComplexMatrix& value) {
    std::lock_guard lock(mutex_);
    entries_.emplace(key, value);
  }

 private:
  std::mutex mutex_;
  std::map<std::vector<std::size_t>, ComplexMatrix> entries_;
};

}  // namespace detail

std::string Word::to_string() const {
  std::string out;
  for (std::size_t j = 0; j < letters.size(); ++j) {
    if (j) out += '-';
    out += std::to_string(letters[j] + 1);
  }
  return out;
}

Word Word::parse(std::string_view text) {
  Word w;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t dash = std::min(text.find('-', pos), text.size());
    const std::string_view token = text.substr(pos, dash - pos);
    std::size_t label = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), label);
    if (ec != std::errc() || ptr != token.data() + token.size() || label == 0) {
      throw Error(ErrorKind::InvalidWord, "cannot parse word '" + std::string(text) + "'");
    }
    w.letters.push_back(label - 1);
    pos = dash + 1;
  }
  return w;
}

std::vector<Word> enumerate_words(std::size_t alphabet, std::size_t length) {
  std::vector<Word> out;
  if (alphabet == 0) return out;
  std::vector<std::size_t> digits(length, 0);
  while (true) {
    out.push_back(Word{digits});
    std::size_t pos = length;
    for (;;) {
      if (pos == 0) return out;
      --pos;
      if (++digits[pos] < alphabet) break;
      digits[pos] = 0;
    }
  }
}

double validate_kraus(std::span<const ComplexMatrix> ops, double tol) {
  if (ops.empty()) throw Error(ErrorKind::InvalidParameters, "Kraus family needs at least one operator");
  const Index d = ops.front().rows();
  ComplexMatrix sum = ComplexMatrix::Zero(d, d);
  for (const auto& a : ops) {
    if (a.rows() != d || a.cols() != d) {
      throw Error(ErrorKind::DimensionMismatch, "Kraus operators must be square and of equal size");
    }
    if (!a.allFinite()) throw Error(ErrorKind::InvalidParameters, "Kraus operator has non-finite entries");
    sum.noalias() += a.adjoint() * a;
  }
  const double defect = norm(sum - ComplexMatrix::Identity(d, d), NormKind::Operator);
  if (defect > tol) {
    std::ostringstream os;
    os << "||sum a^dagger a - 1|| = " << defect << " exceeds " << tol;
    throw Error(ErrorKind::NormalizationDefect, os.str(), defect);
  }
  return defect;
}

KrausFamily::KrausFamily(std::vector<ComplexMatrix> ops, double tol)
    : ops_(std::move(ops)), cache_(std::make_shared<detail::WordOperatorCache>()) {
  defect_ = validate_kraus(ops_, tol);
  dim_ = ops_.front().rows();
  effects_.reserve(ops_.size());
  sparse_.reserve(ops_.size());
  for (const auto& a : ops_) {
    effects_.push_back(a.adjoint() * a);
    const Index nnz = (a.array() != Complex(0.0, 0.0)).count();
    if (dim_ >= 16 && nnz * 10 <= dim_ * dim_) {
      sparse_.emplace_back(a.sparseView());
    } else {
      sparse_.emplace_back(std::nullopt);
    }
  }
}

KrausFamily KrausFamily::boundary_absorbing(std::vector<ComplexMatrix> ops, std::size_t absorbing,
                                            double tol) {
  KrausFamily family(std::move(ops), tol);
  if (absorbing >= family.size()) {
    throw Error(ErrorKind::InvalidParameters, "absorbing outcome out of range");
  }
  family.absorbing_ = absorbing;
  return family;
}

ComplexMatrix KrausFamily::conjugate(std::size_t i, const ComplexMatrix& rho) const {
  const auto& sp = sparse_.at(i);
  if (sp) {
    const ComplexMatrix left = (*sp) * rho;
    return left * sp->adjoint();
  }
  return ops_[i] * rho * ops_[i].adjoint();
}

void KrausFamily::check_word(const Word& w) const {
  for (std::size_t letter : w.letters) {
    if (letter >= ops_.size()) {
      throw Error(ErrorKind::InvalidWord,
                  "word " + w.to_string() + " uses an outcome outside the family");
    }
  }
}

ComplexMatrix KrausFamily::word_operator(const Word& w) const {
  check_word(w);
  if (w.letters.empty()) return ComplexMatrix::Identity(dim_, dim_);
  if (auto hit = cache_->find(w.letters)) return *hit;
  const Word tail{std::vector<std::size_t>(w.letters.begin() + 1, w.letters.end())};
  const ComplexMatrix inner = word_operator(tail);
  const ComplexMatrix& a = ops_[w.letters.front()];
  ComplexMatrix result = a.adjoint() * inner * a;
  result = (result + result.adjoint()) * 0.5;
  cache_->insert(w.letters, result);
  return result;
}

std::vector<double> born_probabilities(const DensityMatrix& rho, const KrausFamily& family) {
  if (rho.dim() != family.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "state and Kraus family dimensions differ");
  }
  std::vector<double> probs(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double p = rho.matrix().cwiseProduct(family.effect(i).transpose()).sum().real();
    probs[i] = p < kZeroProbability ? 0.0 : p;
  }
  return probs;
}

DensityMatrix posterior(const DensityMatrix& rho, const KrausFamily& family, std::size_t outcome) {
  if (rho.dim() != family.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "state and Kraus family dimensions differ");
  }
  if (outcome >= family.size()) throw Error(ErrorKind::InvalidParameters, "outcome out of range");
  const ComplexMatrix unnormalized = family.conjugate(outcome, rho.matrix());
  const double p = unnormalized.trace().real();
  if (!(p > kZeroProbability)) {
    std::ostringstream os;
    os << "outcome " << outcome + 1 << " has probability " << p;
    throw Error(ErrorKind::ZeroProbabilityOutcome, os.str(), p);
  }
  return DensityMatrix::from_trusted(unnormalized / p);
}

// ---------------------------------------------------------------------------

WeightedShiftModel WeightedShiftModel::parametric(double c, double z) {
  if (!(c > 0.0 && c < 1.0)) {
    throw Error(ErrorKind::InvalidParameters, "shift model needs c in (0,1), got " + std::to_string(c));
  }
  if (!(z > 1.0 / c - 1.0) || !std::isfinite(z)) {
    throw Error(ErrorKind::InvalidParameters,
                "shift model needs z > 1/c - 1 = " + std::to_string(1.0 / c - 1.0) +
                    ", got " + std::to_string(z));
  }
  WeightedShiftModel m;
  m.c_ = c;
  m.z_ = z;
  return m;
}

WeightedShiftModel WeightedShiftModel::table(std::vector<double> alpha) {
  if (alpha.empty()) throw Error(ErrorKind::InvalidParameters, "weight table is empty");
  for (double a : alpha) {
    if (!(a >= 0.0 && a <= 1.0)) {
      throw Error(ErrorKind::InvalidParameters, "weight table entries must lie in [0,1]");
    }
  }
  WeightedShiftModel m;
  m.c_ = alpha.back();
  m.table_ = std::move(alpha);
  return m;
}

double WeightedShiftModel::alpha(long k) const {
  if (k < 1) throw Error(ErrorKind::InvalidParameters, "alpha is defined for k >= 1");
  if (table_.empty()) return c_ - 1.0 / (static_cast<double>(k) + z_);
  const auto idx = static_cast<std::size_t>(k - 1);
  return idx < table_.size() ? table_[idx] : table_.back();
}

double WeightedShiftModel::beta(std::size_t outcome, long k) const {
  switch (outcome) {
    case 0: return alpha(k);
    case 1: return 1.0 - alpha(k);
    default: throw Error(ErrorKind::InvalidWord, "shift model has outcomes 1 and 2 only");
  }
}

double WeightedShiftModel::limit() const noexcept { return table_.empty() ? c_ : table_.back(); }

double alpha_eval(const WeightedShiftModel& model, long k) { return model.alpha(k); }

WordProfile::WordProfile(WeightedShiftModel model, Word w) : model_(std::move(model)), word_(std::move(w)) {
  for (std::size_t letter : word_.letters) {
    if (letter > 1) throw Error(ErrorKind::InvalidWord, "shift model has outcomes 1 and 2 only");
  }
}

double WordProfile::operator()(long k) const {
  double value = 1.0;
  long site = k;
  for (std::size_t letter : word_.letters) value *= model_.beta(letter, site++);
  return value;
}

WordProfile shift_word_profile(const WeightedShiftModel& model, const Word& w) { return WordProfile(model, w); }

KrausFamily truncate_shift(const WeightedShiftModel& model, Index d) {
  if (d < 3) throw Error(ErrorKind::DimensionTooSmall, "shift truncation needs d >= 3");
  ComplexMatrix a1 = ComplexMatrix::Zero(d, d);
  ComplexMatrix a2 = ComplexMatrix::Zero(d, d);
  for (Index k = 1; k < d; ++k) {
    const double a = model.alpha(static_cast<long>(k));
    a1(k, k - 1) = std::sqrt(a);
    a2(k, k - 1) = std::sqrt(1.0 - a);
  }
  ComplexMatrix boundary = ComplexMatrix::Zero(d, d);
  boundary(d - 1, d - 1) = 1.0;
  return KrausFamily::boundary_absorbing({std::move(a1), std::move(a2), std::move(boundary)}, 2);
}

// ---------------------------------------------------------------------------

FlagProjections FlagProjections::make(std::vector<Projection> levels, double tol) {
  if (levels.empty()) throw Error(ErrorKind::InvalidFlags, "flag needs at least one level");
  const Index d = levels.front().dim();
  for (std::size_t m = 0; m < levels.size(); ++m) {
    if (levels[m].dim() != d) throw Error(ErrorKind::InvalidFlags, "flag levels differ in dimension");
    if (m + 1 < levels.size()) {
      const auto& lo = levels[m].matrix();
      const auto& hi = levels[m + 1].matrix();
      const double nest = norm(lo * hi - lo, NormKind::Operator);
      if (nest > tol) throw Error(ErrorKind::InvalidFlags, "flag levels are not nested", nest);
      if (levels[m + 1].rank() <= levels[m].rank()) {
        throw Error(ErrorKind::InvalidFlags, "flag ranks must increase strictly");
      }
    }
  }
  return FlagProjections(std::move(levels));
}

FlagProjections FlagProjections::coordinate(Index dim, const std::vector<Index>& ranks) {
  std::vector<Projection> levels;
  levels.reserve(ranks.size());
  for (Index r : ranks) {
    if (r < 1 || r > dim) throw Error(ErrorKind::InvalidFlags, "flag rank out of range");
    levels.push_back(Projection::coordinate(dim, r));
  }
  return make(std::move(levels));
}

KcondReport check_kcond(const KrausFamily& family, const FlagProjections& flags, double tol) {
  if (flags.dim() != family.dim()) throw Error(ErrorKind::DimensionMismatch, "flag and family dimensions differ");
  KcondReport report;
  for (const auto& level : flags.levels()) {
    const ComplexMatrix& s = level.matrix();
    std::vector<double> row;
    row.reserve(family.size());
    for (const auto& a : family.ops()) {
      const double r = norm(a * s - s * a * s, NormKind::Operator);
      report.max_residual = std::max(report.max_residual, r);
      row.push_back(r);
    }
    report.residuals.push_back(std::move(row));
  }
  report.holds = report.max_residual <= tol;
  return report;
}

double heisenberg_gap(const KrausFamily& family, const Projection& s) {
  if (s.dim() != family.dim()) throw Error(ErrorKind::DimensionMismatch, "projection and family dimensions differ");
  ComplexMatrix sum = -s.matrix();
  for (const auto& a : family.ops()) sum.noalias() += a.adjoint() * s.matrix() * a;
  return min_eigenvalue(sum);
}

KrausFamily make_triangular(std::span<const ComplexMatrix> base, const std::vector<Index>& ranks) {
  if (base.empty()) throw Error(ErrorKind::InvalidParameters, "triangular family needs operators");
  const Index d = base.front().rows();
  std::vector<Index> bounds;
  for (Index r : ranks) {
    if (r < 1 || r > d || (!bounds.empty() && r <= bounds.back())) {
      throw Error(ErrorKind::InvalidFlags, "flag ranks must be strictly increasing in [1, dim]");
    }
    bounds.push_back(r);
  }
  auto block_of = [&](Index coord) {
    return static_cast<Index>(std::upper_bound(bounds.begin(), bounds.end(), coord) - bounds.begin());
  };
  std::vector<ComplexMatrix> ops;
  ops.reserve(base.size());
  ComplexMatrix gram = ComplexMatrix::Zero(d, d);
  for (const auto& a : base) {
    if (a.rows() != d || a.cols() != d) throw Error(ErrorKind::DimensionMismatch, "base operators differ in size");
    ComplexMatrix t = a;
    for (Index col = 0; col < d; ++col)
      for (Index row = 0; row < d; ++row)
        if (block_of(row) > block_of(col)) t(row, col) = 0.0;
    gram.noalias() += t.adjoint() * t;
    ops.push_back(std::move(t));
  }
  Eigen::LLT<ComplexMatrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidParameters, "projected family is singular; cannot re-normalize");
  }
  // gram = R^dagger R with R = L^dagger upper triangular; a R^{-1} keeps the blocks.
  const ComplexMatrix r = llt.matrixU();
  const ComplexMatrix r_inv = r.triangularView<Eigen::Upper>().solve(ComplexMatrix::Identity(d, d));
  for (auto& t : ops) t = t * r_inv;
  return KrausFamily(std::move(ops));
}

}  // namespace purlab
