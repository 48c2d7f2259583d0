// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/dark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "purlab/csv.hpp"
#include "purlab/error.hpp"
#include "purlab/rng.hpp"

namespace purlab {
namespace {

// Re tr(A B) for Hermitian A, B.
double hs_inner(const ComplexMatrix& a, const ComplexMatrix& b) { return a.conjugate().cwiseProduct(b).sum().real(); }

// Adds m to the orthonormal basis if it has a component outside the span.
bool try_extend(std::vector<ComplexMatrix>& basis, const ComplexMatrix& m, double tol) {
  ComplexMatrix r = m;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis) r -= hs_inner(b, r) * b;
  const double scale = std::max(1.0, m.norm());
  const double nrm = r.norm();
  if (nrm <= tol * scale) return false;
  basis.push_back(r / nrm);
  return true;
}

ComplexMatrix range_basis_of(const ComplexMatrix& p) {
  const EigenDecomposition eig = eigen_descending(p, 1e-8);
  Index rank = 0;
  while (rank < eig.values.size() && eig.values[rank] > 0.5) ++rank;
  return eig.vectors.leftCols(rank);
}

// Pair search state: X = [x0 x1] packed as re/im parts of both columns.
struct Pair {
  ComplexVector v;
  ComplexVector w;
  bool ok = false;
};

Pair orthonormalize(const Eigen::VectorXd& x, Index d) {
  ComplexVector a(d), b(d);
  for (Index k = 0; k < d; ++k) {
    a[k] = Complex(x[k], x[d + k]);
    b[k] = Complex(x[2 * d + k], x[3 * d + k]);
  }
  Pair out;
  const double na = a.norm();
  if (!(na > 1e-12)) return out;
  out.v = a / na;
  b -= out.v * out.v.dot(b);
  const double nb = b.norm();
  if (!(nb > 1e-12)) return out;
  out.w = b / nb;
  out.ok = true;
  return out;
}

Eigen::VectorXd pack(const Pair& p) {
  const Index d = p.v.size();
  Eigen::VectorXd x(4 * d);
  for (Index k = 0; k < d; ++k) {
    x[k] = p.v[k].real();
    x[d + k] = p.v[k].imag();
    x[2 * d + k] = p.w[k].real();
    x[3 * d + k] = p.w[k].imag();
  }
  return x;
}

Eigen::VectorXd pair_terms(const Pair& p, std::span<const ComplexMatrix> ops) {
  Eigen::VectorXd r(3 * static_cast<Index>(ops.size()));
  Index j = 0;
  for (const auto& m : ops) {
    const ComplexVector mv = m * p.v;
    const ComplexVector mw = m * p.w;
    const Complex diag = p.v.dot(mv) - p.w.dot(mw);
    const Complex off = p.v.dot(mw);
    r[j++] = diag.real();
    r[j++] = off.real();
    r[j++] = off.imag();
  }
  return r;
}

double pair_cost(const Eigen::VectorXd& x, Index d, std::span<const ComplexMatrix> ops) {
  const Pair p = orthonormalize(x, d);
  if (!p.ok) return std::numeric_limits<double>::infinity();
  return pair_terms(p, ops).squaredNorm();
}

struct LocalResult {
  Pair pair;
  double cost = 0.0;
};

LocalResult minimize_pair(Eigen::VectorXd x, Index d, std::span<const ComplexMatrix> ops, std::size_t iterations,
                          double target) {
  auto terms = [&](const Eigen::VectorXd& y) { return pair_terms(orthonormalize(y, d), ops); };
  double lambda = 1e-3;
  Pair current = orthonormalize(x, d);
  x = pack(current);
  Eigen::VectorXd r = pair_terms(current, ops);
  double cost = r.squaredNorm();
  const Index params = x.size();
  for (std::size_t it = 0; it < iterations && cost > target; ++it) {
    Eigen::MatrixXd jac(r.size(), params);
    for (Index k = 0; k < params; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[k]));
      Eigen::VectorXd y = x;
      y[k] += h;
      jac.col(k) = (terms(y) - r) / h;
    }
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd damped = a;
      damped.diagonal().array() += lambda;
      const Eigen::VectorXd delta = damped.ldlt().solve(-g);
      const Eigen::VectorXd trial = x + delta;
      const double c = pair_cost(trial, d, ops);
      if (c < cost) {
        current = orthonormalize(trial, d);
        x = pack(current);
        r = pair_terms(current, ops);
        const double improvement = cost - r.squaredNorm();
        cost = r.squaredNorm();
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
        if (improvement <= 1e-16 * std::max(cost, 1e-300)) it = iterations;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
  }
  return {current, cost};
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Dark: return "dark";
    case Verdict::NotDark: return "not-dark";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

WordSpanBasis word_span(const KrausFamily& family, std::size_t max_len, double tol) {
  const Index d = family.dim();
  if (d > 64) throw Error(ErrorKind::InvalidParameters, "word_span supports dim <= 64");
  WordSpanBasis span;
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  try_extend(span.basis, id, tol);
  span.generators.push_back(id);
  span.generator_words.push_back(Word{});

  std::vector<std::pair<ComplexMatrix, Word>> frontier{{id, Word{}}};
  std::size_t last_productive = 0;
  for (std::size_t level = 1; level <= max_len + 1; ++level) {
    std::vector<std::pair<ComplexMatrix, Word>> next;
    bool grew = false;
    for (const auto& [m, w] : frontier) {
      for (std::size_t i = 0; i < family.size(); ++i) {
        const ComplexMatrix& a = family.op(i);
        ComplexMatrix image = a.adjoint() * m * a;
        image = (image + image.adjoint()).eval() * 0.5;
        if (level > max_len) {
          std::vector<ComplexMatrix> probe = span.basis;
          if (try_extend(probe, image, tol)) grew = true;
          continue;
        }
        if (!try_extend(span.basis, image, tol)) continue;
        grew = true;
        Word word;
        word.letters.reserve(w.letters.size() + 1);
        word.letters.push_back(i);
        word.letters.insert(word.letters.end(), w.letters.begin(), w.letters.end());
        span.generators.push_back(image);
        span.generator_words.push_back(word);
        next.emplace_back(std::move(image), std::move(word));
      }
      if (level > max_len && grew) break;
    }
    if (!grew) {
      span.stabilized = true;
      break;
    }
    if (level <= max_len) last_productive = level;
    frontier = std::move(next);
  }
  span.length = std::max<std::size_t>(1, last_productive);
  return span;
}

Compression chebyshev_compression(const ComplexMatrix& basis, const ComplexMatrix& m) {
  ComplexMatrix c = basis.adjoint() * m * basis;
  c = (c + c.adjoint()).eval() * 0.5;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(c, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()[0];
  const double hi = es.eigenvalues()[c.rows() - 1];
  return {(hi + lo) / 2.0, (hi - lo) / 2.0};
}

DarkReport verify_dark(const Projection& p, const KrausFamily& family, std::size_t max_len, double tol) {
  if (p.rank() < 2) throw Error(ErrorKind::RankTooSmall, "dark verification needs rank(p) >= 2");
  if (p.dim() != family.dim()) throw Error(ErrorKind::DimensionMismatch, "projection and family dimensions differ");
  return verify_dark(p, word_span(family, max_len), tol);
}

DarkReport verify_dark(const Projection& p, const WordSpanBasis& span, double tol) {
  if (p.rank() < 2) throw Error(ErrorKind::RankTooSmall, "dark verification needs rank(p) >= 2");
  DarkReport report;
  report.projection = p.matrix();
  report.word_length = span.length;
  const ComplexMatrix& basis = p.range_basis();
  for (const auto& m : span.generators) {
    if (m.rows() != p.dim()) throw Error(ErrorKind::DimensionMismatch, "projection and span dimensions differ");
    report.residual = std::max(report.residual, chebyshev_compression(basis, m).residual);
  }
  if (report.residual > tol) {
    report.verdict = Verdict::NotDark;
  } else {
    report.verdict = span.stabilized ? Verdict::Dark : Verdict::Inconclusive;
  }
  return report;
}

double pair_residual(const ComplexVector& v, const ComplexVector& w, std::span<const ComplexMatrix> ops) {
  if (v.size() != w.size()) throw Error(ErrorKind::DimensionMismatch, "pair vectors differ in dimension");
  const double defect = std::max({std::abs(v.norm() - 1.0), std::abs(w.norm() - 1.0), std::abs(v.dot(w))});
  if (defect > 1e-8) throw Error(ErrorKind::NotOrthonormal, "pair (v, w) is not orthonormal", defect);
  for (const auto& m : ops) {
    if (m.rows() != v.size()) throw Error(ErrorKind::DimensionMismatch, "pair and operator dimensions differ");
  }
  return pair_terms(Pair{v, w, true}, ops).squaredNorm();
}

double pair_residual(const ComplexVector& v, const ComplexVector& w, const WordSpanBasis& span) {
  return pair_residual(v, w, span.generators);
}

DarkReport search_dark_pair(const KrausFamily& family, const DarkSearchOptions& options) {
  if (family.dim() < 2) throw Error(ErrorKind::DimensionTooSmall, "dark pair search needs dim >= 2");
  const WordSpanBasis span = word_span(family, options.max_len);
  return search_dark_pair(span.generators, span.stabilized, span.length, options);
}

DarkReport search_dark_pair(std::span<const ComplexMatrix> ops, bool stabilized, std::size_t word_length,
                            const DarkSearchOptions& options) {
  if (ops.empty()) throw Error(ErrorKind::InvalidParameters, "dark pair search needs operators");
  const Index d = ops.front().rows();
  if (d < 2) throw Error(ErrorKind::DimensionTooSmall, "dark pair search needs dim >= 2");

  DarkReport report;
  report.word_length = word_length;
  report.residual = std::numeric_limits<double>::infinity();
  bool all_above_floor = true;
  const std::size_t restarts = std::max<std::size_t>(options.restarts, 1);
  for (std::size_t r = 0; r < restarts; ++r) {
    RngStream stream(options.seed, r);
    Eigen::VectorXd x(4 * d);
    for (Index k = 0; k < x.size(); ++k) x[k] = stream.normal();
    const LocalResult local = minimize_pair(x, d, ops, options.iterations, options.tol * 1e-3);
    report.restarts = r + 1;
    if (local.cost < options.floor) all_above_floor = false;
    if (local.cost < report.residual) {
      report.residual = local.cost;
      report.v = local.pair.v;
      report.w = local.pair.w;
    }
    if (report.residual <= options.tol) break;
  }
  if (report.residual <= options.tol) {
    report.verdict = stabilized ? Verdict::Dark : Verdict::Inconclusive;
  } else if (stabilized && all_above_floor) {
    report.verdict = Verdict::NotDark;
  } else {
    report.verdict = Verdict::Inconclusive;
  }
  return report;
}

// ---------------------------------------------------------------------------

std::vector<ResidualRow> asymptotic_dark_residuals(const TrajectoryRecord& record, std::size_t alphabet,
                                                   const FramedWordOperator& op, std::size_t max_len) {
  std::vector<Word> words;
  for (std::size_t len = 1; len <= max_len; ++len) {
    for (auto& w : enumerate_words(alphabet, len)) words.push_back(std::move(w));
  }
  std::vector<ResidualRow> rows;
  rows.reserve(record.steps.size() * words.size());
  for (const auto& st : record.steps) {
    if (!st.projector) {
      throw Error(ErrorKind::MissingProjectors, "record has no top-2 projector at step " + std::to_string(st.n));
    }
    const ComplexMatrix basis = range_basis_of(*st.projector);
    for (const auto& w : words) {
      const ComplexMatrix m = op(w, st.offset, st.projector->rows());
      const Compression c = chebyshev_compression(basis, m);
      rows.push_back({st.n, w, c.lambda, c.residual});
    }
  }
  return rows;
}

std::vector<ResidualRow> asymptotic_dark_residuals(const TrajectoryRecord& record, const KrausFamily& family,
                                                   std::size_t max_len) {
  return asymptotic_dark_residuals(
      record, family.size(),
      [&](const Word& w, std::size_t, Index size) {
        if (size != family.dim()) throw Error(ErrorKind::DimensionMismatch, "projector and family dimensions differ");
        return family.word_operator(w);
      },
      max_len);
}

void write_residual_csv(std::ostream& out, std::span<const ResidualRow> rows) {
  CsvWriter csv(out);
  csv.header({"n", "word", "lambda", "residual"});
  for (const auto& r : rows) {
    csv.field(static_cast<unsigned long long>(r.n)).field(r.word.to_string()).field(r.lambda).field(r.residual);
    csv.end_row();
  }
}

}  // namespace purlab
