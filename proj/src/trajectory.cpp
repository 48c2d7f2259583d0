// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "purlab/csv.hpp"
#include "purlab/error.hpp"

namespace purlab {
namespace {

constexpr double kBoundaryCharge = 1e-12;

// Spectrum restricted to the rows that are not identically zero. Exact for
// states with structurally empty rows (shift truncations), and falls back to
// the full decomposition whenever the top-2 pair could touch the kernel.
struct TopSpectrum {
  RealVector values;     // non-increasing, length dim
  ComplexMatrix top2;    // dim x 2, empty when dim < 2
};

TopSpectrum top_spectrum(const DensityMatrix& rho) {
  const ComplexMatrix& m = rho.matrix();
  const Index d = m.rows();
  std::vector<Index> support;
  support.reserve(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) {
    if (m(k, k) != Complex(0.0, 0.0) || !m.row(k).isZero(0.0)) support.push_back(k);
  }
  const auto s = static_cast<Index>(support.size());
  TopSpectrum out;
  if (s >= 2 && s < d) {
    ComplexMatrix sub(s, s);
    for (Index r = 0; r < s; ++r)
      for (Index c = 0; c < s; ++c) sub(r, c) = m(support[r], support[c]);
    EigenDecomposition eig = eigen_descending(DensityMatrix::from_trusted(sub));
    if (eig.values[1] > 1e-12) {
      out.values = RealVector::Zero(d);
      out.values.head(s) = eig.values;
      out.top2 = ComplexMatrix::Zero(d, 2);
      for (Index r = 0; r < s; ++r) out.top2.row(support[r]) = eig.vectors.row(r).head(2);
      return out;
    }
  }
  EigenDecomposition eig = eigen_descending(rho);
  out.values = eig.values;
  if (d >= 2) out.top2 = eig.vectors.leftCols(2);
  return out;
}

double boundary_charge(const DensityMatrix& rho, const KrausFamily& family) {
  const auto absorbing = family.absorbing_outcome();
  if (!absorbing) return 0.0;
  return rho.matrix().cwiseProduct(family.effect(*absorbing).transpose()).sum().real();
}

void check_boundary(const DensityMatrix& rho, const KrausFamily& family, std::size_t n) {
  const double charge = boundary_charge(rho, family);
  if (charge > kBoundaryCharge) {
    std::ostringstream os;
    os << "state charges the truncation boundary at step " << n << " (mass " << charge << ")";
    throw Error(ErrorKind::BoundaryCharged, os.str(), charge);
  }
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted.front();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

const Snapshot* TrajectoryRecord::snapshot_at(std::size_t n) const {
  for (const auto& s : snapshots)
    if (s.n == n) return &s;
  return nullptr;
}

StepRecord observe(std::size_t n, std::optional<std::size_t> outcome, const DensityMatrix& rho,
                   std::size_t offset, const Observables& obs) {
  StepRecord rec;
  rec.n = n;
  rec.outcome = outcome;
  rec.offset = offset;
  rec.g = linear_entropy(rho);
  const TopSpectrum spec = top_spectrum(rho);
  rec.top_sums.reserve(obs.top_sums.size());
  for (Index order : obs.top_sums) {
    if (order < 1) throw Error(ErrorKind::InvalidParameters, "top-sum order must be >= 1");
    const Index count = std::min<Index>(order, spec.values.size());
    rec.top_sums.push_back(std::clamp(spec.values.head(count).sum(), 0.0, 1.0));
  }
  rec.mu1 = spec.values[0];
  rec.mu2 = spec.values.size() > 1 ? spec.values[1] : 0.0;
  if (obs.projectors && spec.top2.cols() == 2) rec.projector = spec.top2 * spec.top2.adjoint();
  return rec;
}

StepResult step(const DensityMatrix& rho, const KrausFamily& family, double u, double tol) {
  const std::vector<double> probs = born_probabilities(rho, family);
  double total = 0.0;
  for (double p : probs) total += p;
  if (std::abs(total - 1.0) > tol) {
    std::ostringstream os;
    os << "outcome probabilities sum to " << total;
    throw Error(ErrorKind::ZeroProbabilityOutcome, os.str(), std::abs(total - 1.0));
  }
  std::optional<std::size_t> chosen;
  std::optional<std::size_t> last_positive;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    cumulative += probs[i];
    if (cumulative > u) {
      chosen = i;
      break;
    }
  }
  if (!chosen) chosen = last_positive;
  return StepResult{*chosen, posterior(rho, family, *chosen)};
}

TrajectoryRecord run_trajectory(const DensityMatrix& rho0, const KrausFamily& family, std::size_t horizon,
                                RngStream& stream, const Observables& obs, std::uint64_t trajectory_id) {
  TrajectoryRecord rec;
  rec.trajectory_id = trajectory_id;
  rec.base_seed = stream.base_seed();
  rec.stream_id = stream.stream_id();
  rec.top_sum_orders = obs.top_sums;
  rec.steps.reserve(horizon + 1);
  if (rho0.dim() != family.dim()) throw Error(ErrorKind::DimensionMismatch, "initial state and family differ in dimension");

  DensityMatrix rho = rho0;
  check_boundary(rho, family, 0);
  rec.steps.push_back(observe(0, std::nullopt, rho, 0, obs));
  if (obs.snapshot_stride > 0) rec.snapshots.push_back({0, 0, rho});
  for (std::size_t n = 1; n <= horizon; ++n) {
    StepResult next = step(rho, family, stream.uniform());
    rho = std::move(next.state);
    check_boundary(rho, family, n);
    rec.steps.push_back(observe(n, next.outcome, rho, 0, obs));
    if (obs.snapshot_stride > 0 && n % obs.snapshot_stride == 0) rec.snapshots.push_back({n, 0, rho});
  }
  return rec;
}

TrajectoryRecord replay_trajectory(const DensityMatrix& rho0, const KrausFamily& family,
                                   std::span<const std::size_t> outcomes, const Observables& obs) {
  TrajectoryRecord rec;
  rec.top_sum_orders = obs.top_sums;
  DensityMatrix rho = rho0;
  rec.steps.push_back(observe(0, std::nullopt, rho, 0, obs));
  if (obs.snapshot_stride > 0) rec.snapshots.push_back({0, 0, rho});
  std::size_t n = 0;
  for (std::size_t outcome : outcomes) {
    ++n;
    rho = posterior(rho, family, outcome);
    check_boundary(rho, family, n);
    rec.steps.push_back(observe(n, outcome, rho, 0, obs));
    if (obs.snapshot_stride > 0 && n % obs.snapshot_stride == 0) rec.snapshots.push_back({n, 0, rho});
  }
  return rec;
}

// ---------------------------------------------------------------------------

namespace {

struct SlimRecord {
  std::vector<double> g;                  // per step
  std::vector<std::vector<double>> top;   // per step, per order
  std::optional<TrajectoryRecord> full;
};

}  // namespace

EnsembleSummary run_ensemble(const TrajectoryRunner& runner, const EnsembleOptions& options) {
  if (options.trajectories < 1) throw Error(ErrorKind::InvalidParameters, "ensemble needs at least one trajectory");
  const std::size_t count = options.trajectories;
  std::vector<SlimRecord> slim(count);
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::vector<Index>> orders(count);

  auto work = [&](std::size_t worker, std::size_t workers) {
    for (std::size_t id = worker; id < count; id += workers) {
      try {
        RngStream stream(options.base_seed, id);
        TrajectoryRecord rec = runner(id, stream);
        SlimRecord s;
        s.g.reserve(rec.steps.size());
        s.top.reserve(rec.steps.size());
        for (const auto& st : rec.steps) {
          s.g.push_back(st.g);
          s.top.push_back(st.top_sums);
        }
        orders[id] = rec.top_sum_orders;
        if (options.keep_records) s.full = std::move(rec);
        slim[id] = std::move(s);
      } catch (...) {
        errors[id] = std::current_exception();
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, count);
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::size_t steps = slim.front().g.size();
  for (std::size_t id = 0; id < count; ++id) {
    if (slim[id].g.size() != steps || orders[id] != orders.front()) {
      throw Error(ErrorKind::InvalidParameters, "ensemble trajectories differ in length or observables");
    }
  }

  EnsembleSummary summary;
  summary.trajectories = count;
  summary.horizon = steps - 1;
  summary.base_seed = options.base_seed;
  summary.purify_threshold = options.purify_threshold;
  summary.top_sum_orders = orders.front();
  const std::size_t k_orders = summary.top_sum_orders.size();

  std::vector<double> column(count);
  summary.steps.reserve(steps);
  for (std::size_t n = 0; n < steps; ++n) {
    StepStats st;
    st.n = n;
    double sum = 0.0;
    std::size_t purified = 0;
    for (std::size_t id = 0; id < count; ++id) {
      column[id] = slim[id].g[n];
      sum += column[id];
      if (column[id] < options.purify_threshold) ++purified;
    }
    st.mean_g = sum / static_cast<double>(count);
    st.frac_purified = static_cast<double>(purified) / static_cast<double>(count);
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    st.min_g = sorted.front();
    st.max_g = sorted.back();
    st.q05_g = quantile_sorted(sorted, 0.05);
    st.q95_g = quantile_sorted(sorted, 0.95);
    st.mean_top.assign(k_orders, 0.0);
    st.min_top.assign(k_orders, 1.0);
    st.max_top.assign(k_orders, 0.0);
    for (std::size_t k = 0; k < k_orders; ++k) {
      double s = 0.0;
      for (std::size_t id = 0; id < count; ++id) {
        const double v = slim[id].top[n][k];
        s += v;
        st.min_top[k] = std::min(st.min_top[k], v);
        st.max_top[k] = std::max(st.max_top[k], v);
      }
      st.mean_top[k] = s / static_cast<double>(count);
    }
    summary.steps.push_back(std::move(st));
  }
  summary.purified_fraction = summary.steps.back().frac_purified;

  std::vector<std::size_t> probe_steps = options.probe_steps;
  probe_steps.push_back(summary.horizon);
  for (std::size_t n : probe_steps) {
    if (n > summary.horizon) throw Error(ErrorKind::InvalidParameters, "probe step beyond the horizon");
    auto& table = summary.probes[n];
    table.clear();
    for (std::size_t id = 0; id < count; ++id) table.push_back(slim[id].top[n]);
  }
  summary.terminal.reserve(count);
  for (std::size_t id = 0; id < count; ++id) {
    summary.terminal.push_back({id, slim[id].g.back(), slim[id].top.back()});
    if (options.keep_records) summary.records.push_back(std::move(*slim[id].full));
  }
  return summary;
}

EnsembleSummary run_ensemble(const DensityMatrix& rho0, const KrausFamily& family, std::size_t horizon,
                             const EnsembleOptions& options, const Observables& obs) {
  return run_ensemble(
      [&](std::uint64_t id, RngStream& stream) { return run_trajectory(rho0, family, horizon, stream, obs, id); },
      options);
}

// ---------------------------------------------------------------------------

double expectation_one_step(const DensityMatrix& rho, const KrausFamily& family, const StateFunctional& f) {
  const std::vector<double> probs = born_probabilities(rho, family);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    total += probs[i] * f(posterior(rho, family, i));
  }
  return total;
}

std::vector<WordBranch> word_branches(const DensityMatrix& rho, const KrausFamily& family, std::size_t p,
                                      std::size_t budget) {
  if (rho.dim() != family.dim()) throw Error(ErrorKind::DimensionMismatch, "state and family differ in dimension");
  std::size_t words = 1;
  for (std::size_t j = 0; j < p; ++j) {
    if (words > budget / std::max<std::size_t>(family.size(), 1)) {
      throw Error(ErrorKind::BudgetExceeded, "|I|^p exceeds the word budget of " + std::to_string(budget));
    }
    words *= family.size();
  }
  if (words > budget) throw Error(ErrorKind::BudgetExceeded, "|I|^p exceeds the word budget");

  std::vector<WordBranch> out;
  std::vector<std::size_t> letters;
  // Depth-first over unnormalized states a_w rho a_w^dagger.
  std::function<void(const ComplexMatrix&)> descend = [&](const ComplexMatrix& x) {
    if (letters.size() == p) {
      const double prob = x.trace().real();
      out.push_back({Word{letters}, prob, DensityMatrix::from_trusted(x / prob)});
      return;
    }
    for (std::size_t i = 0; i < family.size(); ++i) {
      ComplexMatrix next = family.conjugate(i, x);
      if (!(next.trace().real() > kZeroProbability)) continue;
      letters.push_back(i);
      descend(next);
      letters.pop_back();
    }
  };
  descend(rho.matrix());
  return out;
}

double expectation_p_step(const DensityMatrix& rho, const KrausFamily& family, std::size_t p,
                          const StateFunctional& f, std::size_t budget) {
  double total = 0.0;
  for (const auto& branch : word_branches(rho, family, p, budget)) total += branch.probability * f(branch.state);
  return total;
}

// ---------------------------------------------------------------------------

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records) {
  CsvWriter csv(out);
  std::vector<std::string> cols{"trajectory_id", "n", "outcome", "g"};
  const std::vector<Index> orders = records.empty() ? std::vector<Index>{} : records.front().top_sum_orders;
  for (Index k : orders) cols.push_back("S" + std::to_string(k));
  cols.push_back("mu1");
  cols.push_back("mu2");
  csv.header(cols);
  for (const auto& rec : records) {
    for (const auto& st : rec.steps) {
      csv.field(static_cast<unsigned long long>(rec.trajectory_id))
          .field(static_cast<unsigned long long>(st.n))
          .field(static_cast<unsigned long long>(st.outcome ? *st.outcome + 1 : 0))
          .field(st.g);
      for (double s : st.top_sums) csv.field(s);
      csv.field(st.mu1).field(st.mu2);
      csv.end_row();
    }
  }
}

void write_ensemble_csv(std::ostream& out, const EnsembleSummary& summary) {
  CsvWriter csv(out);
  csv.header({"n", "mean_g", "min_g", "max_g", "q05_g", "q95_g", "frac_purified"});
  for (const auto& st : summary.steps) {
    csv.field(static_cast<unsigned long long>(st.n))
        .field(st.mean_g)
        .field(st.min_g)
        .field(st.max_g)
        .field(st.q05_g)
        .field(st.q95_g)
        .field(st.frac_purified);
    csv.end_row();
  }
}

}  // namespace purlab
