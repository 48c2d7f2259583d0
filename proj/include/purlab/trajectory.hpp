// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Sampling and exact-expectation machinery for the trajectory chain
// rho_{n+1} = a_i rho_n a_i^dagger / pi_i with probability pi_i.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "purlab/kraus.hpp"
#include "purlab/linalg.hpp"
#include "purlab/rng.hpp"

namespace purlab {

struct Observables {
  /// Orders N of the top-N eigenvalue sums S^N to record.
  std::vector<Index> top_sums{1};
  bool projectors = false;
  /// Store full states every `snapshot_stride` steps; 0 disables snapshots.
  std::size_t snapshot_stride = 0;
};

struct StepRecord {
  std::size_t n = 0;
  std::optional<std::size_t> outcome;  // none at n = 0
  double g = 0.0;
  std::vector<double> top_sums;
  double mu1 = 0.0;
  double mu2 = 0.0;
  /// Top-2 projector, expressed in the frame starting at basis vector
  /// `offset` (always 0 for finite-dimensional runs).
  std::optional<ComplexMatrix> projector;
  std::size_t offset = 0;
};

struct Snapshot {
  std::size_t n = 0;
  std::size_t offset = 0;
  DensityMatrix state;
};

struct TrajectoryRecord {
  std::uint64_t trajectory_id = 0;
  std::uint64_t base_seed = 0;
  std::uint64_t stream_id = 0;
  std::vector<Index> top_sum_orders;
  std::vector<StepRecord> steps;
  std::vector<Snapshot> snapshots;

  const Snapshot* snapshot_at(std::size_t n) const;
};

/// Computes the per-step observables of `rho`.
StepRecord observe(std::size_t n, std::optional<std::size_t> outcome, const DensityMatrix& rho,
                   std::size_t offset, const Observables& obs);

struct StepResult {
  std::size_t outcome;
  DensityMatrix state;
};

/// Inverse-CDF sampling in fixed outcome order: the first i whose cumulative
/// probability exceeds u.
StepResult step(const DensityMatrix& rho, const KrausFamily& family, double u, double tol = 1e-9);

TrajectoryRecord run_trajectory(const DensityMatrix& rho0, const KrausFamily& family, std::size_t horizon,
                                RngStream& stream, const Observables& obs, std::uint64_t trajectory_id = 0);

/// Replays a fixed outcome sequence (0-based outcomes).
TrajectoryRecord replay_trajectory(const DensityMatrix& rho0, const KrausFamily& family,
                                   std::span<const std::size_t> outcomes, const Observables& obs);

// ---------------------------------------------------------------------------

struct EnsembleOptions {
  std::size_t trajectories = 1;
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;
  double purify_threshold = 1e-6;
  /// Steps at which every trajectory's S^N values are kept (the horizon is
  /// always kept).
  std::vector<std::size_t> probe_steps;
  bool keep_records = false;
};

struct StepStats {
  std::size_t n = 0;
  double mean_g = 0.0;
  double min_g = 0.0;
  double max_g = 0.0;
  double q05_g = 0.0;
  double q95_g = 0.0;
  double frac_purified = 0.0;
  std::vector<double> mean_top;
  std::vector<double> min_top;
  std::vector<double> max_top;
};

struct TerminalValues {
  std::uint64_t trajectory_id = 0;
  double g = 0.0;
  std::vector<double> top_sums;
};

struct EnsembleSummary {
  std::size_t trajectories = 0;
  std::size_t horizon = 0;
  std::uint64_t base_seed = 0;
  double purify_threshold = 1e-6;
  std::vector<Index> top_sum_orders;
  std::vector<StepStats> steps;
  /// Fraction of trajectories with g_T below the threshold.
  double purified_fraction = 0.0;
  std::vector<TerminalValues> terminal;
  /// probes[n][trajectory][k] = S^{top_sum_orders[k]}_n
  std::map<std::size_t, std::vector<std::vector<double>>> probes;
  std::vector<TrajectoryRecord> records;  // only with keep_records
};

/// Runs trajectory `id` on stream RngStream(base_seed, id).
using TrajectoryRunner = std::function<TrajectoryRecord(std::uint64_t id, RngStream& stream)>;

/// Trajectories run on `threads` workers; aggregation is in trajectory-id
/// order, so the summary does not depend on the worker count.
EnsembleSummary run_ensemble(const TrajectoryRunner& runner, const EnsembleOptions& options);

EnsembleSummary run_ensemble(const DensityMatrix& rho0, const KrausFamily& family, std::size_t horizon,
                             const EnsembleOptions& options, const Observables& obs);

// ---------------------------------------------------------------------------

using StateFunctional = std::function<double(const DensityMatrix&)>;

/// sum_i pi_i f(rho'_i), skipping zero-probability outcomes.
double expectation_one_step(const DensityMatrix& rho, const KrausFamily& family, const StateFunctional& f);

struct WordBranch {
  Word word;
  double probability;
  DensityMatrix state;
};

inline constexpr std::size_t kDefaultWordBudget = 4096;

/// Positive-probability words of length p with their conditional states.
std::vector<WordBranch> word_branches(const DensityMatrix& rho, const KrausFamily& family, std::size_t p,
                                      std::size_t budget = kDefaultWordBudget);

/// sum_w pi_w f(rho'_w) over words of length p.
double expectation_p_step(const DensityMatrix& rho, const KrausFamily& family, std::size_t p,
                          const StateFunctional& f, std::size_t budget = kDefaultWordBudget);

// ---------------------------------------------------------------------------

/// Columns: trajectory_id, n, outcome, g, S<N>..., mu1, mu2 (outcome 0 = none).
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records);
/// Columns: n, mean_g, min_g, max_g, q05_g, q95_g, frac_purified.
void write_ensemble_csv(std::ostream& out, const EnsembleSummary& summary);

}  // namespace purlab
