// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Exact engines for the weighted shift model on l^2(N*): the closed-form
// two-point recursion, a sliding-window representation of finitely supported
// states, and diagnostics (product lower bound, Cauchy matrix).
#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "purlab/kraus.hpp"
#include "purlab/linalg.hpp"
#include "purlab/trajectory.hpp"

namespace purlab {

/// rho_n = gamma |e_{n+1}><e_{n+1}| + delta |e_{n+2}><e_{n+2}|
struct TwoPointState {
  std::size_t n = 0;
  double gamma = 0.5;
  double delta = 0.5;

  /// Throws InvalidParameters unless gamma lies in [0, 1].
  static TwoPointState make(std::size_t n, double gamma);
  double g() const noexcept { return 2.0 * gamma * delta; }
};

struct TwoPointProbs {
  double pi1 = 0.0;
  double pi2 = 0.0;
};

TwoPointProbs two_point_probs(const TwoPointState& s, const WeightedShiftModel& model);
/// `outcome` is 0-based (0 = outcome 1).
TwoPointState two_point_update(const TwoPointState& s, std::size_t outcome, const WeightedShiftModel& model);

struct ProductBound {
  /// Lower bound on gamma_{n+1} delta_{n+1}.
  double bound = 0.0;
  /// n-independent lower bound on liminf gamma_n delta_n.
  double liminf = 0.0;
};

ProductBound product_lower_bound(const WeightedShiftModel& model, double gamma_delta0, std::size_t n);

// ---------------------------------------------------------------------------

/// State supported on {e_{offset+1}, ..., e_{offset+K}}; window(j, l) is the
/// matrix element between e_{offset+1+j} and e_{offset+1+l}.
struct WindowState {
  std::size_t offset = 0;
  ComplexMatrix window;

  /// Validates `w` as a density, zero-pads it to at least `size` and keeps the
  /// last coordinate empty.
  static WindowState make(std::size_t offset, const ComplexMatrix& w, Index size = 8);
  static WindowState two_point(const TwoPointState& s, Index size = 8);

  Index size() const noexcept { return window.rows(); }
  DensityMatrix state() const { return DensityMatrix::from_trusted(window); }
  /// Weight on the first window coordinate.
  double gamma() const { return window(0, 0).real(); }
};

inline constexpr double kWindowBoundaryMass = 1e-12;

std::vector<double> window_probabilities(const WindowState& ws, const WeightedShiftModel& model);
WindowState window_step(const WindowState& ws, std::size_t outcome, const WeightedShiftModel& model);

/// Trajectory through the window engine; StepRecord::offset and projectors are
/// in the window frame.
TrajectoryRecord run_window_trajectory(const WindowState& init, const WeightedShiftModel& model, std::size_t horizon,
                                       RngStream& stream, const Observables& obs, std::uint64_t trajectory_id = 0);

TrajectoryRunner window_runner(WindowState init, WeightedShiftModel model, std::size_t horizon, Observables obs);

/// Diagonal word operator in the window frame at `offset`: diag_j beta_w(offset + 1 + j).
ComplexMatrix window_word_operator(const WeightedShiftModel& model, const Word& w, std::size_t offset, Index size);

// ---------------------------------------------------------------------------

struct CrossValidation {
  std::vector<std::size_t> outcomes;  // 0-based
  std::vector<double> closed_form;    // gamma_n, n = 0..T
  std::vector<double> window;
  std::vector<double> matrix;
  Index truncation = 0;
  double max_deviation = 0.0;
};

/// Samples T outcomes from the closed form (stream RngStream(seed, 0)) and
/// replays them through the window engine and the d x d truncation
/// (d = max(truncation, T + 4)).
CrossValidation cross_validate(const WeightedShiftModel& model, double gamma0, std::size_t horizon,
                               std::uint64_t seed, Index truncation = 0);
CrossValidation cross_validate(const WeightedShiftModel& model, double gamma0,
                               std::span<const std::size_t> outcomes, Index truncation = 0);

/// |beta_w(k+1) - beta_w(k)| / 2, the Chebyshev residual of the compression of
/// a_w^dagger a_w to span{e_k, e_{k+1}}.
double window_word_residual(const WeightedShiftModel& model, long k, const Word& w);

// ---------------------------------------------------------------------------

/// A_{km} = 1/(k + m + z), k, m = 1..N.
ComplexMatrix cauchy_matrix(Index n, double z);

struct CauchyDiagnostic {
  Index n = 0;
  double z = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double condition = 0.0;
  /// N > 8: sigma_min is below what double precision resolves reliably.
  bool ill_conditioned = false;
};

CauchyDiagnostic cauchy_diagnostic(Index n, double z);
double cauchy_min_singular(Index n, double z);

// ---------------------------------------------------------------------------

struct BoundCheckRow {
  std::size_t n = 0;
  double min_gamma_delta = 0.0;
  double iterated_bound = 0.0;
  double liminf_constant = 0.0;
  bool pass = false;
};

/// Per-step check min_traj gamma_n delta_n >= bound, from an ensemble of
/// two-point trajectories (gamma delta = g / 2).
std::vector<BoundCheckRow> bound_check(const EnsembleSummary& summary, const WeightedShiftModel& model,
                                       double gamma_delta0, double tol = 1e-12);

/// Columns: n, min_gamma_delta, iterated_bound, liminf_constant, pass.
void write_bound_check_csv(std::ostream& out, std::span<const BoundCheckRow> rows);

}  // namespace purlab
