// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Falsification tests for the (super/sub)martingale structure of trajectory
// functionals: purity, top-N eigenvalue sums, flag weights tr(rho s), and the
// pathwise decomposition of the linear entropy.
#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "purlab/kraus.hpp"
#include "purlab/linalg.hpp"
#include "purlab/trajectory.hpp"

namespace purlab {

/// E[g(rho')] - g(rho); expected <= 0.
double purity_gap(const DensityMatrix& rho, const KrausFamily& family);

struct HpValue {
  /// sum_w pi_w tr(rho_w^2) - tr(rho^2), via the posterior states.
  double form_a = 0.0;
  /// sum_w pi_w tr((sqrt(rho) (a_w^dagger a_w / pi_w - 1) sqrt(rho))^2), via
  /// word operators and the matrix square root.
  double form_b = 0.0;
};

HpValue h_p_value(const DensityMatrix& rho, const KrausFamily& family, std::size_t p,
                  std::size_t budget = kDefaultWordBudget);

/// E[S^N(rho')] - S^N(rho); expected >= 0.
double nielsen_gap(const DensityMatrix& rho, const KrausFamily& family, Index n);

struct ConcentrationResult {
  double empirical = 0.0;
  double bound = 0.0;
  double standard_error = 0.0;
  bool violated = false;
};

/// Fraction of trajectories with S^N_n < gamma against (1 - S^N(rho0)) / (1 - gamma).
/// Violation requires empirical > bound + 3 standard errors, the standard
/// error taken at p = min(bound, 1).
ConcentrationResult concentration_check(const EnsembleSummary& summary, const DensityMatrix& rho0, Index order,
                                        double gamma, std::size_t n);

struct FlagGap {
  double direct = 0.0;
  double heisenberg = 0.0;
};

FlagGap flag_gap(const DensityMatrix& rho, const KrausFamily& family, const Projection& s);

/// Max over n >= p of |g_n - (sum_{k<p} g_k - sum_{k=1}^{p-1} g_{n-k} - sum_{k=1}^{n-p+1} h^p_k + m^p_n)|.
/// Requires snapshots at every step.
double decomposition_audit(const TrajectoryRecord& record, const KrausFamily& family, std::size_t p,
                           std::size_t budget = kDefaultWordBudget);

/// Smallest N with 1 - S^N(rho) <= eps.
Index smallest_N_for_epsilon(const DensityMatrix& rho, double eps);

// ---------------------------------------------------------------------------

struct AuditResult {
  std::string quantity;
  std::uint64_t instance_id = 0;
  double gap = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct AuditTolerances {
  double purity = 1e-10;
  double nielsen = 1e-10;
  double hp_agreement = 1e-9;
  double hp_sign = 1e-10;
  double flag_agreement = 1e-10;
  double flag_sign = 1e-10;
};

struct RandomAuditOptions {
  std::size_t instances = 1000;
  std::size_t triangular_instances = 200;
  Index max_dim = 8;
  std::size_t max_outcomes = 3;
  std::size_t max_p = 3;
  std::uint64_t seed = 0;
  AuditTolerances tol{};
};

/// Instance t of each batch draws from RngStream(seed, t) (split 1 for the
/// triangular batch); rows are ordered by batch, then instance id.
std::vector<AuditResult> random_martingale_audit(const RandomAuditOptions& options);

/// Per-step audits (purity, Nielsen for every N, h^p for p <= max_p) along a
/// recorded trajectory with snapshots; instance_id is the step index.
std::vector<AuditResult> trajectory_audit(const TrajectoryRecord& record, const KrausFamily& family,
                                          std::size_t max_p, const AuditTolerances& tol = {});

/// Flag audit on one family; instance_id is the flag level (1-based).
std::vector<AuditResult> flag_audit(const KrausFamily& family, const FlagProjections& flags,
                                    const DensityMatrix& rho, std::uint64_t instance_id,
                                    const AuditTolerances& tol = {});

bool all_pass(std::span<const AuditResult> results);

/// Columns: quantity, instance_id, gap, tolerance, pass.
void write_audit_csv(std::ostream& out, std::span<const AuditResult> results);

}  // namespace purlab
