// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/audit.hpp"

#include <algorithm>
#include <cmath>

#include "purlab/csv.hpp"
#include "purlab/error.hpp"
#include "purlab/random_models.hpp"

namespace purlab {
namespace {

void check_budget(std::size_t alphabet, std::size_t p, std::size_t budget) {
  std::size_t words = 1;
  for (std::size_t j = 0; j < p; ++j) {
    if (alphabet != 0 && words > budget / alphabet) {
      throw Error(ErrorKind::BudgetExceeded, "|I|^p exceeds the word budget of " + std::to_string(budget));
    }
    words *= alphabet;
  }
}

AuditResult upper(std::string quantity, std::uint64_t id, double gap, double tol) {
  return {std::move(quantity), id, gap, tol, gap <= tol};
}

AuditResult lower(std::string quantity, std::uint64_t id, double gap, double tol) {
  return {std::move(quantity), id, gap, tol, gap >= -tol};
}

void point_audits(std::vector<AuditResult>& out, const DensityMatrix& rho, const KrausFamily& family,
                  std::size_t max_p, std::uint64_t id, const AuditTolerances& tol) {
  const double pg = purity_gap(rho, family);
  out.push_back(upper("purity_gap", id, pg, tol.purity));
  for (Index n = 1; n <= rho.dim(); ++n) {
    out.push_back(lower("nielsen_gap_N" + std::to_string(n), id, nielsen_gap(rho, family, n), tol.nielsen));
  }
  for (std::size_t p = 1; p <= max_p; ++p) {
    const HpValue h = h_p_value(rho, family, p);
    const std::string suffix = "_p" + std::to_string(p);
    out.push_back(upper("hp_agreement" + suffix, id, std::abs(h.form_a - h.form_b), tol.hp_agreement));
    out.push_back(lower("hp_sign" + suffix, id, std::min(h.form_a, h.form_b), tol.hp_sign));
    if (p == 1) out.push_back(upper("h1_purity_identity", id, std::abs(h.form_a + pg), tol.purity));
  }
}

}  // namespace

double purity_gap(const DensityMatrix& rho, const KrausFamily& family) {
  const StateFunctional g = [](const DensityMatrix& s) { return linear_entropy(s); };
  return expectation_one_step(rho, family, g) - linear_entropy(rho);
}

HpValue h_p_value(const DensityMatrix& rho, const KrausFamily& family, std::size_t p, std::size_t budget) {
  check_budget(family.size(), p, budget);
  HpValue out;
  const double purity0 = purity(rho);
  for (const auto& branch : word_branches(rho, family, p, budget)) out.form_a += branch.probability * purity(branch.state);
  out.form_a -= purity0;

  const Index d = rho.dim();
  const ComplexMatrix root = matrix_sqrt_psd(rho);
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  for (const Word& w : enumerate_words(family.size(), p)) {
    const ComplexMatrix e = family.word_operator(w);
    const double pi = rho.matrix().cwiseProduct(e.transpose()).sum().real();
    if (!(pi > kZeroProbability)) continue;
    const ComplexMatrix x = root * (e / pi - id) * root;
    out.form_b += pi * x.squaredNorm();
  }
  return out;
}

double nielsen_gap(const DensityMatrix& rho, const KrausFamily& family, Index n) {
  if (n < 1) throw Error(ErrorKind::InvalidParameters, "top-sum order must be >= 1");
  const StateFunctional s = [n](const DensityMatrix& sigma) { return top_sum(sigma, n); };
  return expectation_one_step(rho, family, s) - top_sum(rho, n);
}

ConcentrationResult concentration_check(const EnsembleSummary& summary, const DensityMatrix& rho0, Index order,
                                        double gamma, std::size_t n) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidParameters, "gamma must lie in (0,1)");
  const auto& orders = summary.top_sum_orders;
  const auto it = std::find(orders.begin(), orders.end(), order);
  if (it == orders.end()) {
    throw Error(ErrorKind::MissingObservable, "ensemble did not record S^" + std::to_string(order));
  }
  const auto probe = summary.probes.find(n);
  if (probe == summary.probes.end()) {
    throw Error(ErrorKind::MissingObservable, "ensemble did not keep S^N values at step " + std::to_string(n));
  }
  const auto k = static_cast<std::size_t>(it - orders.begin());
  const auto& values = probe->second;
  std::size_t below = 0;
  for (const auto& row : values)
    if (row[k] < gamma) ++below;

  ConcentrationResult out;
  const auto m = static_cast<double>(values.size());
  out.empirical = static_cast<double>(below) / m;
  out.bound = std::max(0.0, 1.0 - top_sum(rho0, order)) / (1.0 - gamma);
  const double p0 = std::min(out.bound, 1.0);
  out.standard_error = std::sqrt(p0 * (1.0 - p0) / m);
  out.violated = out.empirical > out.bound + 3.0 * out.standard_error;
  return out;
}

FlagGap flag_gap(const DensityMatrix& rho, const KrausFamily& family, const Projection& s) {
  if (s.dim() != rho.dim() || s.dim() != family.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "state, family and projection dimensions differ");
  }
  const ComplexMatrix& sm = s.matrix();
  auto weight = [&sm](const ComplexMatrix& m) { return m.cwiseProduct(sm.transpose()).sum().real(); };
  const StateFunctional f = [&](const DensityMatrix& sigma) { return weight(sigma.matrix()); };
  FlagGap out;
  out.direct = expectation_one_step(rho, family, f) - weight(rho.matrix());
  ComplexMatrix h = -sm;
  for (const auto& a : family.ops()) h.noalias() += a.adjoint() * sm * a;
  out.heisenberg = rho.matrix().cwiseProduct(h.transpose()).sum().real();
  return out;
}

double decomposition_audit(const TrajectoryRecord& record, const KrausFamily& family, std::size_t p,
                           std::size_t budget) {
  if (p < 1) throw Error(ErrorKind::InvalidParameters, "decomposition needs p >= 1");
  const std::size_t steps = record.steps.size();
  if (record.snapshots.size() != steps) {
    throw Error(ErrorKind::MissingSnapshots, "decomposition audit needs a snapshot at every step");
  }
  for (std::size_t k = 0; k < steps; ++k) {
    if (record.snapshots[k].n != k) throw Error(ErrorKind::MissingSnapshots, "snapshots are not at stride 1");
  }
  if (steps < p + 1) throw Error(ErrorKind::InvalidParameters, "decomposition needs a horizon of at least p");
  check_budget(family.size(), p, budget);
  const std::size_t horizon = steps - 1;

  std::vector<double> g(steps);
  for (std::size_t k = 0; k < steps; ++k) g[k] = record.steps[k].g;
  // h[k] = h^p_k from rho_{k-1} (form B), cond[k] = E[g_k | F_{k-p}].
  std::vector<double> h(steps, 0.0);
  std::vector<double> cond(steps, 0.0);
  const StateFunctional entropy = [](const DensityMatrix& s) { return linear_entropy(s); };
  for (std::size_t k = 1; k + p <= horizon + 1; ++k) {
    h[k] = h_p_value(record.snapshots[k - 1].state, family, p, budget).form_b;
  }
  for (std::size_t k = p; k <= horizon; ++k) {
    cond[k] = expectation_p_step(record.snapshots[k - p].state, family, p, entropy, budget);
  }

  double defect = 0.0;
  for (std::size_t n = p; n <= horizon; ++n) {
    double rhs = 0.0;
    for (std::size_t k = 0; k < p; ++k) rhs += g[k];
    for (std::size_t k = 1; k < p; ++k) rhs -= g[n - k];
    for (std::size_t k = 1; k + p <= n + 1; ++k) rhs -= h[k];
    for (std::size_t k = p; k <= n; ++k) rhs += g[k] - cond[k];
    defect = std::max(defect, std::abs(g[n] - rhs));
  }
  return defect;
}

Index smallest_N_for_epsilon(const DensityMatrix& rho, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorKind::InvalidParameters, "epsilon must lie in (0,1]");
  const EigenDecomposition eig = eigen_descending(rho);
  // Eigenvalue round-off must not push an exact tie (e.g. I/4, eps = 1/2) over.
  constexpr double slack = 1e-12;
  for (Index n = 1; n <= rho.dim(); ++n) {
    if (1.0 - top_sum(eig, n) <= eps + slack) return n;
  }
  return rho.dim();
}

// ---------------------------------------------------------------------------

std::vector<AuditResult> random_martingale_audit(const RandomAuditOptions& options) {
  std::vector<AuditResult> out;
  for (std::size_t t = 0; t < options.instances; ++t) {
    RngStream rng(options.seed, t);
    const Index dim = uniform_int(rng, 1, options.max_dim);
    const auto outcomes = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<long>(options.max_outcomes)));
    const Index rank = uniform_int(rng, 1, dim);
    const DensityMatrix rho = random_density(rng, dim, rank);
    const KrausFamily family = random_kraus_family(rng, dim, outcomes);
    point_audits(out, rho, family, options.max_p, t, options.tol);
  }
  for (std::size_t t = 0; t < options.triangular_instances; ++t) {
    RngStream rng = RngStream(options.seed, t).split(1);
    const Index dim = uniform_int(rng, 2, std::max<Index>(options.max_dim, 2));
    const auto outcomes = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<long>(options.max_outcomes)));
    const std::vector<Index> ranks = random_flag_ranks(rng, dim);
    const KrausFamily family = random_triangular_family(rng, dim, outcomes, ranks);
    const DensityMatrix rho = random_density(rng, dim, uniform_int(rng, 1, dim));
    const auto flag_rows = flag_audit(family, FlagProjections::coordinate(dim, ranks), rho, t, options.tol);
    out.insert(out.end(), flag_rows.begin(), flag_rows.end());
  }
  return out;
}

std::vector<AuditResult> trajectory_audit(const TrajectoryRecord& record, const KrausFamily& family,
                                          std::size_t max_p, const AuditTolerances& tol) {
  if (record.snapshots.empty()) throw Error(ErrorKind::MissingSnapshots, "trajectory audit needs snapshots");
  std::vector<AuditResult> out;
  for (const auto& snap : record.snapshots) point_audits(out, snap.state, family, max_p, snap.n, tol);
  return out;
}

std::vector<AuditResult> flag_audit(const KrausFamily& family, const FlagProjections& flags,
                                    const DensityMatrix& rho, std::uint64_t instance_id,
                                    const AuditTolerances& tol) {
  std::vector<AuditResult> out;
  const KcondReport kc = check_kcond(family, flags);
  out.push_back(upper("kcond_residual", instance_id, kc.max_residual, 1e-9));
  for (std::size_t m = 0; m < flags.size(); ++m) {
    const Projection& s = flags.levels()[m];
    const FlagGap fg = flag_gap(rho, family, s);
    const std::string suffix = "_m" + std::to_string(m + 1);
    out.push_back(upper("flag_agreement" + suffix, instance_id, std::abs(fg.direct - fg.heisenberg),
                        tol.flag_agreement));
    out.push_back(lower("flag_sign" + suffix, instance_id, std::min(fg.direct, fg.heisenberg), tol.flag_sign));
    out.push_back(lower("heisenberg_gap" + suffix, instance_id, heisenberg_gap(family, s), tol.flag_sign));
  }
  return out;
}

bool all_pass(std::span<const AuditResult> results) {
  return std::all_of(results.begin(), results.end(), [](const AuditResult& r) { return r.pass; });
}

void write_audit_csv(std::ostream& out, std::span<const AuditResult> results) {
  CsvWriter csv(out);
  csv.header({"quantity", "instance_id", "gap", "tolerance", "pass"});
  for (const auto& r : results) {
    csv.field(r.quantity)
        .field(static_cast<unsigned long long>(r.instance_id))
        .field(r.gap)
        .field(r.tolerance)
        .field(r.pass);
    csv.end_row();
  }
}

}  // namespace purlab
