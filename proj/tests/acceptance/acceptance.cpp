// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any
// criterion fails. All tolerances and budgets are fixed here.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "purlab/audit.hpp"
#include "purlab/dark.hpp"
#include "purlab/kraus.hpp"
#include "purlab/linalg.hpp"
#include "purlab/random_models.hpp"
#include "purlab/rng.hpp"
#include "purlab/shift.hpp"
#include "purlab/trajectory.hpp"

namespace {

using namespace purlab;

constexpr double kEntropyTol = 1e-12;
constexpr double kOracleTol = 1e-10;
constexpr double kPurifiedThreshold = 1e-6;
constexpr double kPurifiedFraction = 0.99;
constexpr double kConservationTol = 1e-12;
constexpr double kDarkResidualTol = 1e-12;
constexpr double kFormulaTol = 1e-12;
constexpr double kRateTol = 1e-9;
constexpr double kDecompositionTol = 1e-9;
constexpr double kSearchTol = 1e-6;
constexpr double kPlantedTol = 1e-8;

constexpr double kBudget1 = 10.0;
constexpr double kBudget2 = 30.0;
constexpr double kBudget3 = 20.0;
constexpr double kBudget5 = 60.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

KrausFamily diag_qubit() {
  ComplexMatrix a1 = ComplexMatrix::Zero(2, 2), a2 = ComplexMatrix::Zero(2, 2);
  a1(0, 0) = std::sqrt(0.3);
  a1(1, 1) = std::sqrt(0.7);
  a2(0, 0) = std::sqrt(0.7);
  a2(1, 1) = std::sqrt(0.3);
  return KrausFamily({a1, a2});
}

WindowState ce_start() { return WindowState::two_point(TwoPointState::make(0, 0.5)); }

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const WeightedShiftModel model = WeightedShiftModel::parametric(0.5, 3.0);
  EnsembleOptions opts;
  opts.trajectories = 1000;
  opts.base_seed = 1;
  const EnsembleSummary s = run_ensemble(window_runner(ce_start(), model, 200, Observables{}), opts);
  double min_g = 1.0;
  for (const auto& st : s.steps) min_g = std::min(min_g, st.min_g);
  const double t = seconds_since(t0);
  const bool ok = s.steps.size() == 201 && min_g >= 1.0 / 6.0 - kEntropyTol && t <= kBudget1;
  return {ok, "min g_n = " + num(min_g) + " (floor 1/6), " + num(t) + " s"};
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const WeightedShiftModel model = WeightedShiftModel::parametric(0.5, 3.0);
  double worst = 0.0;
  bool sized = true;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const CrossValidation cv = cross_validate(model, 0.5, 200, RngStream(2, k).next_u64(), 256);
    sized = sized && cv.truncation == 256 && cv.closed_form.size() == 201;
    worst = std::max(worst, cv.max_deviation);
  }
  const double t = seconds_since(t0);
  return {sized && worst <= kOracleTol && t <= kBudget2, "max deviation " + num(worst) + ", " + num(t) + " s"};
}

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  EnsembleOptions opts;
  opts.trajectories = 1000;
  opts.base_seed = 3;
  opts.purify_threshold = kPurifiedThreshold;
  const EnsembleSummary s = run_ensemble(DensityMatrix::maximally_mixed(2), diag_qubit(), 500, opts, Observables{});
  std::size_t purified = 0;
  for (const auto& tv : s.terminal)
    if (tv.g < kPurifiedThreshold) ++purified;
  const double frac = static_cast<double>(purified) / static_cast<double>(s.terminal.size());
  const double t = seconds_since(t0);
  return {frac >= kPurifiedFraction && t <= kBudget3, "purified fraction " + num(frac) + ", " + num(t) + " s"};
}

Outcome criterion4() {
  RngStream rng(4, 0);
  const Index d = 3;
  const ComplexMatrix u = random_unitary(rng, d);
  const KrausFamily family({ComplexMatrix::Identity(d, d) / std::sqrt(2.0), u / std::sqrt(2.0)});
  const DensityMatrix rho0 = random_density(rng, d, d);
  EnsembleOptions opts;
  opts.trajectories = 200;
  opts.base_seed = 4;
  opts.keep_records = true;
  const EnsembleSummary s = run_ensemble(rho0, family, 100, opts, Observables{});
  const double g0 = linear_entropy(rho0);
  double dev = 0.0;
  for (const auto& rec : s.records)
    for (const auto& st : rec.steps) dev = std::max(dev, std::abs(st.g - g0));
  const DarkReport r = verify_dark(Projection::identity(d), family, 6, kDarkResidualTol);
  const bool ok = dev <= kConservationTol && r.verdict == Verdict::Dark && r.residual <= kDarkResidualTol;
  return {ok, "max |g_n - g_0| = " + num(dev) + ", verdict " + std::string(to_string(r.verdict)) + ", residual " +
                  num(r.residual)};
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  RandomAuditOptions opts;
  opts.instances = 1000;
  opts.triangular_instances = 200;
  opts.max_dim = 8;
  opts.max_outcomes = 3;
  opts.max_p = 3;
  opts.seed = 5;
  const auto results = random_martingale_audit(opts);
  std::size_t failed = 0;
  for (const auto& r : results)
    if (!r.pass) ++failed;
  const double t = seconds_since(t0);
  return {!results.empty() && failed == 0 && t <= kBudget5,
          std::to_string(results.size()) + " audit rows, " + std::to_string(failed) + " failed, " + num(t) + " s"};
}

Outcome criterion6() {
  const WeightedShiftModel model = WeightedShiftModel::parametric(0.5, 3.0);
  const double z = 3.0;
  Observables obs;
  obs.projectors = true;
  RngStream stream(6, 0);
  const TrajectoryRecord rec = run_window_trajectory(ce_start(), model, 200, stream, obs, 0);
  const auto rows = asymptotic_dark_residuals(
      rec, 2, [&](const Word& w, std::size_t offset, Index size) { return window_word_operator(model, w, offset, size); },
      1);
  double formula = 0.0, lo = 1e300, hi = -1e300;
  std::size_t seen = 0;
  for (const auto& r : rows) {
    if (r.word != Word{{0}}) continue;
    ++seen;
    const double n = static_cast<double>(r.n);
    // alpha(n+2) - alpha(n+1) telescopes for alpha(k) = c - 1/(k+z)
    const double expected = 0.5 / ((n + z + 1.0) * (n + z + 2.0));
    formula = std::max(formula, std::abs(r.residual - expected));
    const double scaled = r.residual * (n + z + 1.0) * (n + z + 2.0);
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  const bool ok = seen == 201 && formula <= kFormulaTol && hi - lo <= kRateTol;
  return {ok, "formula deviation " + num(formula) + ", rate spread " + num(hi - lo) + " over " +
                  std::to_string(seen) + " steps"};
}

Outcome criterion7() {
  const KrausFamily family = diag_qubit();
  Observables obs;
  obs.snapshot_stride = 1;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RngStream s(7, seed);
    const DensityMatrix rho0 = random_density(s, 2, 2);
    const TrajectoryRecord rec = run_trajectory(rho0, family, 20, s, obs, seed);
    for (std::size_t p : {1u, 2u}) worst = std::max(worst, decomposition_audit(rec, family, p));
  }
  return {worst <= kDecompositionTol, "max pathwise defect " + num(worst)};
}

Outcome concentration_case(const DensityMatrix& rho0, const KrausFamily& family, std::uint64_t seed,
                           const std::string& label) {
  EnsembleOptions opts;
  opts.trajectories = 1000;
  opts.base_seed = seed;
  opts.probe_steps = {100};
  Observables obs;
  obs.top_sums = {1, 2};
  const EnsembleSummary s = run_ensemble(rho0, family, 100, opts, obs);
  const RealVector lambda = eigen_descending(rho0.matrix()).values;
  Outcome out;
  double slack = 1e300;
  for (std::size_t k = 0; k < 2; ++k) {
    const double s0 = lambda.head(static_cast<Index>(k + 1)).sum();
    for (double gamma : {0.5, 0.9}) {
      const auto& values = s.probes.at(100);
      std::size_t below = 0;
      for (const auto& row : values)
        if (row[k] < gamma) ++below;
      const double m = static_cast<double>(values.size());
      const double empirical = static_cast<double>(below) / m;
      const double bound = std::max(0.0, 1.0 - s0) / (1.0 - gamma);
      const double p0 = std::min(bound, 1.0);
      const double limit = bound + 3.0 * std::sqrt(p0 * (1.0 - p0) / m);
      slack = std::min(slack, limit - empirical);
      if (empirical > limit) out.pass = false;
    }
  }
  out.detail = label + " min slack " + num(slack);
  return out;
}

Outcome criterion8() {
  const Outcome a = concentration_case(DensityMatrix::maximally_mixed(2), diag_qubit(), 8, "diag qubit");
  const Index d = 104;
  RealVector w = RealVector::Zero(d);
  w(0) = 0.6;
  w(1) = 0.3;
  w(2) = 0.1;
  const Outcome b = concentration_case(DensityMatrix::diagonal(w),
                                       truncate_shift(WeightedShiftModel::parametric(0.5, 3.0), d), 9,
                                       "truncated shift");
  return {a.pass && b.pass, a.detail + "; " + b.detail};
}

Outcome criterion9() {
  double smallest = 1e300;
  for (Index n = 1; n <= 6; ++n) smallest = std::min(smallest, cauchy_min_singular(n, 3.0));
  const double s1 = cauchy_min_singular(1, 3.0);
  const double s2 = cauchy_min_singular(2, 3.0);
  const bool ok = smallest > 0.0 && std::abs(s1 - 0.2) <= 1e-12 && std::abs(s2 - 2.331e-3) <= 1e-6;
  return {ok, "N=1 " + num(s1) + ", N=2 " + num(s2) + ", min over N<=6 " + num(smallest)};
}

Outcome criterion10() {
  DarkSearchOptions opts;
  opts.restarts = 50;
  opts.seed = 10;
  const std::vector<ComplexMatrix> e1{diag_qubit().effect(0)};
  const DarkReport restricted = search_dark_pair(e1, true, 1, opts);

  RngStream rng(10, 0);
  double planted_worst = 0.0;
  bool all_dark = true;
  opts.max_len = 12;
  for (Index d : {3, 4, 6}) {
    const KrausFamily rest = random_kraus_family(rng, d - 2, 2);
    const ComplexMatrix rot = random_unitary(rng, d);
    ComplexMatrix x = ComplexMatrix::Zero(2, 2);
    x(0, 1) = x(1, 0) = 1.0;
    const std::array<ComplexMatrix, 2> block{ComplexMatrix::Identity(2, 2) / std::sqrt(2.0), x / std::sqrt(2.0)};
    std::vector<ComplexMatrix> ops;
    for (std::size_t i = 0; i < 2; ++i) {
      ComplexMatrix a = ComplexMatrix::Zero(d, d);
      a.topLeftCorner(2, 2) = block[i];
      a.bottomRightCorner(d - 2, d - 2) = rest.op(i);
      ops.push_back(rot * a * rot.adjoint());
    }
    const DarkReport r = search_dark_pair(KrausFamily(ops), opts);
    planted_worst = std::max(planted_worst, r.residual);
    all_dark = all_dark && r.verdict == Verdict::Dark && r.restarts <= 50;
  }
  const bool ok = std::abs(restricted.residual - 0.04) <= kSearchTol && planted_worst <= kPlantedTol && all_dark;
  return {ok, "restricted minimum " + num(restricted.residual) + ", planted worst residual " + num(planted_worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"1 counterexample non-purification", criterion1},
      {"2 oracle equivalence", criterion2},
      {"3 finite-dimensional purification", criterion3},
      {"4 dark model conservation", criterion4},
      {"5 martingale suite", criterion5},
      {"6 asymptotic dark residual", criterion6},
      {"7 decomposition identity", criterion7},
      {"8 concentration bound", criterion8},
      {"9 cauchy diagnostic", criterion9},
      {"10 dark search", criterion10},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
