// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "purlab/audit.hpp"
#include "test_util.hpp"

namespace purlab {
namespace {

using testing::diag2;
using testing::diag_qubit;
using testing::kind_of;

// sum_w pi_w tr(rho_w^2) - tr(rho^2) from explicit operator products.
double brute_hp(const DensityMatrix& rho, const KrausFamily& f, std::size_t p) {
  double total = 0.0;
  for (const Word& w : enumerate_words(f.size(), p)) {
    ComplexMatrix a = ComplexMatrix::Identity(f.dim(), f.dim());
    for (std::size_t letter : w.letters) a = f.op(letter) * a;
    const ComplexMatrix x = a * rho.matrix() * a.adjoint();
    const double pi = x.trace().real();
    if (pi <= 1e-15) continue;
    total += (x * x).trace().real() / pi;
  }
  return total - purity(rho);
}

TEST(PurityGap, Examples) {
  RngStream rng(51, 0);
  const DensityMatrix rho = random_density(rng, 2, 2);
  EXPECT_NEAR(purity_gap(rho, testing::scaled_unitary_qubit()), 0.0, 1e-14);
  EXPECT_NEAR(purity_gap(DensityMatrix::maximally_mixed(2), diag_qubit()), -0.08, 1e-15);
  const auto family = random_kraus_family(rng, 4, 3);
  EXPECT_NEAR(purity_gap(DensityMatrix::pure(testing::random_unit(rng, 4)), family), 0.0, 1e-12);
}

TEST(HpValue, Examples) {
  const HpValue dq = h_p_value(DensityMatrix::maximally_mixed(2), diag_qubit(), 1);
  EXPECT_NEAR(dq.form_a, 0.08, 1e-15);
  EXPECT_NEAR(dq.form_b, 0.08, 1e-15);
  RngStream rng(52, 0);
  const auto su = testing::scaled_unitary(random_unitary(rng, 3));
  const DensityMatrix rho = random_density(rng, 3, 3);
  for (std::size_t p = 1; p <= 3; ++p) {
    const HpValue h = h_p_value(rho, su, p);
    EXPECT_NEAR(h.form_a, 0.0, 1e-12);
    EXPECT_NEAR(h.form_b, 0.0, 1e-12);
  }
  const HpValue pure = h_p_value(DensityMatrix::pure(testing::random_unit(rng, 3)), random_kraus_family(rng, 3, 2), 1);
  EXPECT_NEAR(pure.form_a, 0.0, 1e-12);
  EXPECT_NEAR(pure.form_b, 0.0, 1e-12);
  EXPECT_EQ(kind_of([] { h_p_value(DensityMatrix::maximally_mixed(2), diag_qubit(), 4, 8); }),
            ErrorKind::BudgetExceeded);
}

TEST(HpValue, FormsAgreeWithBruteForce) {
  RngStream rng(53, 0);
  for (int t = 0; t < 60; ++t) {
    const Index d = uniform_int(rng, 1, 6);
    const auto family = random_kraus_family(rng, d, static_cast<std::size_t>(uniform_int(rng, 1, 3)));
    const DensityMatrix rho = random_density(rng, d, uniform_int(rng, 1, d));
    for (std::size_t p = 1; p <= 3; ++p) {
      const HpValue h = h_p_value(rho, family, p);
      EXPECT_NEAR(h.form_a, brute_hp(rho, family, p), 1e-11);
      EXPECT_NEAR(h.form_a, h.form_b, 1e-9);
      EXPECT_GE(h.form_a, -1e-10);
    }
    EXPECT_NEAR(h_p_value(rho, family, 1).form_a, -purity_gap(rho, family), 1e-12);
  }
}

TEST(NielsenGap, Examples) {
  EXPECT_NEAR(nielsen_gap(DensityMatrix::maximally_mixed(2), diag_qubit(), 1), 0.2, 1e-15);
  RngStream rng(54, 0);
  const auto family = random_kraus_family(rng, 4, 3);
  const DensityMatrix rho = random_density(rng, 4, 4);
  EXPECT_NEAR(nielsen_gap(rho, family, 4), 0.0, 1e-12);
  const auto su = testing::scaled_unitary(random_unitary(rng, 4));
  for (Index n = 1; n <= 4; ++n) EXPECT_NEAR(nielsen_gap(rho, su, n), 0.0, 1e-12);
}

TEST(Concentration, Examples) {
  EnsembleOptions opts;
  opts.trajectories = 200;
  opts.probe_steps = {10};
  Observables obs;
  obs.top_sums = {1, 2};
  RngStream rng(55, 0);
  const auto family = random_kraus_family(rng, 2, 2);
  const DensityMatrix pure = DensityMatrix::pure(testing::random_unit(rng, 2));
  const auto s_pure = run_ensemble(pure, family, 20, opts, obs);
  const ConcentrationResult a = concentration_check(s_pure, pure, 1, 0.9, 10);
  EXPECT_EQ(a.empirical, 0.0);
  EXPECT_NEAR(a.bound, 0.0, 1e-12);
  EXPECT_FALSE(a.violated);

  const DensityMatrix mixed = DensityMatrix::maximally_mixed(2);
  const auto s_mixed = run_ensemble(mixed, diag_qubit(), 20, opts, obs);
  const ConcentrationResult b = concentration_check(s_mixed, mixed, 2, 0.9, 20);
  EXPECT_EQ(b.empirical, 0.0);
  EXPECT_NEAR(b.bound, 0.0, 1e-12);
  EXPECT_FALSE(b.violated);

  const ConcentrationResult c = concentration_check(s_mixed, mixed, 1, 0.6, 10);
  EXPECT_NEAR(c.bound, 1.25, 1e-12);
  EXPECT_LE(c.empirical, 1.0);
  EXPECT_FALSE(c.violated);

  EXPECT_EQ(kind_of([&] { concentration_check(s_mixed, mixed, 1, 0.6, 5); }), ErrorKind::MissingObservable);
  EXPECT_EQ(kind_of([&] { concentration_check(s_mixed, mixed, 3, 0.6, 10); }), ErrorKind::MissingObservable);
}

TEST(Concentration, StandardErrorAndViolationRule) {
  EnsembleOptions opts;
  opts.trajectories = 400;
  Observables obs;
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(2);
  const auto s = run_ensemble(mixed, diag_qubit(), 30, opts, obs);
  const ConcentrationResult r = concentration_check(s, mixed, 1, 0.9, 30);
  EXPECT_NEAR(r.bound, 5.0, 1e-12);
  EXPECT_EQ(r.standard_error, 0.0);
  EXPECT_FALSE(r.violated);
  EXPECT_LE(r.empirical, r.bound);
}

TEST(FlagGap, Examples) {
  RngStream rng(56, 0);
  const auto family = random_kraus_family(rng, 3, 3);
  const FlagGap id = flag_gap(random_density(rng, 3, 3), family, Projection::identity(3));
  EXPECT_NEAR(id.direct, 0.0, 1e-12);
  EXPECT_NEAR(id.heisenberg, 0.0, 1e-12);

  const FlagGap tri = flag_gap(DensityMatrix::maximally_mixed(2), testing::triangular_qubit(), Projection::coordinate(2, 1));
  EXPECT_NEAR(tri.direct, 0.25, 1e-15);
  EXPECT_NEAR(tri.heisenberg, 0.25, 1e-15);

  const FlagGap sh = flag_gap(DensityMatrix::basis_state(6, 2), truncate_shift(testing::ce(), 6), Projection::coordinate(6, 3));
  EXPECT_NEAR(sh.direct, -1.0, 1e-15);
  EXPECT_NEAR(sh.heisenberg, -1.0, 1e-15);
}

TEST(FlagGap, AgreementAndSignOnTriangularFamilies) {
  RngStream rng(57, 0);
  for (int t = 0; t < 100; ++t) {
    const Index d = uniform_int(rng, 2, 8);
    const auto ranks = random_flag_ranks(rng, d);
    const auto family = random_triangular_family(rng, d, static_cast<std::size_t>(uniform_int(rng, 1, 3)), ranks);
    const DensityMatrix rho = random_density(rng, d, uniform_int(rng, 1, d));
    const FlagProjections flags = FlagProjections::coordinate(d, ranks);
    for (const Projection& s : flags.levels()) {
      const FlagGap g = flag_gap(rho, family, s);
      EXPECT_NEAR(g.direct, g.heisenberg, 1e-10);
      EXPECT_GE(g.direct, -1e-10);
    }
  }
}

TEST(Decomposition, Examples) {
  Observables obs;
  obs.snapshot_stride = 1;
  RngStream rng(58, 0);
  const auto family = random_kraus_family(rng, 3, 3);
  RngStream s(58, 1);
  const auto rec = run_trajectory(random_density(rng, 3, 3), family, 20, s, obs);
  EXPECT_LE(decomposition_audit(rec, family, 1), 1e-9);
  EXPECT_LE(decomposition_audit(rec, family, 2), 1e-9);

  const auto su = testing::scaled_unitary(random_unitary(rng, 3));
  RngStream s2(58, 2);
  const auto rec_su = run_trajectory(random_density(rng, 3, 3), su, 20, s2, obs);
  EXPECT_LE(decomposition_audit(rec_su, su, 2), 1e-12);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream st(seed, 0);
    const auto dq = run_trajectory(DensityMatrix::maximally_mixed(2), diag_qubit(), 20, st, obs);
    EXPECT_LE(decomposition_audit(dq, diag_qubit(), 2), 1e-9);
    EXPECT_LE(decomposition_audit(dq, diag_qubit(), 3), 1e-9);
  }

  RngStream s3(58, 3);
  const auto bare = run_trajectory(DensityMatrix::maximally_mixed(2), diag_qubit(), 5, s3, {});
  EXPECT_EQ(kind_of([&] { decomposition_audit(bare, diag_qubit(), 1); }), ErrorKind::MissingSnapshots);
}

TEST(SmallestN, Examples) {
  RngStream rng(59, 0);
  EXPECT_EQ(smallest_N_for_epsilon(DensityMatrix::pure(testing::random_unit(rng, 3)), 0.01), 1);
  RealVector w(3);
  w << 0.5, 0.3, 0.2;
  EXPECT_EQ(smallest_N_for_epsilon(DensityMatrix::diagonal(w), 0.25), 2);
  EXPECT_EQ(smallest_N_for_epsilon(DensityMatrix::maximally_mixed(4), 0.5), 2);
  EXPECT_EQ(smallest_N_for_epsilon(DensityMatrix::maximally_mixed(4), 1.0), 1);
  EXPECT_EQ(kind_of([] { smallest_N_for_epsilon(DensityMatrix::maximally_mixed(2), 0.0); }),
            ErrorKind::InvalidParameters);
}

TEST(RandomAudit, SmallBatchPassesAndIsOrdered) {
  RandomAuditOptions opts;
  opts.instances = 40;
  opts.triangular_instances = 20;
  opts.seed = 3;
  const auto rows = random_martingale_audit(opts);
  EXPECT_TRUE(all_pass(rows));
  std::set<std::string> quantities;
  for (const auto& r : rows) quantities.insert(r.quantity);
  for (const char* q : {"purity_gap", "nielsen_gap_N1", "hp_agreement_p1", "hp_sign_p3", "h1_purity_identity",
                        "kcond_residual", "flag_agreement_m1", "flag_sign_m1", "heisenberg_gap_m1"})
    EXPECT_TRUE(quantities.count(q)) << q;
  EXPECT_EQ(rows.front().instance_id, 0u);

  const auto again = random_martingale_audit(opts);
  ASSERT_EQ(rows.size(), again.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].gap, again[i].gap);
}

TEST(RandomAudit, FlagsNonTriangularFamilies) {
  const KrausFamily sh = truncate_shift(testing::ce(), 6);
  const auto rows = flag_audit(sh, FlagProjections::coordinate(6, {3}), DensityMatrix::basis_state(6, 2), 0);
  EXPECT_FALSE(all_pass(rows));
}

TEST(TrajectoryAudit, HoldsAlongHundredStepTrajectories) {
  Observables obs;
  obs.snapshot_stride = 1;
  RngStream rng(60, 0);
  for (int t = 0; t < 3; ++t) {
    const Index d = uniform_int(rng, 2, 5);
    const auto family = random_kraus_family(rng, d, 2);
    RngStream s(60, 10 + t);
    const auto rec = run_trajectory(random_density(rng, d, d), family, 100, s, obs);
    const auto rows = trajectory_audit(rec, family, 3);
    EXPECT_TRUE(all_pass(rows));
    EXPECT_GE(rows.size(), 101u * 3u);
  }
}

TEST(AuditCsv, Columns) {
  const std::vector<AuditResult> rows{{"purity_gap", 3, -0.08, 1e-10, true}};
  std::ostringstream os;
  write_audit_csv(os, rows);
  EXPECT_EQ(os.str(), "quantity,instance_id,gap,tolerance,pass\npurity_gap,3,-0.08,1e-10,true\n");
}

}  // namespace
}  // namespace purlab
