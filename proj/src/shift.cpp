// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/shift.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "purlab/csv.hpp"
#include "purlab/error.hpp"

namespace purlab {
namespace {

long site(std::size_t k) { return static_cast<long>(k); }

ComplexMatrix pad_to(const ComplexMatrix& w, Index size) {
  if (w.rows() >= size) return w;
  ComplexMatrix out = ComplexMatrix::Zero(size, size);
  out.topLeftCorner(w.rows(), w.cols()) = w;
  return out;
}

bool last_charged(const ComplexMatrix& w) { return w(w.rows() - 1, w.rows() - 1).real() > kWindowBoundaryMass; }

}  // namespace

TwoPointState TwoPointState::make(std::size_t n, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw Error(ErrorKind::InvalidParameters, "two-point weight gamma must lie in [0,1]");
  }
  return TwoPointState{n, gamma, 1.0 - gamma};
}

TwoPointProbs two_point_probs(const TwoPointState& s, const WeightedShiftModel& model) {
  const double pi1 = model.alpha(site(s.n + 1)) * s.gamma + model.alpha(site(s.n + 2)) * s.delta;
  return {pi1, 1.0 - pi1};
}

TwoPointState two_point_update(const TwoPointState& s, std::size_t outcome, const WeightedShiftModel& model) {
  const double bg = model.beta(outcome, site(s.n + 1)) * s.gamma;
  const double bd = model.beta(outcome, site(s.n + 2)) * s.delta;
  const double norm = bg + bd;
  if (!(norm > kZeroProbability)) {
    std::ostringstream os;
    os << "outcome " << outcome + 1 << " has probability " << norm << " at step " << s.n;
    throw Error(ErrorKind::ZeroProbabilityOutcome, os.str(), norm);
  }
  return TwoPointState{s.n + 1, bg / norm, bd / norm};
}

ProductBound product_lower_bound(const WeightedShiftModel& model, double gamma_delta0, std::size_t n) {
  const double a1 = model.alpha(1);
  const double an = model.alpha(site(n + 2));
  const double c = model.limit();
  ProductBound out;
  out.bound = a1 * (1.0 - an) / (an * (1.0 - a1)) * gamma_delta0;
  out.liminf = a1 * (1.0 - c) / (c * (1.0 - a1)) * gamma_delta0;
  return out;
}

// ---------------------------------------------------------------------------

WindowState WindowState::make(std::size_t offset, const ComplexMatrix& w, Index size) {
  const DensityMatrix rho = DensityMatrix::make(w);
  ComplexMatrix padded = pad_to(rho.matrix(), std::max<Index>(size, 1));
  if (last_charged(padded)) padded = pad_to(padded, padded.rows() + 1);
  return WindowState{offset, std::move(padded)};
}

WindowState WindowState::two_point(const TwoPointState& s, Index size) {
  ComplexMatrix w = ComplexMatrix::Zero(2, 2);
  w(0, 0) = s.gamma;
  w(1, 1) = s.delta;
  return make(s.n, w, size);
}

std::vector<double> window_probabilities(const WindowState& ws, const WeightedShiftModel& model) {
  std::vector<double> probs(2, 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    double p = 0.0;
    for (Index j = 0; j < ws.size(); ++j) {
      p += model.beta(i, site(ws.offset + 1 + static_cast<std::size_t>(j))) * ws.window(j, j).real();
    }
    probs[i] = p < kZeroProbability ? 0.0 : p;
  }
  return probs;
}

WindowState window_step(const WindowState& ws, std::size_t outcome, const WeightedShiftModel& model) {
  const Index k = ws.size();
  RealVector root(k);
  for (Index j = 0; j < k; ++j) {
    root[j] = std::sqrt(model.beta(outcome, site(ws.offset + 1 + static_cast<std::size_t>(j))));
  }
  ComplexMatrix next = root.asDiagonal() * ws.window * root.asDiagonal();
  const double norm = next.trace().real();
  if (!(norm > kZeroProbability)) {
    std::ostringstream os;
    os << "outcome " << outcome + 1 << " has probability " << norm << " at offset " << ws.offset;
    throw Error(ErrorKind::ZeroProbabilityOutcome, os.str(), norm);
  }
  next /= norm;
  next = (next + next.adjoint()).eval() * 0.5;
  if (last_charged(next)) next = pad_to(next, k + 1);
  return WindowState{ws.offset + 1, std::move(next)};
}

TrajectoryRecord run_window_trajectory(const WindowState& init, const WeightedShiftModel& model, std::size_t horizon,
                                       RngStream& stream, const Observables& obs, std::uint64_t trajectory_id) {
  TrajectoryRecord rec;
  rec.trajectory_id = trajectory_id;
  rec.base_seed = stream.base_seed();
  rec.stream_id = stream.stream_id();
  rec.top_sum_orders = obs.top_sums;
  rec.steps.reserve(horizon + 1);

  WindowState ws = init;
  rec.steps.push_back(observe(0, std::nullopt, ws.state(), ws.offset, obs));
  if (obs.snapshot_stride > 0) rec.snapshots.push_back({0, ws.offset, ws.state()});
  for (std::size_t n = 1; n <= horizon; ++n) {
    const std::vector<double> probs = window_probabilities(ws, model);
    const double u = stream.uniform();
    const std::size_t outcome = (probs[0] > u || probs[1] == 0.0) ? 0 : 1;
    ws = window_step(ws, outcome, model);
    rec.steps.push_back(observe(n, outcome, ws.state(), ws.offset, obs));
    if (obs.snapshot_stride > 0 && n % obs.snapshot_stride == 0) rec.snapshots.push_back({n, ws.offset, ws.state()});
  }
  return rec;
}

TrajectoryRunner window_runner(WindowState init, WeightedShiftModel model, std::size_t horizon, Observables obs) {
  return [init = std::move(init), model = std::move(model), horizon, obs = std::move(obs)](
             std::uint64_t id, RngStream& stream) {
    return run_window_trajectory(init, model, horizon, stream, obs, id);
  };
}

ComplexMatrix window_word_operator(const WeightedShiftModel& model, const Word& w, std::size_t offset, Index size) {
  const WordProfile profile(model, w);
  ComplexMatrix out = ComplexMatrix::Zero(size, size);
  for (Index j = 0; j < size; ++j) out(j, j) = profile(site(offset + 1 + static_cast<std::size_t>(j)));
  return out;
}

// ---------------------------------------------------------------------------

CrossValidation cross_validate(const WeightedShiftModel& model, double gamma0, std::size_t horizon,
                               std::uint64_t seed, Index truncation) {
  if (horizon < 1) throw Error(ErrorKind::InvalidParameters, "cross-validation needs T >= 1");
  RngStream stream(seed, 0);
  TwoPointState s = TwoPointState::make(0, gamma0);
  std::vector<std::size_t> outcomes;
  outcomes.reserve(horizon);
  for (std::size_t n = 0; n < horizon; ++n) {
    const double u = stream.uniform();
    const std::size_t outcome = two_point_probs(s, model).pi1 > u ? 0 : 1;
    outcomes.push_back(outcome);
    s = two_point_update(s, outcome, model);
  }
  return cross_validate(model, gamma0, outcomes, truncation);
}

CrossValidation cross_validate(const WeightedShiftModel& model, double gamma0,
                               std::span<const std::size_t> outcomes, Index truncation) {
  CrossValidation cv;
  cv.outcomes.assign(outcomes.begin(), outcomes.end());
  const auto horizon = static_cast<Index>(outcomes.size());
  cv.truncation = std::max<Index>(truncation, horizon + 4);

  TwoPointState s = TwoPointState::make(0, gamma0);
  WindowState ws = WindowState::two_point(s);
  const KrausFamily family = truncate_shift(model, cv.truncation);
  ComplexMatrix rho0 = ComplexMatrix::Zero(cv.truncation, cv.truncation);
  rho0(0, 0) = s.gamma;
  rho0(1, 1) = s.delta;
  DensityMatrix rho = DensityMatrix::from_trusted(rho0);

  auto record = [&](std::size_t n) {
    cv.closed_form.push_back(s.gamma);
    cv.window.push_back(ws.gamma());
    cv.matrix.push_back(rho.matrix()(static_cast<Index>(n), static_cast<Index>(n)).real());
    const double a = cv.closed_form.back();
    const double b = cv.window.back();
    const double c = cv.matrix.back();
    cv.max_deviation = std::max({cv.max_deviation, std::abs(a - b), std::abs(a - c), std::abs(b - c)});
  };

  record(0);
  for (std::size_t n = 1; n <= outcomes.size(); ++n) {
    const std::size_t outcome = outcomes[n - 1];
    s = two_point_update(s, outcome, model);
    ws = window_step(ws, outcome, model);
    rho = posterior(rho, family, outcome);
    const double charge = rho.matrix()(cv.truncation - 1, cv.truncation - 1).real();
    if (charge > kWindowBoundaryMass) {
      throw Error(ErrorKind::BoundaryCharged, "truncated simulation charged the boundary", charge);
    }
    record(n);
  }
  return cv;
}

double window_word_residual(const WeightedShiftModel& model, long k, const Word& w) {
  if (k < 1) throw Error(ErrorKind::InvalidParameters, "window index k must be >= 1");
  const WordProfile profile(model, w);
  return std::abs(profile(k + 1) - profile(k)) / 2.0;
}

// ---------------------------------------------------------------------------

ComplexMatrix cauchy_matrix(Index n, double z) {
  if (n < 1) throw Error(ErrorKind::InvalidParameters, "Cauchy matrix needs N >= 1");
  ComplexMatrix a(n, n);
  for (Index k = 0; k < n; ++k)
    for (Index m = 0; m < n; ++m) a(k, m) = 1.0 / (static_cast<double>(k + 1 + m + 1) + z);
  return a;
}

CauchyDiagnostic cauchy_diagnostic(Index n, double z) {
  if (n < 1 || n > 12) throw Error(ErrorKind::InvalidParameters, "Cauchy diagnostic supports 1 <= N <= 12");
  Eigen::JacobiSVD<ComplexMatrix> svd(cauchy_matrix(n, z));
  const RealVector& s = svd.singularValues();
  CauchyDiagnostic out;
  out.n = n;
  out.z = z;
  out.sigma_max = s[0];
  out.sigma_min = s[n - 1];
  out.condition = out.sigma_max / out.sigma_min;
  out.ill_conditioned = n > 8;
  return out;
}

double cauchy_min_singular(Index n, double z) { return cauchy_diagnostic(n, z).sigma_min; }

// ---------------------------------------------------------------------------

std::vector<BoundCheckRow> bound_check(const EnsembleSummary& summary, const WeightedShiftModel& model,
                                       double gamma_delta0, double tol) {
  std::vector<BoundCheckRow> rows;
  rows.reserve(summary.steps.size());
  for (const auto& st : summary.steps) {
    BoundCheckRow row;
    row.n = st.n;
    row.min_gamma_delta = st.min_g / 2.0;
    const ProductBound pb = product_lower_bound(model, gamma_delta0, st.n == 0 ? 0 : st.n - 1);
    row.iterated_bound = st.n == 0 ? gamma_delta0 : pb.bound;
    row.liminf_constant = pb.liminf;
    row.pass = row.min_gamma_delta >= row.iterated_bound - tol && row.min_gamma_delta >= row.liminf_constant - tol;
    rows.push_back(row);
  }
  return rows;
}

void write_bound_check_csv(std::ostream& out, std::span<const BoundCheckRow> rows) {
  CsvWriter csv(out);
  csv.header({"n", "min_gamma_delta", "iterated_bound", "liminf_constant", "pass"});
  for (const auto& r : rows) {
    csv.field(static_cast<unsigned long long>(r.n))
        .field(r.min_gamma_delta)
        .field(r.iterated_bound)
        .field(r.liminf_constant)
        .field(r.pass);
    csv.end_row();
  }
}

}  // namespace purlab
