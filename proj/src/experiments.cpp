// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include "purlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "purlab/audit.hpp"
#include "purlab/csv.hpp"
#include "purlab/dark.hpp"
#include "purlab/error.hpp"
#include "purlab/model_file.hpp"
#include "purlab/random_models.hpp"
#include "purlab/shift.hpp"
#include "purlab/trajectory.hpp"

namespace purlab {
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Config helpers

std::size_t get_count(const KeyValueFile& cfg, const std::string& key, long fallback, long min_value) {
  const long v = cfg.get_int(key, fallback);
  if (v < min_value) {
    throw Error(ErrorKind::InvalidParameters, key + " must be >= " + std::to_string(min_value));
  }
  return static_cast<std::size_t>(v);
}

double get_positive(const KeyValueFile& cfg, const std::string& key, double fallback) {
  const double v = cfg.get_double(key, fallback);
  if (!(v > 0.0)) throw Error(ErrorKind::InvalidParameters, key + " must be positive");
  return v;
}

bool has_model(const KeyValueFile& cfg) { return cfg.has("model.file") || cfg.has("model.kind"); }

ModelSpec config_model(const KeyValueFile& cfg) {
  if (auto file = cfg.find("model.file")) {
    fs::path p(*file);
    if (p.is_relative()) p = cfg.base_dir() / p;
    return load_model(p);
  }
  if (!cfg.has("model.kind")) throw Error(ErrorKind::ConfigError, cfg.source() + ": missing key 'model.kind' or 'model.file'");
  return parse_model(cfg.subtree("model"));
}

const KrausFamily& require_family(const ModelSpec& spec, const std::string& experiment) {
  if (!spec.family) {
    throw Error(ErrorKind::InvalidParameters,
                experiment + " needs a finite model (explicit, triangular, or shift with model.truncate)");
  }
  return *spec.family;
}

const WeightedShiftModel& require_shift(const ModelSpec& spec, const std::string& experiment) {
  if (!spec.shift) throw Error(ErrorKind::InvalidParameters, experiment + " needs model.kind = shift");
  return *spec.shift;
}

std::vector<Index> config_orders(const KeyValueFile& cfg, Index dim) {
  std::vector<Index> orders;
  if (cfg.has("observables.top_sums")) {
    for (long n : cfg.get_ints("observables.top_sums")) {
      if (n < 1) throw Error(ErrorKind::InvalidParameters, "observables.top_sums entries must be >= 1");
      orders.push_back(n);
    }
  } else {
    orders = {1, 2};
  }
  if (dim > 0) {
    for (Index n : orders)
      if (n > dim) throw Error(ErrorKind::InvalidParameters, "top-sum order exceeds the model dimension");
  }
  return orders;
}

ComplexMatrix weights_matrix(const std::vector<double>& w, Index dim) {
  if (static_cast<Index>(w.size()) > dim) throw Error(ErrorKind::DimensionMismatch, "init.weights longer than the dimension");
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (std::size_t k = 0; k < w.size(); ++k) m(static_cast<Index>(k), static_cast<Index>(k)) = w[k];
  return m;
}

DensityMatrix initial_state(const KeyValueFile& cfg, Index dim) {
  const std::string kind = cfg.get_string("init.kind", "maximally_mixed");
  if (kind == "maximally_mixed") return DensityMatrix::maximally_mixed(dim);
  if (kind == "basis") return DensityMatrix::basis_state(dim, cfg.get_int("init.index", 1) - 1);
  if (kind == "diagonal") return DensityMatrix::make(weights_matrix(cfg.get_doubles("init.weights"), dim));
  if (kind == "two_point") {
    const double g = cfg.get_double("init.gamma", 0.5);
    if (dim < 2) throw Error(ErrorKind::DimensionTooSmall, "two_point init needs dim >= 2");
    return DensityMatrix::make(weights_matrix({g, 1.0 - g}, dim));
  }
  if (kind == "pure") {
    const std::vector<double> v = cfg.get_doubles("init.vector");
    if (static_cast<Index>(v.size()) != 2 * dim) {
      throw Error(ErrorKind::DimensionMismatch, "init.vector needs 2*dim numbers (re im pairs)");
    }
    ComplexVector psi(dim);
    for (Index k = 0; k < dim; ++k) psi[k] = Complex(v[2 * k], v[2 * k + 1]);
    return DensityMatrix::pure(psi);
  }
  throw Error(ErrorKind::InvalidParameters, "unknown init.kind '" + kind +
                                                "' (expected maximally_mixed, basis, diagonal, two_point, pure)");
}

WindowState initial_window(const KeyValueFile& cfg, Index window) {
  const std::string kind = cfg.get_string("init.kind", "two_point");
  if (kind == "two_point") return WindowState::two_point(TwoPointState::make(0, cfg.get_double("init.gamma", 0.5)), window);
  if (kind == "basis") {
    const long k = cfg.get_int("init.index", 1);
    if (k < 1) throw Error(ErrorKind::InvalidParameters, "init.index must be >= 1");
    ComplexMatrix w = ComplexMatrix::Zero(1, 1);
    w(0, 0) = 1.0;
    return WindowState::make(static_cast<std::size_t>(k - 1), w, window);
  }
  if (kind == "diagonal") {
    const auto weights = cfg.get_doubles("init.weights");
    const Index size = std::max<Index>(window, static_cast<Index>(weights.size()));
    return WindowState::make(0, weights_matrix(weights, size), window);
  }
  throw Error(ErrorKind::InvalidParameters,
              "unknown init.kind '" + kind + "' for the shift model (expected two_point, basis, diagonal)");
}

std::size_t resolve_threads(const KeyValueFile& cfg, const RunOptions& options) {
  if (const char* env = std::getenv("PURLAB_THREADS"); env != nullptr && *env != '\0') {
    const double v = parse_number(env, "PURLAB_THREADS");
    if (!(v >= 1.0) || v != std::floor(v)) throw Error(ErrorKind::ConfigError, "PURLAB_THREADS must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  if (options.threads) return std::max<std::size_t>(*options.threads, 1);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return get_count(cfg, "run.threads", static_cast<long>(hw), 1);
}

std::string fmt(double x) { return format_double(x); }

// ---------------------------------------------------------------------------

struct Context {
  const KeyValueFile& cfg;
  std::string experiment;
  fs::path out_dir;
  std::size_t threads = 1;
  std::vector<OutputFile> outputs;
  std::vector<CheckResult> checks;
  bool dry_run = false;

  void write(const std::string& name, const std::string& content) {
    if (dry_run) return;
    const fs::path path = out_dir / name;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    os << content;
    os.close();
    if (!os) throw Error(ErrorKind::IoError, "failed writing " + path.string());
    outputs.push_back({name, sha256_hex(content), content.size()});
  }

  void check(std::string name, bool pass, std::string detail) {
    checks.push_back({std::move(name), pass, std::move(detail)});
  }

  EnsembleOptions ensemble(std::size_t trajectories) const {
    EnsembleOptions o;
    o.trajectories = trajectories;
    o.base_seed = cfg.get_u64("run.seed", 0);
    o.threads = threads;
    o.purify_threshold = get_positive(cfg, "run.purify_threshold", 1e-6);
    return o;
  }
};

template <typename F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

void write_terminal_csv(std::ostream& out, const EnsembleSummary& s) {
  CsvWriter csv(out);
  std::vector<std::string> cols{"trajectory_id", "g"};
  for (Index k : s.top_sum_orders) cols.push_back("S" + std::to_string(k));
  csv.header(cols);
  for (const auto& t : s.terminal) {
    csv.field(static_cast<unsigned long long>(t.trajectory_id)).field(t.g);
    for (double v : t.top_sums) csv.field(v);
    csv.end_row();
  }
}

// ---------------------------------------------------------------------------
// Experiments

void run_counterexample(Context& ctx) {
  const ModelSpec spec = config_model(ctx.cfg);
  const WeightedShiftModel& model = require_shift(spec, ctx.experiment);
  const WindowState init = initial_window(ctx.cfg, spec.window);
  const std::size_t horizon = get_count(ctx.cfg, "run.horizon", 200, 1);
  const std::size_t m = get_count(ctx.cfg, "run.trajectories", 1000, 1);
  if (ctx.dry_run) return;
  if (init.offset != 0 || (init.window.bottomRightCorner(init.size() - 2, init.size() - 2).norm() > 0.0)) {
    throw Error(ErrorKind::InvalidParameters, "counterexample needs a two-point initial state on e_1, e_2");
  }
  Observables obs;
  obs.top_sums = config_orders(ctx.cfg, 0);
  const EnsembleSummary summary = run_ensemble(window_runner(init, model, horizon, obs), ctx.ensemble(m));
  const double gd0 = init.window(0, 0).real() * init.window(1, 1).real();
  const auto rows = bound_check(summary, model, gd0);

  ctx.write("ensemble.csv", render([&](std::ostream& os) { write_ensemble_csv(os, summary); }));
  ctx.write("bound_check.csv", render([&](std::ostream& os) { write_bound_check_csv(os, rows); }));

  const std::size_t failed = static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const BoundCheckRow& r) { return !r.pass; }));
  ctx.check("bound_check", failed == 0, std::to_string(rows.size() - failed) + "/" + std::to_string(rows.size()) + " steps pass");
  double min_g = 1.0;
  for (const auto& st : summary.steps) min_g = std::min(min_g, st.min_g);
  const double floor = 2.0 * product_lower_bound(model, gd0, 0).liminf;
  ctx.check("entropy_floor", min_g >= floor - 1e-12, "min g = " + fmt(min_g) + ", floor 2*liminf = " + fmt(floor));
}

void run_purifying(Context& ctx) {
  const ModelSpec spec = config_model(ctx.cfg);
  const KrausFamily& family = require_family(spec, ctx.experiment);
  const DensityMatrix rho0 = initial_state(ctx.cfg, family.dim());
  const std::size_t horizon = get_count(ctx.cfg, "run.horizon", 500, 0);
  const std::size_t m = get_count(ctx.cfg, "run.trajectories", 1000, 1);
  const double min_fraction = ctx.cfg.get_double("check.min_purified", 0.99);
  Observables obs;
  obs.top_sums = config_orders(ctx.cfg, family.dim());
  if (ctx.dry_run) return;
  const EnsembleSummary summary = run_ensemble(rho0, family, horizon, ctx.ensemble(m), obs);
  ctx.write("ensemble.csv", render([&](std::ostream& os) { write_ensemble_csv(os, summary); }));
  ctx.write("terminal.csv", render([&](std::ostream& os) { write_terminal_csv(os, summary); }));
  ctx.check("purified_fraction", summary.purified_fraction >= min_fraction,
            "fraction with g_T < " + fmt(summary.purify_threshold) + " is " + fmt(summary.purified_fraction) +
                " (required " + fmt(min_fraction) + ")");
}

Projection config_projection(const KeyValueFile& cfg, Index dim) {
  const std::string kind = cfg.get_string("dark.projection", "identity");
  if (kind == "identity") return Projection::identity(dim);
  if (kind == "coordinate") return Projection::coordinate(dim, cfg.get_int("dark.rank"));
  throw Error(ErrorKind::InvalidParameters, "dark.projection must be identity or coordinate");
}

bool verdict_matches(const std::string& expect, Verdict v) {
  return expect == "any" || expect == to_string(v);
}

void require_expectation(const std::string& key, const std::string& expect) {
  if (expect != "any" && expect != "dark" && expect != "not-dark" && expect != "inconclusive") {
    throw Error(ErrorKind::InvalidParameters, key + " must be any, dark, not-dark or inconclusive");
  }
}

void run_dark(Context& ctx) {
  const ModelSpec spec = config_model(ctx.cfg);
  const KrausFamily& family = require_family(spec, ctx.experiment);
  const Projection p = config_projection(ctx.cfg, family.dim());
  const std::size_t max_len = get_count(ctx.cfg, "dark.max_len", 6, 1);
  const double tol = get_positive(ctx.cfg, "dark.tol", 1e-9);
  const std::string expect = ctx.cfg.get_string("dark.expect", "any");
  require_expectation("dark.expect", expect);
  const bool do_search = ctx.cfg.get_bool("dark.search", true);
  DarkSearchOptions so;
  so.restarts = get_count(ctx.cfg, "dark.restarts", 20, 1);
  so.iterations = get_count(ctx.cfg, "dark.iterations", 200, 1);
  so.seed = ctx.cfg.get_u64("run.seed", 0);
  so.max_len = max_len;
  const std::size_t horizon = get_count(ctx.cfg, "run.horizon", 100, 0);
  const std::size_t m = get_count(ctx.cfg, "run.trajectories", 100, 0);
  const DensityMatrix rho0 = initial_state(ctx.cfg, family.dim());
  if (ctx.dry_run) return;

  const WordSpanBasis span = word_span(family, max_len);
  const DarkReport verified = verify_dark(p, span, tol);
  std::optional<DarkReport> searched;
  if (do_search && family.dim() >= 2) searched = search_dark_pair(span.generators, span.stabilized, span.length, so);

  ctx.write("dark.csv", render([&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"analysis", "residual", "word_length", "span_dimension", "stabilized", "verdict"});
    auto row = [&](const std::string& name, const DarkReport& r) {
      csv.field(name)
          .field(r.residual)
          .field(static_cast<unsigned long long>(r.word_length))
          .field(static_cast<unsigned long long>(span.dimension()))
          .field(span.stabilized)
          .field(std::string(to_string(r.verdict)));
      csv.end_row();
    };
    row("verify", verified);
    if (searched) row("search", *searched);
  }));
  ctx.check("verify_verdict", verdict_matches(expect, verified.verdict),
            "verdict " + std::string(to_string(verified.verdict)) + ", residual " + fmt(verified.residual) +
                ", expected " + expect);

  if (m > 0) {
    Observables obs;
    obs.top_sums = {1};
    const EnsembleSummary summary = run_ensemble(rho0, family, horizon, ctx.ensemble(m), obs);
    ctx.write("ensemble.csv", render([&](std::ostream& os) { write_ensemble_csv(os, summary); }));
    if (expect == "dark") {
      const double g0 = linear_entropy(rho0);
      double dev = 0.0;
      for (const auto& st : summary.steps) dev = std::max({dev, std::abs(st.max_g - g0), std::abs(st.min_g - g0)});
      const double ctol = get_positive(ctx.cfg, "dark.conservation_tol", 1e-12);
      ctx.check("entropy_conservation", dev <= ctol, "max |g_n - g_0| = " + fmt(dev));
    }
  }
}

void run_asymptotic_dark(Context& ctx) {
  const ModelSpec spec = config_model(ctx.cfg);
  const std::size_t horizon = get_count(ctx.cfg, "run.horizon", 200, 0);
  const std::size_t max_len = get_count(ctx.cfg, "dark.max_len", 1, 1);
  const std::uint64_t seed = ctx.cfg.get_u64("run.seed", 0);
  Observables obs;
  obs.projectors = true;
  RngStream stream(seed, 0);

  if (spec.shift && !spec.family) {
    const WeightedShiftModel& model = *spec.shift;
    const WindowState init = initial_window(ctx.cfg, spec.window);
    obs.top_sums = config_orders(ctx.cfg, 0);
    if (ctx.dry_run) return;
    const TrajectoryRecord rec = run_window_trajectory(init, model, horizon, stream, obs, 0);
    const auto rows = asymptotic_dark_residuals(
        rec, 2, [&](const Word& w, std::size_t offset, Index size) { return window_word_operator(model, w, offset, size); },
        max_len);
    ctx.write("trajectory.csv", render([&](std::ostream& os) { write_trajectory_csv(os, std::span(&rec, 1)); }));
    ctx.write("residuals.csv", render([&](std::ostream& os) { write_residual_csv(os, rows); }));

    const bool two_point = ctx.cfg.get_string("init.kind", "two_point") == "two_point" && init.offset == 0;
    if (model.is_parametric() && two_point) {
      double formula_dev = 0.0;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      const double z = model.z();
      for (const auto& r : rows) {
        if (r.word != Word{{0}}) continue;
        const auto n = static_cast<long>(r.n);
        const double expected = (model.alpha(n + 2) - model.alpha(n + 1)) / 2.0;
        formula_dev = std::max(formula_dev, std::abs(r.residual - expected));
        const double scaled = r.residual * (static_cast<double>(n) + z + 1.0) * (static_cast<double>(n) + z + 2.0);
        lo = std::min(lo, scaled);
        hi = std::max(hi, scaled);
      }
      ctx.check("residual_formula", formula_dev <= 1e-12, "max |residual - (alpha(n+2)-alpha(n+1))/2| = " + fmt(formula_dev));
      ctx.check("residual_decay", hi - lo <= 1e-9, "spread of residual*(n+z+1)(n+z+2) = " + fmt(hi - lo));
    }
    return;
  }
  const KrausFamily& family = require_family(spec, ctx.experiment);
  const DensityMatrix rho0 = initial_state(ctx.cfg, family.dim());
  obs.top_sums = config_orders(ctx.cfg, family.dim());
  if (family.dim() < 2) throw Error(ErrorKind::DimensionTooSmall, "asymptotic-dark needs dim >= 2");
  if (ctx.dry_run) return;
  const TrajectoryRecord rec = run_trajectory(rho0, family, horizon, stream, obs, 0);
  const auto rows = asymptotic_dark_residuals(rec, family, max_len);
  ctx.write("trajectory.csv", render([&](std::ostream& os) { write_trajectory_csv(os, std::span(&rec, 1)); }));
  ctx.write("residuals.csv", render([&](std::ostream& os) { write_residual_csv(os, rows); }));
}

void run_martingale_audit(Context& ctx) {
  RandomAuditOptions ro;
  ro.instances = get_count(ctx.cfg, "audit.instances", 1000, 0);
  ro.triangular_instances = get_count(ctx.cfg, "audit.triangular", 200, 0);
  ro.max_dim = static_cast<Index>(get_count(ctx.cfg, "audit.max_dim", 8, 2));
  ro.max_outcomes = get_count(ctx.cfg, "audit.max_outcomes", 3, 1);
  ro.max_p = get_count(ctx.cfg, "audit.max_p", 3, 1);
  ro.seed = ctx.cfg.get_u64("run.seed", 0);

  std::optional<ModelSpec> spec;
  if (has_model(ctx.cfg)) spec = config_model(ctx.cfg);
  const KrausFamily* family = spec ? &require_family(*spec, ctx.experiment) : nullptr;
  std::optional<DensityMatrix> rho0;
  if (family) rho0 = initial_state(ctx.cfg, family->dim());
  const std::size_t audit_m = get_count(ctx.cfg, "audit.trajectories", 50, 0);
  const std::size_t audit_t = get_count(ctx.cfg, "audit.horizon", 20, 2);
  const std::size_t deco_p = get_count(ctx.cfg, "audit.decomposition_p", 2, 1);
  const std::size_t horizon = get_count(ctx.cfg, "run.horizon", 100, 0);
  const std::size_t m = get_count(ctx.cfg, "run.trajectories", 1000, 0);
  std::vector<double> gammas{0.5, 0.9};
  if (ctx.cfg.has("audit.concentration_gammas")) gammas = ctx.cfg.get_doubles("audit.concentration_gammas");
  const std::vector<Index> orders = config_orders(ctx.cfg, family ? family->dim() : 0);
  if (ctx.dry_run) return;

  std::vector<AuditResult> rows = random_martingale_audit(ro);
  if (family) {
    Observables obs;
    obs.top_sums = orders;
    obs.snapshot_stride = 1;
    EnsembleOptions eo = ctx.ensemble(audit_m);
    eo.keep_records = true;
    if (audit_m > 0) {
      const EnsembleSummary path = run_ensemble(*rho0, *family, audit_t, eo, obs);
      for (const auto& rec : path.records) {
        for (std::size_t p = 1; p <= deco_p; ++p) {
          const double defect = decomposition_audit(rec, *family, p);
          rows.push_back({"decomposition_p" + std::to_string(p), rec.trajectory_id, defect, 1e-9, defect <= 1e-9});
        }
        auto per_step = trajectory_audit(rec, *family, std::min<std::size_t>(ro.max_p, 2));
        for (auto& r : per_step) {
          r.quantity = "path_" + r.quantity;
          r.instance_id = rec.trajectory_id * (audit_t + 1) + r.instance_id;
        }
        rows.insert(rows.end(), per_step.begin(), per_step.end());
      }
    }
    if (m > 0) {
      Observables cobs;
      cobs.top_sums = orders;
      EnsembleOptions co = ctx.ensemble(m);
      const EnsembleSummary summary = run_ensemble(*rho0, *family, horizon, co, cobs);
      std::uint64_t id = 0;
      for (Index order : orders) {
        for (double gamma : gammas) {
          const ConcentrationResult c = concentration_check(summary, *rho0, order, gamma, horizon);
          const double margin = c.empirical - (c.bound + 3.0 * c.standard_error);
          rows.push_back({"concentration_N" + std::to_string(order) + "_gamma" + fmt(gamma), id++, margin, 0.0,
                          !c.violated});
        }
      }
    }
  }
  ctx.write("audit.csv", render([&](std::ostream& os) { write_audit_csv(os, rows); }));
  const std::size_t failed =
      static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const AuditResult& r) { return !r.pass; }));
  ctx.check("audit", failed == 0, std::to_string(rows.size() - failed) + "/" + std::to_string(rows.size()) + " rows pass");
}

void run_kcond_audit(Context& ctx) {
  const ModelSpec spec = config_model(ctx.cfg);
  const KrausFamily& family = require_family(spec, ctx.experiment);
  std::vector<Index> ranks = spec.flag_ranks;
  if (ctx.cfg.has("kcond.flags")) {
    ranks.clear();
    for (long r : ctx.cfg.get_ints("kcond.flags")) ranks.push_back(r);
  }
  if (ranks.empty()) throw Error(ErrorKind::InvalidFlags, "kcond-audit needs flag ranks (model.flags or kcond.flags)");
  const FlagProjections flags = FlagProjections::coordinate(family.dim(), ranks);
  const std::string expect = ctx.cfg.get_string("kcond.expect", "holds");
  if (expect != "holds" && expect != "fails" && expect != "any") {
    throw Error(ErrorKind::InvalidParameters, "kcond.expect must be holds, fails or any");
  }
  const DensityMatrix rho0 = initial_state(ctx.cfg, family.dim());
  const std::size_t states = get_count(ctx.cfg, "kcond.random_states", 20, 0);
  if (ctx.dry_run) return;

  const KcondReport kc = check_kcond(family, flags);
  ctx.write("kcond.csv", render([&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"level", "rank", "outcome", "residual", "heisenberg_gap"});
    for (std::size_t m = 0; m < flags.size(); ++m) {
      const double hg = heisenberg_gap(family, flags.levels()[m]);
      for (std::size_t i = 0; i < family.size(); ++i) {
        csv.field(static_cast<unsigned long long>(m + 1))
            .field(static_cast<long long>(flags.levels()[m].rank()))
            .field(static_cast<unsigned long long>(i + 1))
            .field(kc.residuals[m][i])
            .field(hg);
        csv.end_row();
      }
    }
  }));

  std::vector<AuditResult> rows = flag_audit(family, flags, rho0, 0);
  const std::uint64_t seed = ctx.cfg.get_u64("run.seed", 0);
  for (std::size_t t = 0; t < states; ++t) {
    RngStream rng(seed, t);
    const DensityMatrix rho = random_density(rng, family.dim(), uniform_int(rng, 1, family.dim()));
    const auto more = flag_audit(family, flags, rho, t + 1);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  ctx.write("audit.csv", render([&](std::ostream& os) { write_audit_csv(os, rows); }));

  if (expect != "any") {
    ctx.check("kcond", kc.holds == (expect == "holds"),
              std::string("criterion ") + (kc.holds ? "holds" : "fails") + ", max residual " + fmt(kc.max_residual));
  }
  bool agree = true;
  bool sign = true;
  for (const auto& r : rows) {
    if (r.quantity.rfind("flag_agreement", 0) == 0) agree = agree && r.pass;
    if (r.quantity.rfind("flag_sign", 0) == 0 || r.quantity.rfind("heisenberg_gap", 0) == 0) sign = sign && r.pass;
  }
  ctx.check("flag_agreement", agree, "direct and Heisenberg forms agree");
  if (kc.holds) ctx.check("flag_submartingale", sign, "flag gaps nonnegative at every level");
}

void run_darkscan(Context& ctx) {
  const ModelSpec spec = config_model(ctx.cfg);
  if (spec.family) {
    const KrausFamily& family = *spec.family;
    DarkSearchOptions so;
    so.restarts = get_count(ctx.cfg, "dark.restarts", 50, 1);
    so.iterations = get_count(ctx.cfg, "dark.iterations", 200, 1);
    so.tol = get_positive(ctx.cfg, "dark.tol", 1e-8);
    so.floor = get_positive(ctx.cfg, "dark.floor", 1e-3);
    so.seed = ctx.cfg.get_u64("run.seed", 0);
    so.max_len = get_count(ctx.cfg, "dark.max_len", 6, 1);
    const std::string expect = ctx.cfg.get_string("dark.expect", "any");
    require_expectation("dark.expect", expect);
    if (family.dim() < 2) throw Error(ErrorKind::DimensionTooSmall, "darkscan needs dim >= 2");
    if (ctx.dry_run) return;
    const DarkReport r = search_dark_pair(family, so);
    ctx.write("darkscan.csv", render([&](std::ostream& os) {
      CsvWriter csv(os);
      csv.header({"restarts", "residual", "word_length", "verdict"});
      csv.field(static_cast<unsigned long long>(r.restarts))
          .field(r.residual)
          .field(static_cast<unsigned long long>(r.word_length))
          .field(std::string(to_string(r.verdict)));
      csv.end_row();
    }));
    ctx.check("search_verdict", verdict_matches(expect, r.verdict),
              "verdict " + std::string(to_string(r.verdict)) + ", residual " + fmt(r.residual) + ", expected " + expect);
    return;
  }

  const WeightedShiftModel& model = require_shift(spec, ctx.experiment);
  const std::size_t n_max = get_count(ctx.cfg, "darkscan.cauchy_max", 6, 1);
  const std::size_t k_max = get_count(ctx.cfg, "darkscan.kmax", 200, 1);
  const std::size_t max_len = get_count(ctx.cfg, "darkscan.max_len", 3, 1);
  if (n_max > 12) throw Error(ErrorKind::InvalidParameters, "darkscan.cauchy_max must be <= 12");
  if (ctx.dry_run) return;

  std::vector<Word> words;
  for (std::size_t len = 1; len <= max_len; ++len)
    for (auto& w : enumerate_words(2, len)) words.push_back(std::move(w));
  bool positive = true;
  double tail = 0.0;
  ctx.write("window_residuals.csv", render([&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"k", "word", "residual"});
    for (std::size_t k = 1; k <= k_max; ++k) {
      // some longer words have beta(k+1) == beta(k) exactly, so positivity is per window
      double best = 0.0;
      for (const auto& w : words) {
        const double r = window_word_residual(model, static_cast<long>(k), w);
        if (w.length() == 1 && !(r > 0.0)) positive = false;
        best = std::max(best, r);
        csv.field(static_cast<unsigned long long>(k)).field(w.to_string()).field(r);
        csv.end_row();
      }
      if (!(best > 0.0)) positive = false;
      if (k == k_max) tail = best;
    }
  }));
  if (model.is_parametric()) {
    ctx.check("window_residual_positive", positive, "single-letter and per-window max residuals strictly positive for k <= " + std::to_string(k_max));
    std::vector<CauchyDiagnostic> diag;
    for (std::size_t n = 1; n <= n_max; ++n) diag.push_back(cauchy_diagnostic(static_cast<Index>(n), model.z()));
    ctx.write("cauchy.csv", render([&](std::ostream& os) {
      CsvWriter csv(os);
      csv.header({"N", "z", "sigma_min", "sigma_max", "condition", "ill_conditioned"});
      for (const auto& d : diag) {
        csv.field(static_cast<long long>(d.n)).field(d.z).field(d.sigma_min).field(d.sigma_max).field(d.condition).field(d.ill_conditioned);
        csv.end_row();
      }
    }));
    const bool all_positive =
        std::all_of(diag.begin(), diag.end(), [](const CauchyDiagnostic& d) { return d.sigma_min > 0.0; });
    ctx.check("cauchy_sigma_min_positive", all_positive, "sigma_min > 0 for N <= " + std::to_string(n_max));
  }
  ctx.check("window_residual_tail", true, "max residual at k = " + std::to_string(k_max) + " is " + fmt(tail));
}

void run_cross_validate(Context& ctx) {
  const ModelSpec spec = config_model(ctx.cfg);
  const WeightedShiftModel& model = require_shift(spec, ctx.experiment);
  const std::size_t horizon = get_count(ctx.cfg, "run.horizon", 200, 1);
  const std::size_t m = get_count(ctx.cfg, "run.trajectories", 20, 1);
  const Index truncation = static_cast<Index>(get_count(ctx.cfg, "crossval.truncation", 256, 3));
  const double tol = get_positive(ctx.cfg, "crossval.tol", 1e-10);
  const double gamma0 = ctx.cfg.get_double("init.gamma", 0.5);
  TwoPointState::make(0, gamma0);
  const std::uint64_t seed = ctx.cfg.get_u64("run.seed", 0);
  if (ctx.dry_run) return;

  std::vector<CrossValidation> runs(m);
  std::vector<std::uint64_t> seeds(m);
  for (std::size_t t = 0; t < m; ++t) {
    seeds[t] = RngStream(seed, t).next_u64();
    runs[t] = cross_validate(model, gamma0, horizon, seeds[t], truncation);
  }
  double worst = 0.0;
  ctx.write("crossval.csv", render([&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"sequence", "seed", "truncation", "max_deviation", "pass"});
    for (std::size_t t = 0; t < m; ++t) {
      worst = std::max(worst, runs[t].max_deviation);
      csv.field(static_cast<unsigned long long>(t))
          .field(static_cast<unsigned long long>(seeds[t]))
          .field(static_cast<long long>(runs[t].truncation))
          .field(runs[t].max_deviation)
          .field(runs[t].max_deviation <= tol);
      csv.end_row();
    }
  }));
  ctx.check("engines_agree", worst <= tol, "max deviation " + fmt(worst) + " over " + std::to_string(m) + " sequences");
}

struct Entry {
  ExperimentInfo info;
  std::function<void(Context&)> run;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table{
      {{"counterexample", "shift-model ensemble from a two-point state with the product lower bound check",
        {"model.kind = shift", "model.c", "model.z"}},
       run_counterexample},
      {{"purifying", "ensemble purification fraction of a finite model", {"model.kind | model.file"}}, run_purifying},
      {{"dark", "exact dark-subspace verification, pair search and entropy conservation",
        {"model.kind | model.file"}},
       run_dark},
      {{"asymptotic-dark", "per-step word residuals of the top-2 projector along one trajectory",
        {"model.kind | model.file"}},
       run_asymptotic_dark},
      {{"martingale-audit", "random-instance and pathwise martingale inequality audits", {}}, run_martingale_audit},
      {{"kcond-audit", "triangularity criterion and flag submartingale gaps",
        {"model.kind | model.file", "model.flags | kcond.flags"}},
       run_kcond_audit},
      {{"darkscan", "dark-pair search (finite model) or window residual and Cauchy scan (shift model)",
        {"model.kind | model.file"}},
       run_darkscan},
      {{"cross-validate", "closed form vs window vs truncated matrix engines on shared outcome sequences",
        {"model.kind = shift", "model.c", "model.z"}},
       run_cross_validate},
  };
  return table;
}

const Entry& find_entry(const std::string& name) {
  for (const auto& e : entries())
    if (e.info.name == name) return e;
  std::string valid;
  for (const auto& e : entries()) valid += (valid.empty() ? "" : ", ") + e.info.name;
  throw Error(ErrorKind::InvalidParameters, "unknown experiment '" + name + "' (valid: " + valid + ")");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_manifest(const Context& ctx) {
  nlohmann::ordered_json j;
  j["experiment"] = ctx.experiment;
  j["tool"] = "purlab";
  j["version"] = kVersion;
  j["timestamp"] = utc_timestamp();
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : ctx.cfg.entries()) config[k] = v;
  j["config"] = config;
  nlohmann::ordered_json outputs = nlohmann::ordered_json::array();
  for (const auto& o : ctx.outputs) outputs.push_back({{"file", o.name}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  j["outputs"] = outputs;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& c : ctx.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    all = all && c.pass;
  }
  j["checks"] = checks;
  j["status"] = all ? "pass" : "fail";
  const fs::path path = ctx.out_dir / "manifest.json";
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  os << j.dump(2) << "\n";
  if (!os) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

int report_error(const Error& e, std::ostream& err) {
  err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
  return is_validation_error(e.kind()) ? kExitValidation : kExitIo;
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> infos = [] {
    std::vector<ExperimentInfo> out;
    for (const auto& e : entries()) out.push_back(e.info);
    return out;
  }();
  return infos;
}

void list_experiments(std::ostream& out) {
  for (const auto& info : experiment_registry()) {
    out << info.name << "\n  " << info.description << "\n  required: experiment";
    for (const auto& k : info.required_keys) out << ", " << k;
    out << "\n";
  }
}

bool RunReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoError, "SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

RunReport execute(const KeyValueFile& config, const RunOptions& options) {
  const std::string name = config.get_string("experiment");
  const Entry& entry = find_entry(name);
  Context ctx{config, name, {}, resolve_threads(config, options), {}, {}, false};
  if (options.output_dir) {
    ctx.out_dir = *options.output_dir;
  } else {
    ctx.out_dir = config.get_string("output.dir", "purlab-out/" + name);
  }
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create output directory " + ctx.out_dir.string() + ": " + ec.message());
  entry.run(ctx);
  write_manifest(ctx);
  return RunReport{name, ctx.out_dir, ctx.outputs, ctx.checks};
}

void validate(const KeyValueFile& config) {
  const std::string name = config.get_string("experiment");
  const Entry& entry = find_entry(name);
  Context ctx{config, name, {}, 1, {}, {}, true};
  entry.run(ctx);
}

int run_config(const KeyValueFile& config, const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const RunReport report = execute(config, options);
    for (const auto& c : report.checks) out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    out << "outputs written to " << report.output_dir.string() << "\n";
    return report.all_pass() ? kExitOk : kExitCheckFailed;
  } catch (const Error& e) {
    return report_error(e, err);
  } catch (const fs::filesystem_error& e) {
    err << "error: IoError: " << e.what() << "\n";
    return kExitIo;
  }
}

int run_config_file(const fs::path& path, const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    return run_config(KeyValueFile::load(path), options, out, err);
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

int validate_config_file(const fs::path& path, std::ostream& out, std::ostream& err) {
  try {
    validate(KeyValueFile::load(path));
    out << path.string() << ": ok\n";
    return kExitOk;
  } catch (const Error& e) {
    return report_error(e, err);
  } catch (const fs::filesystem_error& e) {
    err << "error: IoError: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace purlab
