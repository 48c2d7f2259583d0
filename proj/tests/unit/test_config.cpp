// Copyright purlab contributors
// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "purlab/csv.hpp"
#include "purlab/experiments.hpp"
#include "purlab/keyvalue.hpp"
#include "purlab/model_file.hpp"
#include "test_util.hpp"

namespace purlab {
namespace {

namespace fs = std::filesystem;
using testing::kind_of;

KeyValueFile kv(const std::string& text) {
  std::istringstream in(text);
  return KeyValueFile::parse(in, "<test>");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("purlab-unit-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

TEST(KeyValue, ParsesCommentsAndWhitespace) {
  const KeyValueFile f = kv("# header\n  a.b = 1.5  # trailing\n\nname=hello world\nlist = 1 2 3\n");
  EXPECT_EQ(f.get_double("a.b"), 1.5);
  EXPECT_EQ(f.get_string("name"), "hello world");
  EXPECT_EQ(f.get_ints("list"), (std::vector<long>{1, 2, 3}));
  EXPECT_EQ(f.get_int("missing", 7), 7);
  EXPECT_FALSE(f.has("missing"));
  EXPECT_EQ(f.entries().size(), 3u);
}

TEST(KeyValue, SqrtTokens) {
  const KeyValueFile f = kv("v = sqrt(0.25) -sqrt(4) 0.5\n");
  EXPECT_EQ(f.get_doubles("v"), (std::vector<double>{0.5, -2.0, 0.5}));
  EXPECT_EQ(kind_of([] { kv("v = sqrt(-1)\n").get_doubles("v"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { kv("v = sqrt(2\n").get_doubles("v"); }), ErrorKind::ConfigError);
}

TEST(KeyValue, Errors) {
  EXPECT_EQ(kind_of([] { kv("a = 1\na = 2\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { kv("no equals sign\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { kv("bad key! = 1\n"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { kv("a = x\n").get_double("a"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { kv("a = 1.5\n").get_int("a"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { kv("a = -1\n").get_u64("a", 0); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { kv("a = maybe\n").get_bool("a", false); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { kv("").get_string("a"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { KeyValueFile::load("/nonexistent/purlab.cfg"); }), ErrorKind::IoError);
  EXPECT_FALSE(is_validation_error(ErrorKind::ConfigError));
  EXPECT_FALSE(is_validation_error(ErrorKind::IoError));
  EXPECT_TRUE(is_validation_error(ErrorKind::InvalidParameters));
}

TEST(KeyValue, SubtreeAndBaseDir) {
  const fs::path dir = scratch("kv");
  {
    std::ofstream os(dir / "a.cfg");
    os << "model.kind = shift\nmodel.c = 0.5\nrun.seed = 3\nflag = true\n";
  }
  const KeyValueFile f = KeyValueFile::load(dir / "a.cfg");
  EXPECT_EQ(f.base_dir(), dir);
  const KeyValueFile m = f.subtree("model");
  EXPECT_EQ(m.entries().size(), 2u);
  EXPECT_EQ(m.get_string("kind"), "shift");
  EXPECT_EQ(f.get_u64("run.seed", 0), 3u);
  EXPECT_TRUE(f.get_bool("flag", false));
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(0.275), "0.275");
  EXPECT_EQ(format_double(1e-10), "1e-10");
  EXPECT_EQ(format_double(3.0), "3");
  RngStream rng(70, 0);
  for (int t = 0; t < 1000; ++t) {
    const double x = (rng.uniform() - 0.5) * std::pow(10.0, uniform_int(rng, -20, 20));
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(Sha256, KnownAnswers) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ModelFile, Explicit) {
  const ModelSpec spec = parse_model(kv("kind = explicit\ndim = 2\noperators = 2\n"
                                        "op.1 = sqrt(0.3) 0 0 0 0 0 sqrt(0.7) 0\n"
                                        "op.2 = sqrt(0.7) 0 0 0 0 0 sqrt(0.3) 0\n"));
  ASSERT_TRUE(spec.family.has_value());
  EXPECT_EQ(spec.kind, ModelKind::Explicit);
  EXPECT_LE((spec.family->op(0) - testing::diag_qubit().op(0)).norm(), 1e-15);
  EXPECT_EQ(kind_of([] { parse_model(kv("kind = explicit\ndim = 2\noperators = 1\nop.1 = 1 0 0 0 0 0 1\n")); }),
            ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { parse_model(kv("kind = explicit\ndim = 1\noperators = 1\nop.1 = 0.5 0\n")); }),
            ErrorKind::NormalizationDefect);
  EXPECT_EQ(kind_of([] { parse_model(kv("kind = nonsense\n")); }), ErrorKind::InvalidParameters);
}

TEST(ModelFile, ExplicitRoundTrip) {
  RngStream rng(71, 0);
  const KrausFamily f = random_kraus_family(rng, 3, 2);
  const ModelSpec spec = parse_model(kv(format_explicit_model(f)));
  for (std::size_t i = 0; i < 2; ++i) EXPECT_TRUE((spec.family->op(i).array() == f.op(i).array()).all());
}

TEST(ModelFile, ShiftAndTriangular) {
  const ModelSpec sh = parse_model(kv("kind = shift\nc = 0.5\nz = 3\nwindow = 4\n"));
  ASSERT_TRUE(sh.shift.has_value());
  EXPECT_FALSE(sh.family.has_value());
  EXPECT_EQ(sh.window, 4);
  EXPECT_EQ(sh.shift->alpha(1), 0.25);
  const ModelSpec tr = parse_model(kv("kind = shift\nc = 0.5\nz = 3\ntruncate = 6\n"));
  ASSERT_TRUE(tr.family.has_value());
  EXPECT_EQ(tr.family->dim(), 6);
  const ModelSpec table = parse_model(kv("kind = shift\nalpha = 0.2 0.3\n"));
  EXPECT_FALSE(table.shift->is_parametric());
  EXPECT_EQ(kind_of([] { parse_model(kv("kind = shift\nc = 1.2\nz = 3\n")); }), ErrorKind::InvalidParameters);
  EXPECT_EQ(kind_of([] { parse_model(kv("kind = shift\nc = 0.5\nz = 3\nwindow = 1\n")); }),
            ErrorKind::InvalidParameters);

  const ModelSpec tri = parse_model(kv("kind = triangular\ndim = 2\noperators = 2\nflags = 1\n"
                                       "op.1 = 0.6 0 0.3 0 0.2 0 0.5 0\n"
                                       "op.2 = 0.1 0 0.4 0 0.7 0 0.2 0\n"));
  EXPECT_EQ(tri.flag_ranks, (std::vector<Index>{1}));
  EXPECT_TRUE(check_kcond(*tri.family, FlagProjections::coordinate(2, {1})).holds);
}

TEST(Registry, EightExperimentsListed) {
  const auto& reg = experiment_registry();
  ASSERT_EQ(reg.size(), 8u);
  std::vector<std::string> names;
  for (const auto& e : reg) names.push_back(e.name);
  EXPECT_EQ(names, (std::vector<std::string>{"counterexample", "purifying", "dark", "asymptotic-dark",
                                             "martingale-audit", "kcond-audit", "darkscan", "cross-validate"}));
  std::ostringstream os;
  list_experiments(os);
  for (const auto& n : names) EXPECT_NE(os.str().find(n), std::string::npos);
}

struct ExperimentCase {
  const char* name;
  const char* config;
  std::vector<std::string> outputs;
};

const std::vector<ExperimentCase>& experiment_cases() {
  static const std::vector<ExperimentCase> cases{
      {"counterexample",
       "experiment = counterexample\nmodel.kind = shift\nmodel.c = 0.5\nmodel.z = 3\nrun.horizon = 50\n"
       "run.trajectories = 40\n",
       {"ensemble.csv", "bound_check.csv"}},
      {"purifying",
       "experiment = purifying\nmodel.kind = explicit\nmodel.dim = 2\nmodel.operators = 2\n"
       "model.op.1 = sqrt(0.3) 0 0 0 0 0 sqrt(0.7) 0\nmodel.op.2 = sqrt(0.7) 0 0 0 0 0 sqrt(0.3) 0\n"
       "run.horizon = 300\nrun.trajectories = 100\ncheck.min_purified = 0.9\n",
       {"ensemble.csv", "terminal.csv"}},
      {"dark",
       "experiment = dark\nmodel.kind = explicit\nmodel.dim = 2\nmodel.operators = 2\n"
       "model.op.1 = sqrt(0.5) 0 0 0 0 0 sqrt(0.5) 0\nmodel.op.2 = 0 0 sqrt(0.5) 0 sqrt(0.5) 0 0 0\n"
       "dark.expect = dark\nrun.horizon = 30\nrun.trajectories = 10\n",
       {"dark.csv", "ensemble.csv"}},
      {"asymptotic-dark",
       "experiment = asymptotic-dark\nmodel.kind = shift\nmodel.c = 0.5\nmodel.z = 3\nrun.horizon = 60\n",
       {"trajectory.csv", "residuals.csv"}},
      {"martingale-audit",
       "experiment = martingale-audit\naudit.instances = 10\naudit.triangular = 5\naudit.max_p = 2\n"
       "model.kind = explicit\nmodel.dim = 2\nmodel.operators = 2\n"
       "model.op.1 = sqrt(0.3) 0 0 0 0 0 sqrt(0.7) 0\nmodel.op.2 = sqrt(0.7) 0 0 0 0 0 sqrt(0.3) 0\n"
       "audit.trajectories = 3\naudit.horizon = 8\nrun.horizon = 20\nrun.trajectories = 50\n",
       {"audit.csv"}},
      {"kcond-audit",
       "experiment = kcond-audit\nmodel.kind = triangular\nmodel.dim = 2\nmodel.operators = 2\nmodel.flags = 1\n"
       "model.op.1 = 0.6 0 0.3 0 0.2 0 0.5 0\nmodel.op.2 = 0.1 0 0.4 0 0.7 0 0.2 0\nkcond.random_states = 5\n",
       {"kcond.csv", "audit.csv"}},
      {"darkscan",
       "experiment = darkscan\nmodel.kind = shift\nmodel.c = 0.5\nmodel.z = 3\ndarkscan.kmax = 50\n",
       {"window_residuals.csv", "cauchy.csv"}},
      {"cross-validate",
       "experiment = cross-validate\nmodel.kind = shift\nmodel.c = 0.5\nmodel.z = 3\nrun.horizon = 40\n"
       "run.trajectories = 3\ncrossval.truncation = 50\n",
       {"crossval.csv"}},
  };
  return cases;
}

TEST(Execute, EveryExperimentRunsAndWritesManifest) {
  for (const auto& c : experiment_cases()) {
    const fs::path out = scratch(std::string("exp-") + c.name);
    RunOptions opts;
    opts.output_dir = out;
    opts.threads = 2;
    const RunReport report = execute(kv(c.config), opts);
    EXPECT_TRUE(report.all_pass()) << c.name;
    EXPECT_FALSE(report.checks.empty()) << c.name;
    ASSERT_TRUE(fs::exists(out / "manifest.json")) << c.name;
    const auto manifest = read_json(out / "manifest.json");
    EXPECT_EQ(manifest["experiment"], c.name);
    EXPECT_EQ(manifest["status"], "pass");
    EXPECT_EQ(manifest["version"], kVersion);
    std::vector<std::string> files;
    for (const auto& o : manifest["outputs"]) {
      files.push_back(o["file"]);
      std::ifstream in(out / o["file"].get<std::string>(), std::ios::binary);
      const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      EXPECT_EQ(o["sha256"], sha256_hex(content));
      EXPECT_EQ(o["bytes"], content.size());
      EXPECT_EQ(content.find('\r'), std::string::npos);
    }
    EXPECT_EQ(files, c.outputs) << c.name;
    EXPECT_NO_THROW(validate(kv(c.config))) << c.name;
  }
}

TEST(Execute, ChecksumsIndependentOfThreads) {
  for (const auto& c : experiment_cases()) {
    std::vector<std::vector<std::string>> sums;
    for (std::size_t threads : {1u, 4u}) {
      RunOptions opts;
      opts.output_dir = scratch(std::string("thr-") + c.name + std::to_string(threads));
      opts.threads = threads;
      const RunReport r = execute(kv(c.config), opts);
      std::vector<std::string> s;
      for (const auto& o : r.outputs) s.push_back(o.sha256);
      sums.push_back(s);
    }
    EXPECT_EQ(sums[0], sums[1]) << c.name;
  }
}

TEST(Execute, EnvironmentThreadOverride) {
  const auto& c = experiment_cases().front();
  ::setenv("PURLAB_THREADS", "3", 1);
  RunOptions opts;
  opts.output_dir = scratch("env");
  const RunReport a = execute(kv(c.config), opts);
  ::setenv("PURLAB_THREADS", "zero", 1);
  EXPECT_EQ(kind_of([&] { execute(kv(c.config), opts); }), ErrorKind::ConfigError);
  ::unsetenv("PURLAB_THREADS");
  opts.threads = 1;
  const RunReport b = execute(kv(c.config), opts);
  EXPECT_EQ(a.outputs[0].sha256, b.outputs[0].sha256);
}

TEST(ExitCodes, ValidationIoAndCheckFailures) {
  const fs::path dir = scratch("exit");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream os(dir / name);
    os << text;
    return dir / name;
  };
  std::ostringstream out, err;
  RunOptions opts;
  opts.output_dir = dir / "out";

  const auto bad_c = write("bad_c.cfg", "experiment = counterexample\nmodel.kind = shift\nmodel.c = 1.2\nmodel.z = 3\n");
  EXPECT_EQ(run_config_file(bad_c, opts, out, err), kExitValidation);
  EXPECT_NE(err.str().find("InvalidParameters"), std::string::npos);

  const auto missing = write("missing.cfg", "experiment = purifying\nmodel.file = nowhere.model\n");
  EXPECT_EQ(run_config_file(missing, opts, out, err), kExitIo);
  EXPECT_EQ(validate_config_file(missing, out, err), kExitIo);

  err.str("");
  const auto unknown = write("unknown.cfg", "experiment = nonsense\n");
  EXPECT_EQ(run_config_file(unknown, opts, out, err), kExitValidation);
  EXPECT_NE(err.str().find("cross-validate"), std::string::npos);

  EXPECT_EQ(run_config_file(dir / "absent.cfg", opts, out, err), kExitIo);
  const auto garbled = write("garbled.cfg", "experiment counterexample\n");
  EXPECT_EQ(run_config_file(garbled, opts, out, err), kExitIo);

  const auto strict = write("strict.cfg",
                            "experiment = dark\nmodel.kind = explicit\nmodel.dim = 2\nmodel.operators = 2\n"
                            "model.op.1 = sqrt(0.3) 0 0 0 0 0 sqrt(0.7) 0\n"
                            "model.op.2 = sqrt(0.7) 0 0 0 0 0 sqrt(0.3) 0\ndark.expect = dark\n"
                            "run.trajectories = 0\n");
  EXPECT_EQ(run_config_file(strict, opts, out, err), kExitCheckFailed);
  EXPECT_EQ(read_json(dir / "out" / "manifest.json")["status"], "fail");

  write("diag.model", "kind = explicit\ndim = 2\noperators = 2\n"
                      "op.1 = sqrt(0.3) 0 0 0 0 0 sqrt(0.7) 0\nop.2 = sqrt(0.7) 0 0 0 0 0 sqrt(0.3) 0\n");
  const auto by_file = write("by_file.cfg", "experiment = purifying\nmodel.file = diag.model\nrun.horizon = 200\n"
                                            "run.trajectories = 20\ncheck.min_purified = 0.5\n");
  EXPECT_EQ(validate_config_file(by_file, out, err), kExitOk);
  EXPECT_EQ(run_config_file(by_file, opts, out, err), kExitOk);
}

}  // namespace
}  // namespace purlab
