#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "sib/experiments/commands.hpp"

using namespace sib;
using namespace sib::experiments;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  fs::path p = fs::temp_directory_path() / ("sib_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string &args) {
  const std::string cmd = std::string(SIB_CLI_PATH) + " --quiet " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_ini(const fs::path &dir, const std::string &text) {
  const fs::path p = dir / "config.ini";
  std::ofstream(p) << text;
  return p;
}

const char *small_ini =
    "[grid]\nNx = 12\nNy = 12\n"
    "[system]\ndt = 0.01\n"
    "[run]\nT = 0.2\nmonitor_stride = 5\ncheckpoint_stride = 2\n"
    "[constants]\nC0 = 0.4135\n";

}  // namespace

// ---------------------------------------------------------------------------
// expressions

TEST(Expression, ArithmeticAndPrecedence) {
  EXPECT_DOUBLE_EQ(expr::evaluate("1 + 2 * 3"), 7.0);
  EXPECT_DOUBLE_EQ(expr::evaluate("(1 + 2) * 3"), 9.0);
  EXPECT_DOUBLE_EQ(expr::evaluate("2 ^ 3 ^ 2"), 512.0);
  EXPECT_DOUBLE_EQ(expr::evaluate("-2 ^ 2"), -4.0);
  EXPECT_DOUBLE_EQ(expr::evaluate("8 / 4 / 2"), 1.0);
  EXPECT_DOUBLE_EQ(expr::evaluate("1e-3 * 2.5E2"), 0.25);
  EXPECT_NEAR(expr::evaluate("sin(pi/2) + cos(0) + exp(log(3)) + sqrt(16)"), 9.0, 1e-15);
  EXPECT_NEAR(expr::evaluate("tanh(0) + abs(-2) + cosh(0) - sinh(0) + tan(0)"), 3.0, 1e-15);
  EXPECT_NEAR(expr::evaluate("e"), std::numbers::e, 0.0);
}

TEST(Expression, Variables) {
  const expr::Expression f("sin(x) * sin(2*y) + x*y");
  EXPECT_NEAR(f({0.3, 0.7}), std::sin(0.3) * std::sin(1.4) + 0.21, 1e-15);
}

TEST(Expression, Errors) {
  for (const char *bad : {"", "1 +", "(1 + 2", "1 + 2)", "foo(1)", "sin 1", "1 2", "x +* y", "2..3"})
    EXPECT_THROW(expr::Expression{bad}, expr::ParseError) << bad;
  EXPECT_THROW(expr::evaluate("x + 1"), expr::ParseError);
}

// ---------------------------------------------------------------------------
// configuration

TEST(Config, DefaultsValidate) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.nx, 64);
  EXPECT_DOUBLE_EQ(c.params.eps, 1.0);
  EXPECT_EQ(c.dt_list.size(), 3u);
}

TEST(Config, ParsesEverySection) {
  const RunConfig c = parse_config(
      "[grid]\nLx = 2*pi\nLy = 3\nNx = 8\nNy = 10\n"
      "[data]\nu_modes = 1 1 0.5 0.25; 2 3 -1\nv_modes = 1 2 0.1\nregularize = false\n"
      "[system]\neps = 0.5\nyosida_n = 16\ndt = 0.002\ndealias = off\ncoupling = yes\n"
      "[run]\nT = 2\nmonitor_stride = 4\ncheckpoint_stride = 3\nseed = 9\n"
      "[constants]\nC0 = 0.4\nC1 = 2\nC2 = 3\n"
      "[sweep]\neps_list = 0.2, 0.1\nn_list = 4, 8, 16\n"
      "[order]\ndt_list = 0.04, 0.02, 0.01\n"
      "[check]\nrandom_fields = 5\n"
      "[c0]\nNx = 32\nNy = 32\nmax_iter = 50\ntol = 1e-8\n");
  EXPECT_NEAR(c.lx, 2 * std::numbers::pi, 1e-15);
  EXPECT_EQ(c.ny, 10);
  ASSERT_EQ(c.data.kind, DataSpec::Kind::modes);
  ASSERT_EQ(c.data.u_modes.size(), 2u);
  EXPECT_EQ(c.data.u_modes[1].k, 2);
  EXPECT_DOUBLE_EQ(c.data.u_modes[0].im, 0.25);
  EXPECT_FALSE(c.regularize_data);
  EXPECT_EQ(*c.params.yosida_n, 16);
  EXPECT_FALSE(c.params.dealias);
  EXPECT_EQ(c.checkpoint_stride, 3);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_DOUBLE_EQ(*c.c2, 3.0);
  EXPECT_EQ(c.n_list.back(), 16);
  EXPECT_DOUBLE_EQ(c.dt_list[2], 0.01);
  EXPECT_EQ(c.c0_max_iter, 50);
}

TEST(Config, RejectsBadInput) {
  for (const char *bad : {"[nope]\nx = 1\n", "[grid]\nNz = 4\n", "[grid]\nNx = four\n", "[grid]\nNx = 4.5\n",
                          "[grid]\nNx = 0\n", "[system]\neps = 2\n", "[system]\ndt = -1\n", "[system]\ndealias = maybe\n",
                          "[data]\npreset = huge\n", "[data]\npreset = zero\nu_modes = 1 1 1\n",
                          "[data]\nu_re = sin(\n", "[data]\nu_modes = 0 1 1\n", "[grid]\nNx = 4\n[data]\nu_modes = 5 1 1\n",
                          "[run]\nT = 0\n", "[system]\nyosida_n = 0\n"})
    EXPECT_THROW(parse_config(bad), ConfigError) << bad;
}

TEST(Config, LinearPresetDecouples) {
  EXPECT_FALSE(parse_config("[data]\npreset = linear\n").params.coupling);
  EXPECT_TRUE(parse_config("[data]\npreset = standard\n").params.coupling);
}

// ---------------------------------------------------------------------------
// initial data

TEST(InitialData, PresetsHaveTheStatedNorms) {
  RunConfig c = parse_config("[grid]\nNx = 16\nNy = 16\n");
  const State s = initial_state(c);
  EXPECT_NEAR(sobolev_norm(s.u, 0.0), std::numbers::pi / 2, 1e-14);  // ||sin x sin y||_2 on (0,pi)^2
  EXPECT_NEAR(sobolev_norm(s.v, 0.0), std::numbers::pi / 2, 1e-14);
  EXPECT_EQ(sobolev_norm(s.vt, 0.0), 0.0);

  c.data.preset = "large";
  EXPECT_NEAR(sobolev_norm(initial_state(c).u, 0.0), 4.0, 1e-14);
  c.data.preset = "zero";
  EXPECT_EQ(sobolev_norm(initial_state(c).u, 0.0), 0.0);
}

TEST(InitialData, ExpressionMatchesModes) {
  const RunConfig e = parse_config(
      "[grid]\nNx = 16\nNy = 16\n[data]\nu_re = sin(x)*sin(y)\nu_im = 0.5*sin(2*x)*sin(y)\nv = sin(x)*sin(3*y)\n");
  const RunConfig m = parse_config("[grid]\nNx = 16\nNy = 16\n[data]\nu_modes = 1 1 " + fmt(std::numbers::pi / 2) +
                                   "; 2 1 0 " + fmt(std::numbers::pi / 4) + "\nv_modes = 1 3 " +
                                   fmt(std::numbers::pi / 2) + "\n");
  const State a = initial_state(e), b = initial_state(m);
  EXPECT_LT(sobolev_norm(a.u - b.u, 0.0), 1e-13);
  EXPECT_LT(sobolev_norm(a.v - b.v, 0.0), 1e-13);
}

TEST(InitialData, RegularizationAppliesOnlyWhenAsked) {
  RunConfig c = parse_config("[grid]\nNx = 8\nNy = 8\n[data]\nu_modes = 3 2 1\n[system]\nyosida_n = 13\n");
  EXPECT_NEAR(std::abs(run_initial_state(c).u(3, 2)), 0.5, 1e-15);  // lambda(3,2) = 13
  c.regularize_data = false;
  EXPECT_NEAR(std::abs(run_initial_state(c).u(3, 2)), 1.0, 0.0);
}

// ---------------------------------------------------------------------------
// files

TEST(Io, Crc32KnownVector) { EXPECT_EQ(crc32_of("123456789"), 0xCBF43926u); }

TEST(Io, CheckpointRoundTripIsBitExact) {
  const GridPtr g = make_grid(2.0, 3.0, 6, 5);
  State s = State::zero(g);
  s.t = 0.125;
  for (int l = 1; l <= 5; ++l)
    for (int k = 1; k <= 6; ++k) {
      s.u(k, l) = Complex(std::sin(k * 1.3 + l), -1e-300 * k);
      s.v(k, l) = std::cos(k * l * 0.7) * 1e10;
      s.vt(k, l) = -0.0 + k - l / 3.0;
    }
  const fs::path dir = scratch("ckpt");
  write_checkpoint(dir / checkpoint_name(s.t), s);
  EXPECT_TRUE(fs::exists(dir / "state_t0125.bin"));
  const State r = read_checkpoint(dir / "state_t0125.bin");
  EXPECT_EQ(r.t, s.t);
  EXPECT_TRUE(r.grid()->same_as(*g));
  EXPECT_TRUE((r.u.coeffs() == s.u.coeffs()).all());
  EXPECT_TRUE((r.v.coeffs() == s.v.coeffs()).all());
  EXPECT_TRUE((r.vt.coeffs() == s.vt.coeffs()).all());
  EXPECT_FALSE(fs::exists(dir / "state_t0125.bin.tmp"));
}

TEST(Io, CheckpointRejectsDamage) {
  const std::string good = encode_checkpoint(State::zero(make_grid(1.0, 1.0, 3, 3)));
  EXPECT_NO_THROW(decode_checkpoint(good));
  EXPECT_THROW(decode_checkpoint(good.substr(0, good.size() - 1)), IoError);
  EXPECT_THROW(decode_checkpoint(good + "x"), IoError);
  std::string v2 = good;
  v2.replace(v2.find("SIBSTATE 1"), 10, "SIBSTATE 2");
  EXPECT_THROW(decode_checkpoint(v2), IoError);
  std::string be = good;
  be.replace(be.find("little"), 6, "big___");
  EXPECT_THROW(decode_checkpoint(be), IoError);
}

TEST(Io, CheckpointNames) {
  EXPECT_EQ(checkpoint_name(0.0), "state_t0000.bin");
  EXPECT_EQ(checkpoint_name(2.5), "state_t2500.bin");
  EXPECT_EQ(checkpoint_name(12.0), "state_t12000.bin");
}

TEST(Io, SeriesCsvRoundTrip) {
  Diagnostics a{}, b{};
  a.t = 0.0, a.charge = 1.0 / 3.0, a.envelope_small = 2.0;
  b.t = 0.1, b.charge = 1e-300;
  const CsvTable t = parse_csv(series_csv({a, b}));
  ASSERT_EQ(t.columns.size(), 13u);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][t.column("charge")], 1.0 / 3.0);
  EXPECT_EQ(t.rows[1][t.column("charge")], 1e-300);
  EXPECT_EQ(t.rows[0][t.column("envelope_small")], 2.0);
  EXPECT_TRUE(std::isnan(t.rows[1][t.column("envelope_small")]));
  EXPECT_THROW(t.column("nope"), IoError);
}

// ---------------------------------------------------------------------------
// commands in process

TEST(Commands, SymbolCheckIsCleanAndCatchesInjectedFault) {
  RunConfig c = parse_config("[grid]\nNx = 8\nNy = 8\n[check]\nrandom_fields = 10\n");
  double residual = 1.0;
  EXPECT_TRUE(symbol_check(c, 64, &residual).empty());
  EXPECT_LT(residual, 1e-12);
  c.check_inject_fault = true;
  const auto bad = symbol_check(c, 4);
  ASSERT_FALSE(bad.empty());
  EXPECT_EQ(bad.front().k, 1);
  EXPECT_EQ(bad.front().l, 1);
  EXPECT_DOUBLE_EQ(bad.front().lhs, 1.5);
}

TEST(Commands, OrderStudyFlagsExactIntegrator) {
  const RunConfig c = parse_config("[grid]\nNx = 8\nNy = 8\n[data]\npreset = linear\n[run]\nT = 0.1\n");
  const OrderResult r = order_study(c, {0.02, 0.01, 0.005});
  EXPECT_TRUE(r.roundoff);
}

TEST(Commands, OrderStudyNearTwoOnCoarseGrid) {
  const RunConfig c = parse_config("[grid]\nNx = 8\nNy = 8\n[run]\nT = 0.4\n");
  const OrderResult r = order_study(c, {0.02, 0.01, 0.005});
  EXPECT_FALSE(r.roundoff);
  EXPECT_NEAR(r.mean_order, 2.0, 0.15);
}

TEST(Commands, NSweepDifferencesShrink) {
  const RunConfig c = parse_config("[grid]\nNx = 8\nNy = 8\n[system]\ndt = 0.01\n[run]\nT = 0.2\n");
  const auto rows = n_sweep(c, {4, 8, 16, 32});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_FALSE(rows.back().diff_to_next);
  for (size_t i = 1; i + 1 < rows.size(); ++i) EXPECT_LT(*rows[i].diff_to_next, *rows[i - 1].diff_to_next);
  for (size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].diff_to_reference, rows[i - 1].diff_to_reference);
}

TEST(Commands, ResolveC0Sources) {
  RunConfig c;
  c.c0 = 0.5;
  EXPECT_EQ(resolve_c0(c).first, 0.5);
  const fs::path dir = scratch("c0");
  std::ofstream(dir / "c0.json") << R"({"C0": 0.41})";
  c.c0.reset();
  c.c0_file = (dir / "c0.json").string();
  EXPECT_EQ(resolve_c0(c).first, 0.41);
  std::ofstream(dir / "bad.json") << R"({"C1": 1})";
  c.c0_file = (dir / "bad.json").string();
  EXPECT_THROW(resolve_c0(c), ConfigError);
}

// ---------------------------------------------------------------------------
// CLI

TEST(Cli, RunWritesOutputsAndManifest) {
  const fs::path dir = scratch("cli_run");
  const fs::path ini = write_ini(dir, small_ini);
  ASSERT_EQ(run_cli("--config " + ini.string() + " --out " + (dir / "out").string() + " run"), 0);
  for (const char *f : {"series.csv", "manifest.json", "state_t0000.bin", "state_t0100.bin", "state_t0200.bin"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;

  const auto m = nlohmann::json::parse(read_file(dir / "out" / "manifest.json"));
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_EQ(m["config"]["text"], small_ini);
  EXPECT_EQ(m["config"]["parsed"]["grid"]["Nx"], 12);
  for (const auto &f : m["files"])
    EXPECT_EQ(f["crc32"].get<std::uint32_t>(), crc32_of(read_file(dir / "out" / f["name"].get<std::string>())));
  for (const auto &a : m["assertions"]) EXPECT_TRUE(a["passed"].get<bool>()) << a["name"];

  const CsvTable t = parse_csv(read_file(dir / "out" / "series.csv"));
  ASSERT_EQ(t.rows.size(), 5u);  // t = 0, 0.05, ..., 0.2
  EXPECT_NEAR(t.rows.back()[t.column("t")], 0.2, 1e-15);

  const State last = read_checkpoint(dir / "out" / "state_t0200.bin");
  EXPECT_NEAR(sobolev_norm(last.u, 0.0) * sobolev_norm(last.u, 0.0), t.rows.back()[t.column("charge")], 1e-13);
}

TEST(Cli, RunIsDeterministic) {
  const fs::path dir = scratch("cli_det");
  const fs::path ini = write_ini(dir, small_ini);
  ASSERT_EQ(run_cli("-c " + ini.string() + " -o " + (dir / "a").string() + " run"), 0);
  ASSERT_EQ(run_cli("-c " + ini.string() + " -o " + (dir / "b").string() + " run"), 0);
  EXPECT_EQ(read_file(dir / "a" / "series.csv"), read_file(dir / "b" / "series.csv"));
  EXPECT_EQ(read_file(dir / "a" / "state_t0200.bin"), read_file(dir / "b" / "state_t0200.bin"));
}

TEST(Cli, ZeroDataPasses) {
  const fs::path dir = scratch("cli_zero");
  const fs::path ini = write_ini(dir, "[grid]\nNx = 8\nNy = 8\n[data]\npreset = zero\n[run]\nT = 0.05\n[constants]\nC0 = 0.4\n");
  EXPECT_EQ(run_cli("-c " + ini.string() + " -o " + dir.string() + " run"), 0);
}

TEST(Cli, InvalidConfigurationExitsTwo) {
  const fs::path dir = scratch("cli_bad");
  EXPECT_EQ(run_cli("-c " + write_ini(dir, "[grid]\nNx = -3\n").string() + " -o " + dir.string() + " run"), 2);
  EXPECT_EQ(run_cli("-c " + (dir / "missing.ini").string() + " run"), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
}

TEST(Cli, SmallnessViolationExitsTwo) {
  const fs::path dir = scratch("cli_large");
  const fs::path ini = write_ini(dir, "[grid]\nNx = 8\nNy = 8\n[data]\npreset = large\n[constants]\nC0 = 0.4135\n");
  EXPECT_EQ(run_cli("-c " + ini.string() + " -o " + dir.string() + " sweep-eps"), 2);
}

TEST(Cli, EmptyNListExitsTwo) {
  const fs::path dir = scratch("cli_n");
  const fs::path ini = write_ini(dir, small_ini);
  EXPECT_EQ(run_cli("-c " + ini.string() + " -o " + dir.string() + " sweep-n --empty"), 2);
}

TEST(Cli, OrderTestNeedsThreeHalvingSteps) {
  const fs::path dir = scratch("cli_order");
  const fs::path ini = write_ini(dir, small_ini);
  EXPECT_EQ(run_cli("-c " + ini.string() + " -o " + dir.string() + " order-test --dt 0.01,0.005"), 2);
  EXPECT_EQ(run_cli("-c " + ini.string() + " -o " + dir.string() + " order-test --dt 0.01,0.004,0.002"), 2);
}

TEST(Cli, InjectedFaultExitsOne) {
  const fs::path dir = scratch("cli_fault");
  const fs::path ini = write_ini(dir, "[grid]\nNx = 8\nNy = 8\n[check]\ninject_fault = true\nrandom_fields = 4\n");
  EXPECT_EQ(run_cli("-c " + ini.string() + " -o " + dir.string() + " check"), 1);
  const auto m = nlohmann::json::parse(read_file(dir / "manifest.json"));
  EXPECT_EQ(m["violations"][0]["k"], 1);
  EXPECT_EQ(m["violations"][0]["l"], 1);
}

TEST(Cli, NumericalAbortExitsThree) {
  const fs::path dir = scratch("cli_abort");
  const fs::path ini = write_ini(dir, "[grid]\nNx = 8\nNy = 8\n[data]\nu_modes = 1 1 1e200\n[run]\nT = 0.1\n[constants]\nC0 = 0.4\n");
  EXPECT_EQ(run_cli("-c " + ini.string() + " -o " + dir.string() + " run"), 3);
  const auto m = nlohmann::json::parse(read_file(dir / "manifest.json"));
  EXPECT_EQ(m["status"], "numerical_abort");
  EXPECT_EQ(m["last_finite_time"], 0.0);
  EXPECT_TRUE(fs::exists(dir / "series.csv"));
}

TEST(Cli, EstimateC0WritesJson) {
  const fs::path dir = scratch("cli_c0");
  const fs::path ini = write_ini(dir, "[c0]\nNx = 48\nNy = 48\n");
  ASSERT_EQ(run_cli("-c " + ini.string() + " -o " + dir.string() + " estimate-c0"), 0);
  const auto j = nlohmann::json::parse(read_file(dir / "c0.json"));
  EXPECT_NEAR(j["C0"].get<double>(), 0.4135, 0.01);
  EXPECT_NEAR(j["threshold"].get<double>(), std::numbers::sqrt2 / j["C0"].get<double>(), 1e-15);
}
