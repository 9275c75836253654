#pragma once

// The batch commands behind the `sib` CLI. Each returns a process exit code:
// 0 all assertions pass, 1 an assertion failed, 2 invalid configuration or
// violated hypothesis, 3 numerical abort.

#include <fftw3.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sib/dynamics.hpp"
#include "sib/experiments/config.hpp"
#include "sib/experiments/initial_data.hpp"
#include "sib/experiments/io.hpp"
#include "sib/functionals.hpp"
#include "sib/operator_calculus.hpp"
#include "sib/version.hpp"

namespace sib::experiments {

using json = nlohmann::json;

enum ExitCode : int { exit_pass = 0, exit_assertion = 1, exit_invalid = 2, exit_numerical = 3 };

struct Context {
  RunConfig cfg;
  fs::path out = "sib_out";
  bool quiet = false;
  std::ostream *info = &std::cout;
  std::ostream *error = &std::cerr;

  template <class... A>
  void say(const A &...a) const {
    if (quiet) return;
    ((*info << a), ...);
    *info << '\n';
  }
  template <class... A>
  void complain(const A &...a) const {
    ((*error << a), ...);
    *error << '\n';
  }
};

struct Assertion {
  std::string name;
  bool passed = true;
  double measured = 0.0;
  double threshold = 0.0;
  std::string relation;  // how measured compares to threshold when passing
  std::string note;

  double margin() const {
    if (relation == "<" || relation == "<=") return threshold - measured;
    return measured - threshold;
  }
};

/// Collects everything a run reports and writes manifest.json last.
class Manifest {
public:
  Manifest(const Context &ctx, std::string command) : ctx_(ctx) {
    j_["command"] = std::move(command);
    j_["config"] = {{"text", ctx.cfg.source}, {"parsed", config_json(ctx.cfg)}};
    j_["versions"] = {{"sib", sib::version},
                      {"compiler", __VERSION__},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                    "." + std::to_string(EIGEN_MINOR_VERSION)},
                      {"fftw", std::string(fftw_version)}};
    j_["assertions"] = json::array();
    j_["files"] = json::array();
  }

  json &operator[](const std::string &key) { return j_[key]; }

  void check(const Assertion &a) {
    assertions_.push_back(a);
    j_["assertions"].push_back({{"name", a.name},
                                {"passed", a.passed},
                                {"measured", a.measured},
                                {"threshold", a.threshold},
                                {"relation", a.relation},
                                {"margin", a.margin()},
                                {"note", a.note}});
    ctx_.say(a.passed ? "PASS " : "FAIL ", a.name, ": ", fmt(a.measured), ' ', a.relation, ' ', fmt(a.threshold),
             a.note.empty() ? "" : "  (" + a.note + ")");
  }

  bool all_passed() const {
    return std::all_of(assertions_.begin(), assertions_.end(), [](const Assertion &a) { return a.passed; });
  }

  /// Write a file into the output directory and record its checksum.
  void emit(const std::string &name, const std::string &bytes) {
    write_atomic(ctx_.out / name, bytes);
    j_["files"].push_back({{"name", name}, {"bytes", bytes.size()}, {"crc32", crc32_of(bytes)}});
  }

  int finish(int code, const std::string &status) {
    j_["exit_code"] = code;
    j_["status"] = status;
    write_atomic(ctx_.out / "manifest.json", j_.dump(2) + "\n");
    return code;
  }

  int finish() { return all_passed() ? finish(exit_pass, "pass") : finish(exit_assertion, "assertion_failed"); }

  static json config_json(const RunConfig &c) {
    json d = {{"kind", c.data.kind == DataSpec::Kind::preset  ? "preset"
                       : c.data.kind == DataSpec::Kind::modes ? "modes"
                                                              : "expression"}};
    if (c.data.kind == DataSpec::Kind::preset) d["preset"] = c.data.preset;
    if (c.data.kind == DataSpec::Kind::expression)
      d["expressions"] = {{"u_re", c.data.u_re}, {"u_im", c.data.u_im}, {"v", c.data.v}, {"vt", c.data.vt}};
    json j = {{"grid", {{"Lx", c.lx}, {"Ly", c.ly}, {"Nx", c.nx}, {"Ny", c.ny}}},
              {"data", d},
              {"regularize_data", c.regularize_data},
              {"system",
               {{"eps", c.params.eps},
                {"yosida_n", c.params.yosida_n ? json(*c.params.yosida_n) : json(nullptr)},
                {"dt", c.params.dt},
                {"dealias", c.params.dealias},
                {"coupling", c.params.coupling}}},
              {"run",
               {{"T", c.horizon},
                {"monitor_stride", c.monitor_stride},
                {"checkpoint_stride", c.checkpoint_stride},
                {"seed", c.seed}}}};
    if (c.c0) j["constants"]["C0"] = *c.c0;
    if (c.c0_file) j["constants"]["C0_file"] = *c.c0_file;
    if (c.c1) j["constants"]["C1"] = *c.c1;
    if (c.c2) j["constants"]["C2"] = *c.c2;
    return j;
  }

private:
  const Context &ctx_;
  json j_;
  std::vector<Assertion> assertions_;
};

inline json data_norms_json(const DataNorms &d) {
  return {{"phi_l2", d.phi_l2},       {"phi_grad", d.phi_grad},   {"phi_lap", d.phi_lap},
          {"phi_h2", d.phi_h2},       {"psi0_l2", d.psi0_l2},     {"psi0_grad", d.psi0_grad},
          {"psi1_l2", d.psi1_l2},     {"psi1_grad", d.psi1_grad}, {"psi1_hm_half", d.psi1_hm_half}};
}

inline json constants_json(const EnvelopeConstants &ec) {
  auto opt = [](const std::optional<double> &v) { return v ? json(*v) : json(nullptr); };
  return {{"C0", ec.c0},     {"C3", ec.c3},     {"C6", opt(ec.c6)}, {"C1", opt(ec.c1)}, {"C2", opt(ec.c2)},
          {"C4", opt(ec.c4)}, {"C5", opt(ec.c5)}, {"C7", opt(ec.c7)}, {"C8", opt(ec.c8)}, {"smallness", ec.smallness()}};
}

/// C0 from the config override, a c0.json file, or the estimator.
inline std::pair<double, std::string> resolve_c0(const RunConfig &cfg) {
  if (cfg.c0) return {*cfg.c0, "config"};
  if (cfg.c0_file) {
    json j;
    try {
      j = json::parse(read_file(*cfg.c0_file));
    } catch (const std::exception &e) {
      throw ConfigError("constants.C0_file: " + std::string(e.what()));
    }
    if (!j.contains("C0") || !j["C0"].is_number() || !(j["C0"].get<double>() > 0))
      throw ConfigError("constants.C0_file: no positive C0 entry");
    return {j["C0"].get<double>(), "file " + *cfg.c0_file};
  }
  const auto est = estimate_gn_constant(make_grid(cfg.c0_lx, cfg.c0_ly, cfg.c0_nx, cfg.c0_ny), cfg.c0_max_iter, cfg.c0_tol);
  return {est.value, "estimator"};
}

namespace detail {

inline double max_relative_deviation(const std::vector<double> &v) {
  double m = 0.0;
  const double ref = v.front();
  for (double x : v) m = std::max(m, ref != 0.0 ? std::abs(x - ref) / std::abs(ref) : std::abs(x));
  return m;
}

/// Least-squares slope of log(y) against log(x) over positive pairs.
inline std::optional<double> loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) continue;
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a, sy += b, sxx += a * a, sxy += a * b, ++n;
  }
  if (n < 2 || sxx * n - sx * sx == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline ModifiedEnergyForm energy_form(const SystemParams &p) {
  return p.yosida_n ? ModifiedEnergyForm::yosida_n : ModifiedEnergyForm::eps;
}

inline void prepare_output(const Context &ctx) { fs::create_directories(ctx.out); }

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_run(const Context &ctx) {
  const RunConfig &cfg = ctx.cfg;
  detail::prepare_output(ctx);
  Manifest m(ctx, "run");

  const State s0 = run_initial_state(cfg);
  const DataNorms dn = DataNorms::of(s0);
  const auto [c0, c0_source] = resolve_c0(cfg);
  const EnvelopeConstants ec = envelope_constants(dn, c0, cfg.c1, cfg.c2);
  m["data_norms"] = data_norms_json(dn);
  m["constants"] = constants_json(ec);
  m["constants"]["C0_source"] = c0_source;

  const Diagnoser diag(cfg.params, dn, ec, s0.t, detail::energy_form(cfg.params));
  std::vector<Diagnostics> rows;
  auto monitor = [&](const State &s) {
    rows.push_back(diag(s));
    return 0;
  };

  std::vector<State> checkpoints;
  try {
    auto rec = integrate(s0, cfg.horizon, cfg.params, cfg.monitor_stride, monitor, cfg.checkpoint_stride);
    checkpoints = std::move(rec.checkpoints);
    m["steps"] = rec.steps;
  } catch (const NumericalAbort &e) {
    ctx.complain("numerical abort: ", e.what(), "; last finite time ", fmt(e.last_finite_time()));
    m.emit("series.csv", series_csv(rows));
    m["last_finite_time"] = e.last_finite_time();
    m["abort_reason"] = e.what();
    return m.finish(exit_numerical, "numerical_abort");
  }
  m.emit("series.csv", series_csv(rows));
  for (const auto &s : checkpoints) m.emit(checkpoint_name(s.t), encode_checkpoint(s));

  std::vector<double> q, e, f, t;
  for (const auto &r : rows) q.push_back(r.charge), e.push_back(r.energy_eps), f.push_back(r.modified_energy), t.push_back(r.t);

  m.check({"charge_conservation", detail::max_relative_deviation(q) < 1e-10, detail::max_relative_deviation(q), 1e-10,
           "<", "max relative drift of ||u||_2^2"});

  if (cfg.params.eps == 1.0) {
    double worst = -INFINITY, ratio = 0.0;
    for (const auto &r : rows) {
      worst = std::max(worst, r.envelope_h1_lhs - r.envelope_h1);
      ratio = std::max(ratio, r.envelope_h1 > 0 ? r.envelope_h1_lhs / r.envelope_h1 : (r.envelope_h1_lhs > 0 ? INFINITY : 0.0));
    }
    m.check({"envelope_h1", worst <= 0.0, ratio, 1.0, "<=", "max over samples of LHS / (C3 exp(C0^2 ||phi||^2 t))"});
  }
  if (ec.smallness()) {
    double ratio = 0.0;
    bool ok = true;
    for (const auto &r : rows) {
      ok = ok && r.envelope_small_lhs <= *ec.c6;
      ratio = std::max(ratio, *ec.c6 > 0 ? r.envelope_small_lhs / *ec.c6 : (r.envelope_small_lhs > 0 ? INFINITY : 0.0));
    }
    m.check({"envelope_small", ok, ratio, 1.0, "<=", "max over samples of LHS / C6"});
  }

  m["report"] = {{"energy_max_relative_drift", detail::max_relative_deviation(e)},
                 {"modified_energy_growth_rate", fit_growth_rate(t, f)},
                 {"gn_quotient_max", std::max_element(rows.begin(), rows.end(), [](auto &a, auto &b) {
                                       return a.gn_quotient < b.gn_quotient;
                                     })->gn_quotient}};
  ctx.say("energy drift ", fmt(detail::max_relative_deviation(e)), ", C7 fit ", fmt(fit_growth_rate(t, f)));
  return m.finish();
}

/// Runs of the same data for several eps against the eps = 0 run. Returns the
/// sup over samples of difference_metric for each eps.
inline std::vector<double> eps_sweep_metrics(const RunConfig &cfg, const std::vector<double> &eps_list) {
  const State s0 = run_initial_state(cfg);
  auto states = [&](double eps) {
    SystemParams p = cfg.params;
    p.eps = eps;
    return integrate(s0, cfg.horizon, p, cfg.monitor_stride, [](const State &s) { return s; }).samples;
  };
  const auto ref = states(0.0);
  std::vector<double> sup;
  for (double eps : eps_list) {
    const auto run = states(eps);
    double m = 0.0;
    for (size_t i = 0; i < run.size(); ++i) m = std::max(m, difference_metric(run[i], ref[i]));
    sup.push_back(m);
  }
  return sup;
}

inline int cmd_sweep_eps(const Context &ctx) {
  const RunConfig &cfg = ctx.cfg;
  if (cfg.eps_list.empty()) {
    ctx.complain("sweep-eps: empty eps list");
    return exit_invalid;
  }
  const State s0 = run_initial_state(cfg);
  const auto [c0, c0_source] = resolve_c0(cfg);
  const double phi = sobolev_norm(s0.u, 0.0);
  if (!(c0 * phi < std::numbers::sqrt2)) {
    ctx.complain("sweep-eps: smallness hypothesis violated: ||phi||_2 = ", fmt(phi), " >= sqrt(2)/C0 = ",
                 fmt(std::numbers::sqrt2 / c0));
    return exit_invalid;
  }
  detail::prepare_output(ctx);
  Manifest m(ctx, "sweep-eps");
  m["C0"] = {{"value", c0}, {"source", c0_source}, {"threshold", std::numbers::sqrt2 / c0}};

  std::vector<double> eps = cfg.eps_list;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  std::vector<double> sup;
  try {
    sup = eps_sweep_metrics(cfg, eps);
  } catch (const NumericalAbort &e) {
    ctx.complain("numerical abort: ", e.what());
    m["last_finite_time"] = e.last_finite_time();
    return m.finish(exit_numerical, "numerical_abort");
  }
  const auto slope = detail::loglog_slope(eps, sup);
  std::string csv = "eps,sup_metric,fitted_slope\n";
  for (size_t i = 0; i < eps.size(); ++i)
    csv += fmt(eps[i]) + "," + fmt(sup[i]) + "," + (slope ? fmt(*slope) : std::string()) + "\n";
  m.emit("eps_sweep.csv", csv);
  m["fitted_slope"] = slope ? json(*slope) : json(nullptr);
  if (slope) ctx.say("fitted slope of sup metric against eps: ", fmt(*slope));

  for (size_t i = 1; i < eps.size(); ++i) {
    const std::string name = "sup_metric(eps=" + fmt(eps[i]) + ") < sup_metric(eps=" + fmt(eps[i - 1]) + ")";
    m.check({name, sup[i] < sup[i - 1], sup[i], sup[i - 1], "<"});
  }
  return m.finish();
}

struct NSweepRow {
  long long n = 0;
  std::optional<double> diff_to_next;
  double diff_to_reference = 0.0;
  double max_h2_u = 0.0, max_h1_v = 0.0, max_h1_vt = 0.0;
};

/// Final states of (S-iB)_n for each n and of the unregularized system.
inline std::vector<NSweepRow> n_sweep(const RunConfig &cfg, const std::vector<long long> &n_list) {
  struct Peak {
    double h2u = 0, h1v = 0, h1vt = 0;
  };
  auto run = [&](std::optional<long long> n, Peak &peak) {
    RunConfig c = cfg;
    c.params.yosida_n = n;
    const State s0 = run_initial_state(c);
    State last = s0;
    integrate(s0, c.horizon, c.params, c.monitor_stride, [&](const State &s) {
      peak.h2u = std::max(peak.h2u, h_norm(s.u, 2.0));
      peak.h1v = std::max(peak.h1v, h_norm(s.v, 1.0));
      peak.h1vt = std::max(peak.h1vt, h_norm(s.vt, 1.0));
      last = s;  // the final state is always the last sample
      return 0;
    });
    return last;
  };
  Peak ref_peak;
  const State ref = run(std::nullopt, ref_peak);
  std::vector<State> finals;
  std::vector<NSweepRow> rows;
  for (long long n : n_list) {
    Peak peak;
    finals.push_back(run(n, peak));
    NSweepRow r;
    r.n = n;
    r.diff_to_reference = state_metric(finals.back(), ref);
    r.max_h2_u = peak.h2u, r.max_h1_v = peak.h1v, r.max_h1_vt = peak.h1vt;
    rows.push_back(r);
  }
  for (size_t i = 0; i + 1 < rows.size(); ++i) rows[i].diff_to_next = state_metric(finals[i], finals[i + 1]);
  return rows;
}

inline int cmd_sweep_n(const Context &ctx) {
  const RunConfig &cfg = ctx.cfg;
  if (cfg.n_list.empty()) {
    ctx.complain("sweep-n: empty n list");
    return exit_invalid;
  }
  detail::prepare_output(ctx);
  Manifest m(ctx, "sweep-n");
  std::vector<NSweepRow> rows;
  try {
    rows = n_sweep(cfg, cfg.n_list);
  } catch (const NumericalAbort &e) {
    ctx.complain("numerical abort: ", e.what());
    m["last_finite_time"] = e.last_finite_time();
    return m.finish(exit_numerical, "numerical_abort");
  }
  std::string csv = "n,diff_to_next,diff_to_reference,max_h2_u,max_h1_v,max_h1_vt\n";
  json report = json::array();
  for (const auto &r : rows) {
    csv += std::to_string(r.n) + "," + (r.diff_to_next ? fmt(*r.diff_to_next) : std::string()) + "," +
           fmt(r.diff_to_reference) + "," + fmt(r.max_h2_u) + "," + fmt(r.max_h1_v) + "," + fmt(r.max_h1_vt) + "\n";
    report.push_back({{"n", r.n},
                      {"diff_to_reference", r.diff_to_reference},
                      {"max_h2_u", r.max_h2_u},
                      {"max_h1_v", r.max_h1_v},
                      {"max_h1_vt", r.max_h1_vt}});
  }
  m.emit("n_sweep.csv", csv);
  m["boundedness"] = report;
  for (size_t i = 1; i + 1 < rows.size(); ++i) {
    const std::string name = "diff(n=" + std::to_string(rows[i].n) + ") < diff(n=" + std::to_string(rows[i - 1].n) + ")";
    m.check({name, *rows[i].diff_to_next < *rows[i - 1].diff_to_next, *rows[i].diff_to_next, *rows[i - 1].diff_to_next, "<"});
  }
  if (rows.size() < 3) ctx.say("sweep-n: fewer than two consecutive differences, nothing to compare");
  return m.finish();
}

// ---------------------------------------------------------------------------

struct CheckViolation {
  std::string what;
  int k = 0, l = 0;
  double lhs = 0, rhs = 0;
};

/// Symbol inequalities of the Yosida approximation and the exact identities of
/// the functional calculus, evaluated on every mode of the grid.
inline std::vector<CheckViolation> symbol_check(const RunConfig &cfg, long long max_n = 1024,
                                                double *identity_residual = nullptr) {
  const GridPtr g = cfg.grid();
  const auto &lam = g->eigenvalues();
  std::vector<CheckViolation> bad;
  auto each = [&](auto &&fn) {
    for (int l = 1; l <= g->Ny(); ++l)
      for (int k = 1; k <= g->Nx(); ++k) fn(k, l, lam(k - 1, l - 1));
  };
  for (long long n = 1; n <= max_n; ++n) {
    RealOperator j = yosida_op(n, g);
    if (cfg.check_inject_fault && n == 1) j.symbol()(0, 0) = 1.5;
    const double rn = std::sqrt(static_cast<double>(n));
    const std::string tag = " (n=" + std::to_string(n) + ")";
    each([&](int k, int l, double lm) {
      const double s = j(k, l), r = std::sqrt(lm);
      if (!(s > 0)) bad.push_back({"J_n symbol positive" + tag, k, l, s, 0.0});
      if (!(s <= 1.0)) bad.push_back({"||J_n u|| <= ||u||" + tag, k, l, s, 1.0});
      if (!(r * s <= rn)) bad.push_back({"||grad J_n u|| <= n^1/2 ||u||" + tag, k, l, r * s, rn});
      if (!(r * s <= r)) bad.push_back({"||grad J_n u|| <= ||grad u||" + tag, k, l, r * s, r});
      if (!(lm * s <= lm)) bad.push_back({"||Lap J_n u|| <= ||Lap u||" + tag, k, l, lm * s, lm});
    });
  }
  for (double t : {0.0, 0.1, 1.0, 10.0, 100.0}) {
    const auto u = schrodinger_propagator(t, g), ub = schrodinger_propagator(-t, g);
    each([&](int k, int l, double) {
      if (std::abs(std::abs(u(k, l)) - 1.0) > 1e-14)
        bad.push_back({"|U(t)| = 1 (t=" + fmt(t) + ")", k, l, std::abs(u(k, l)), 1.0});
      if (std::abs(u(k, l) * ub(k, l) - 1.0) > 1e-14)
        bad.push_back({"U(t) U(-t) = I (t=" + fmt(t) + ")", k, l, std::abs(u(k, l) * ub(k, l)), 1.0});
    });
    for (double eps : {0.0, 0.5, 1.0}) {
      const auto w = omega_op(eps, g);
      const auto kp = wave_propagator(t, eps, g);
      each([&](int k, int l, double) {
        const double e = kp.cos_part(k, l) * kp.cos_part(k, l) + std::pow(w(k, l) * kp.sinc_part(k, l), 2);
        if (std::abs(e - 1.0) > 1e-13)
          bad.push_back({"cos^2 + omega^2 K^2 = 1 (t=" + fmt(t) + ", eps=" + fmt(eps) + ")", k, l, e, 1.0});
      });
    }
  }

  // ||(-Lap)^{1/2} f|| = ||grad f|| and
  // ||(1-Lap)^{1/2}(-Lap)^{-1/2} f||^2 = ||f||^2 + ||(-Lap)^{-1/2} f||^2 on random fields.
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> nd;
  const RealOperator root = power_op(0.5, g);
  const RealOperator lhs_op(g, ((1.0 + lam) / lam).sqrt(), "(1-Lap)^1/2(-Lap)^-1/2");
  double worst = 0.0;
  for (int trial = 0; trial < cfg.check_random_fields; ++trial) {
    ComplexField f(g);
    for (int l = 1; l <= g->Ny(); ++l)
      for (int k = 1; k <= g->Nx(); ++k) f(k, l) = Complex(nd(rng), nd(rng)) / (1.0 + 0.1 * (k + l));
    double grad2 = 0.0;  // sum over modes of |d_x|^2 + |d_y|^2 from the cosine expansion
    for (int l = 1; l <= g->Ny(); ++l)
      for (int k = 1; k <= g->Nx(); ++k) {
        const double ax = k * std::numbers::pi / g->Lx(), ay = l * std::numbers::pi / g->Ly();
        grad2 += (ax * ax + ay * ay) * std::norm(f(k, l));
      }
    const double r24 = std::abs(std::pow(sobolev_norm(sib::apply(root, f), 0.0), 2) - grad2) / grad2;
    const double lhs = std::pow(sobolev_norm(sib::apply(lhs_op, f), 0.0), 2);
    const double rhs = std::pow(sobolev_norm(f, 0.0), 2) + std::pow(sobolev_norm(sib::apply(power_op(-0.5, g), f), 0.0), 2);
    const double r25 = std::abs(lhs - rhs) / rhs;
    worst = std::max({worst, r24, r25});
    if (r24 > 1e-10) bad.push_back({"||(-Lap)^1/2 f|| = ||grad f|| (field " + std::to_string(trial) + ")", 0, 0, r24, 1e-10});
    if (r25 > 1e-10)
      bad.push_back({"||(1-Lap)^1/2 (-Lap)^-1/2 f||^2 identity (field " + std::to_string(trial) + ")", 0, 0, r25, 1e-10});
  }
  if (identity_residual) *identity_residual = worst;
  return bad;
}

inline int cmd_check(const Context &ctx) {
  detail::prepare_output(ctx);
  Manifest m(ctx, "check");
  double residual = 0.0;
  const auto bad = symbol_check(ctx.cfg, 1024, &residual);
  json list = json::array();
  for (size_t i = 0; i < bad.size(); ++i) {
    const auto &b = bad[i];
    if (i < 50) {
      list.push_back({{"check", b.what}, {"k", b.k}, {"l", b.l}, {"value", b.lhs}, {"bound", b.rhs}});
      ctx.complain("violated: ", b.what, " at mode (", b.k, ",", b.l, "): ", fmt(b.lhs), " vs ", fmt(b.rhs));
    }
  }
  m["violations"] = list;
  m["violation_count"] = bad.size();
  m.check({"symbol inequalities and identities", bad.empty(), static_cast<double>(bad.size()), 0.0, "<=",
           "number of violated mode checks"});
  m.check({"identity residual", residual < 1e-10, residual, 1e-10, "<", "max relative residual over random fields"});
  return m.finish();
}

inline int cmd_estimate_c0(const Context &ctx) {
  const RunConfig &cfg = ctx.cfg;
  detail::prepare_output(ctx);
  Manifest m(ctx, "estimate-c0");
  const auto est = estimate_gn_constant(make_grid(cfg.c0_lx, cfg.c0_ly, cfg.c0_nx, cfg.c0_ny), cfg.c0_max_iter, cfg.c0_tol);
  const double threshold = std::numbers::sqrt2 / est.value;
  json c0 = {{"C0", est.value},
             {"threshold", threshold},
             {"converged", est.converged},
             {"iterations", est.iterations},
             {"grid", {{"Lx", cfg.c0_lx}, {"Ly", cfg.c0_ly}, {"Nx", cfg.c0_nx}, {"Ny", cfg.c0_ny}}},
             {"history", est.history}};
  m.emit("c0.json", c0.dump(2) + "\n");
  ctx.say("C0 = ", fmt(est.value));
  ctx.say("sqrt(2)/C0 = ", fmt(threshold));
  bool monotone = true;
  for (size_t i = 1; i < est.history.size(); ++i) monotone = monotone && est.history[i] >= est.history[i - 1] - 1e-15;
  m.check({"estimator converged", est.converged, static_cast<double>(est.iterations), static_cast<double>(cfg.c0_max_iter),
           "<=", "iterations used"});
  m.check({"quotient nondecreasing", monotone, est.history.back() - est.history.front(), 0.0, ">="});
  return m.finish();
}

struct OrderResult {
  std::vector<double> dt, error, order;
  double mean_order = 0.0;
  bool roundoff = false;
};

inline OrderResult order_study(const RunConfig &cfg, const std::vector<double> &dts) {
  const State s0 = run_initial_state(cfg);
  auto final_state = [&](double dt) {
    SystemParams p = cfg.params;
    p.dt = dt;
    return integrate(s0, cfg.horizon, p, 1 << 30, [](const State &s) { return s; }).samples.back();
  };
  const double dt_min = *std::min_element(dts.begin(), dts.end());
  const State ref = final_state(dt_min / 8);
  OrderResult r;
  r.dt = dts;
  for (double dt : dts) r.error.push_back(state_metric(final_state(dt), ref));
  const double scale = h_norm(ref.u, 1.0) + sobolev_norm(ref.v, 0.0) + sobolev_norm(ref.vt, 0.0);
  r.roundoff = *std::max_element(r.error.begin(), r.error.end()) <= 1e-11 * std::max(scale, 1.0);
  for (size_t i = 0; i + 1 < dts.size(); ++i)
    r.order.push_back(std::log(r.error[i] / r.error[i + 1]) / std::log(dts[i] / dts[i + 1]));
  for (double o : r.order) r.mean_order += o / static_cast<double>(r.order.size());
  return r;
}

inline int cmd_order_test(const Context &ctx) {
  const RunConfig &cfg = ctx.cfg;
  const auto &d = cfg.dt_list;
  if (d.size() < 3) {
    ctx.complain("order-test: need at least three dt values");
    return exit_invalid;
  }
  for (size_t i = 1; i < d.size(); ++i)
    if (std::abs(d[i] / d[i - 1] - 0.5) > 1e-9) {
      ctx.complain("order-test: dt values must halve successively");
      return exit_invalid;
    }
  detail::prepare_output(ctx);
  Manifest m(ctx, "order-test");
  OrderResult r;
  try {
    r = order_study(cfg, d);
  } catch (const NumericalAbort &e) {
    ctx.complain("numerical abort: ", e.what());
    m["last_finite_time"] = e.last_finite_time();
    return m.finish(exit_numerical, "numerical_abort");
  }
  std::string csv = "dt,error,order\n";
  for (size_t i = 0; i < d.size(); ++i)
    csv += fmt(d[i]) + "," + fmt(r.error[i]) + "," + (i > 0 ? fmt(r.order[i - 1]) : std::string()) + "\n";
  m.emit("order_test.csv", csv);
  m["orders"] = r.order;
  m["errors"] = r.error;
  if (r.roundoff) {
    ctx.say("order-test: errors are at round-off level (exact integrator); order assertion skipped");
    m["notice"] = "errors at round-off; order assertion skipped";
    return m.finish();
  }
  m.check({"mean observed order", r.mean_order >= 1.9, r.mean_order, 1.9, ">=", "H1+L2+L2 error against dt_min/8"});
  return m.finish();
}

}  // namespace sib::experiments
