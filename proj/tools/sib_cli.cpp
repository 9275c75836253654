#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI/CLI.hpp>

#include "sib/experiments/commands.hpp"
#include "sib/version.hpp"

namespace ex = sib::experiments;

int main(int argc, char **argv) {
  CLI::App app{"Pseudospectral Schroedinger / improved-Boussinesq simulator"};
  app.set_version_flag("--version", std::string(sib::version));
  app.require_subcommand(1, 1);

  std::string config_path, out_dir = "sib_out";
  bool quiet = false;
  app.add_option("--config,-c", config_path, "INI configuration file (defaults apply when omitted)");
  app.add_option("--out,-o", out_dir, "output directory");
  app.add_flag("--quiet,-q", quiet, "suppress progress output");

  std::vector<double> eps_list, dt_list;
  std::vector<long long> n_list;
  bool empty_n = false;

  auto *run = app.add_subcommand("run", "integrate and write series.csv, checkpoints, manifest.json");
  auto *sweep_eps = app.add_subcommand("sweep-eps", "distance to the eps = 0 solution for a list of eps");
  sweep_eps->add_option("--eps", eps_list, "eps values (overrides [sweep] eps_list)")->delimiter(',');
  auto *sweep_n = app.add_subcommand("sweep-n", "convergence of the regularized systems as n grows");
  sweep_n->add_option("--n", n_list, "Yosida indices (overrides [sweep] n_list)")->delimiter(',');
  sweep_n->add_flag("--empty", empty_n, "run with an empty index list");
  auto *check = app.add_subcommand("check", "operator symbol inequalities and identities");
  auto *c0 = app.add_subcommand("estimate-c0", "estimate the Gagliardo-Nirenberg constant");
  auto *order = app.add_subcommand("order-test", "observed temporal order of the splitting");
  order->add_option("--dt", dt_list, "step sizes (overrides [order] dt_list)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ex::exit_invalid;
  }

  ex::Context ctx;
  ctx.out = out_dir;
  ctx.quiet = quiet;
  try {
    if (!config_path.empty()) {
      ctx.cfg = ex::load_config(config_path);
    } else {
      ctx.cfg.validate();
    }
    if (!eps_list.empty()) ctx.cfg.eps_list = eps_list;
    if (!n_list.empty()) ctx.cfg.n_list = n_list;
    if (empty_n) ctx.cfg.n_list.clear();
    if (!dt_list.empty()) ctx.cfg.dt_list = dt_list;

    if (*run) return ex::cmd_run(ctx);
    if (*sweep_eps) return ex::cmd_sweep_eps(ctx);
    if (*sweep_n) return ex::cmd_sweep_n(ctx);
    if (*check) return ex::cmd_check(ctx);
    if (*c0) return ex::cmd_estimate_c0(ctx);
    if (*order) return ex::cmd_order_test(ctx);
  } catch (const ex::ConfigError &e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return ex::exit_invalid;
  } catch (const std::invalid_argument &e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return ex::exit_invalid;
  } catch (const sib::NumericalAbort &e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return ex::exit_numerical;
  } catch (const sib::ConvergenceError &e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return ex::exit_numerical;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return ex::exit_numerical;
  }
  return ex::exit_invalid;
}
