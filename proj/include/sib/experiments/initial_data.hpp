#pragma once

#include <cmath>
#include <string>

#include "sib/dynamics.hpp"
#include "sib/experiments/config.hpp"
#include "sib/experiments/expr.hpp"

namespace sib::experiments {

namespace detail {

inline Table<double> sample(const Grid2D &g, const expr::Expression &e) {
  Table<double> s(g.Nx(), g.Ny());
  for (int m = 1; m <= g.Ny(); ++m)
    for (int j = 1; j <= g.Nx(); ++j) s(j - 1, m - 1) = e({g.node_x(j), g.node_y(m)});
  return s;
}

}  // namespace detail

/// Initial state at t = 0 for the configured data (before any regularization).
///
/// Presets, with s(x,y) = sin(pi x/Lx) sin(pi y/Ly):
///   standard  phi = psi0 = s, psi1 = 0
///   zero      all zero
///   large     phi = (4/||s||_2) s, psi0 = psi1 = 0   (||phi||_2 = 4)
///   linear    as standard; the config switches the coupling off
inline State initial_state(const RunConfig &cfg) {
  const GridPtr g = cfg.grid();
  State s = State::zero(g);
  const DataSpec &d = cfg.data;
  switch (d.kind) {
    case DataSpec::Kind::preset: {
      const double unit = 0.5 * std::sqrt(cfg.lx * cfg.ly);  // coefficient of s on e_{1,1}
      if (d.preset == "standard" || d.preset == "linear") {
        s.u(1, 1) = unit;
        s.v(1, 1) = unit;
      } else if (d.preset == "large") {
        s.u(1, 1) = 4.0;
      }
      break;
    }
    case DataSpec::Kind::modes:
      for (const auto &m : d.u_modes) s.u(m.k, m.l) += Complex(m.re, m.im);
      for (const auto &m : d.v_modes) s.v(m.k, m.l) += m.re;
      for (const auto &m : d.vt_modes) s.vt(m.k, m.l) += m.re;
      break;
    case DataSpec::Kind::expression: {
      const Table<double> re = detail::sample(*g, expr::Expression(d.u_re));
      const Table<double> im = detail::sample(*g, expr::Expression(d.u_im));
      Table<Complex> u(g->Nx(), g->Ny());
      u.real() = re;
      u.imag() = im;
      s.u = analyze<Complex>(u, g);
      s.v = analyze<double>(detail::sample(*g, expr::Expression(d.v)), g);
      s.vt = analyze<double>(detail::sample(*g, expr::Expression(d.vt)), g);
      break;
    }
  }
  if (!s.all_finite()) throw ConfigError("data: initial data are not finite");
  return s;
}

/// State the dynamics start from: J_n applied to the data when a Yosida index
/// is set and regularization is on.
inline State run_initial_state(const RunConfig &cfg) {
  State s = initial_state(cfg);
  if (cfg.params.yosida_n && cfg.regularize_data) s = regularize_data(s, *cfg.params.yosida_n);
  return s;
}

}  // namespace sib::experiments
