#pragma once

// Scalar functionals of a state: conserved quantities, modified energies,
// the difference metric used for the eps -> 0 limit, a priori envelopes and
// the Gagliardo-Nirenberg quotient with an estimator for its sharp constant.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sib/dynamics.hpp"
#include "sib/operator_calculus.hpp"
#include "sib/spectral_core.hpp"

namespace sib {

namespace detail {
template <class Scalar>
double sq(const Field<Scalar> &f, double s) {
  const double n = sobolev_norm(f, s);
  return n * n;
}
}  // namespace detail

/// ||u||_2^2.
inline double charge(const State &s) { return detail::sq(s.u, 0.0); }

/// E_eps with the coupling term <v, f(u)> taken from the same product as the
/// dynamics, so that it is the first integral of the discrete flow.
inline double energy(const State &s, const SystemParams &p) {
  detail::require_eps(p.eps);
  const Coupling c(s.grid(), p);
  return detail::sq(s.u, 1.0) +
         0.5 * (detail::sq(s.v, 0.0) + detail::sq(s.vt, -1.0) + p.eps * detail::sq(s.vt, 0.0)) +
         c.coupling_energy(s.v, s.u);
}

/// ||grad u||^2 + (||v||^2 + ||(-Lap)^{-1/2} vt||^2 + eps ||vt||^2)/2 + <v, |u|^2>.
inline double energy(const State &s, double eps) {
  SystemParams p;
  p.eps = eps;
  return energy(s, p);
}

/// Norms of the initial data (phi, psi0, psi1) = (u, v, vt) at t = 0.
struct DataNorms {
  double phi_l2 = 0, phi_grad = 0, phi_lap = 0, phi_h2 = 0;
  double psi0_l2 = 0, psi0_grad = 0;
  double psi1_l2 = 0, psi1_grad = 0, psi1_hm_half = 0;

  static DataNorms of(const State &s) {
    DataNorms d;
    d.phi_l2 = sobolev_norm(s.u, 0.0);
    d.phi_grad = sobolev_norm(s.u, 1.0);
    d.phi_lap = sobolev_norm(s.u, 2.0);
    d.phi_h2 = h_norm(s.u, 2.0);
    d.psi0_l2 = sobolev_norm(s.v, 0.0);
    d.psi0_grad = sobolev_norm(s.v, 1.0);
    d.psi1_l2 = sobolev_norm(s.vt, 0.0);
    d.psi1_grad = sobolev_norm(s.vt, 1.0);
    d.psi1_hm_half = sobolev_norm(s.vt, -1.0);
    return d;
  }
};

enum class ModifiedEnergyForm {
  eps,       // ||u_t||^2 + (||grad v||^2 + ||vt||^2 + eps ||grad vt||^2)/2 + ||phi||^2
  yosida_n,  // ||u_t||^2 + (||grad v||^2 + ||grad vt||^2 + ||vt||^2)/2
};

inline double modified_energy(const State &s, const SystemParams &p, const DataNorms &dn,
                              ModifiedEnergyForm form = ModifiedEnergyForm::eps) {
  const double ut = detail::sq(dudt(s, p), 0.0);
  const double gv = detail::sq(s.v, 1.0), vt = detail::sq(s.vt, 0.0), gvt = detail::sq(s.vt, 1.0);
  if (form == ModifiedEnergyForm::yosida_n) return ut + 0.5 * (gv + gvt + vt);
  return ut + 0.5 * (gv + vt + p.eps * gvt) + dn.phi_l2 * dn.phi_l2;
}

/// ||du||_{H^1} + ||dv||_2 + ||(-Lap)^{-1/2} d(vt)||_2 between two states at one time.
inline double difference_metric(const State &a, const State &b) {
  if (std::abs(a.t - b.t) > 1e-9 * std::max(1.0, std::abs(a.t)))
    throw std::invalid_argument("difference_metric: states are at different times");
  return h_norm(a.u - b.u, 1.0) + sobolev_norm(a.v - b.v, 0.0) + sobolev_norm(a.vt - b.vt, -1.0);
}

/// ||du||_{H^1} + ||dv||_2 + ||d(vt)||_2, the metric in which regularized
/// solutions form a Cauchy sequence.
inline double state_metric(const State &a, const State &b) {
  return h_norm(a.u - b.u, 1.0) + sobolev_norm(a.v - b.v, 0.0) + sobolev_norm(a.vt - b.vt, 0.0);
}

/// ||u||_4^2 / (||u||_2 ||grad u||_2).
template <class Scalar>
double gn_quotient(const Field<Scalar> &u) {
  if (u.is_zero()) throw std::invalid_argument("gn_quotient: zero field");
  const double l4 = lp_norm(u, 4.0);
  return l4 * l4 / (sobolev_norm(u, 0.0) * sobolev_norm(u, 1.0));
}

struct GnEstimate {
  double value = 0.0;
  std::vector<double> history;  // J after each iteration, history[0] = start
  int iterations = 0;
  bool converged = false;  // false: `value` is the best J seen, not a converged one
};

/// Lower estimate of the sharp constant C0 in ||u||_4^2 <= C0 ||u||_2 ||grad u||_2.
///
/// Ascent on J(u) = ||u||_4^2 / (||u||_2 ||grad u||_2) from a centred Gaussian:
///   u <- normalize((-Lap + mu)^{-1} P(u^3)),  mu = ||grad u||^2 / ||u||^2.
/// With this mu the step maximizes the linearization of ||u||_4^4 over the
/// ellipsoid ||grad u||^2 + mu ||u||^2 = const, which together with the
/// scaling invariance of J makes J nondecreasing. P(u^3) is the exact
/// projection of the cube (refined-grid quadrature is exact at this degree).
inline GnEstimate estimate_gn_constant(const GridPtr &grid, int max_iter = 2000, double tol = 1e-10,
                                       double width = 0.0) {
  if (max_iter < 1) throw std::invalid_argument("estimate_gn_constant: max_iter must be >= 1");
  if (!(tol >= 0.0)) throw std::invalid_argument("estimate_gn_constant: tol must be >= 0");
  const double cx = 0.5 * grid->Lx(), cy = 0.5 * grid->Ly();
  if (width <= 0.0) width = 0.05 * std::min(grid->Lx(), grid->Ly());

  Table<double> samples(grid->Nx(), grid->Ny());
  for (int m = 1; m <= grid->Ny(); ++m)
    for (int j = 1; j <= grid->Nx(); ++j) {
      const double dx = grid->node_x(j) - cx, dy = grid->node_y(m) - cy;
      samples(j - 1, m - 1) = std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
    }
  RealField u = analyze<double>(samples, grid);
  const Table<double> &lam = grid->eigenvalues();

  GnEstimate est;
  double j_prev = gn_quotient(u);
  est.history.push_back(j_prev);
  est.value = j_prev;
  for (int it = 1; it <= max_iter; ++it) {
    const double mu = detail::sq(u, 1.0) / detail::sq(u, 0.0);
    Table<double> cube = synthesize_refined(u).cube();
    RealField w = analyze_refined<double>(cube, grid);
    RealField next(grid, w.coeffs() / (lam + mu));
    const double nrm = sobolev_norm(next, 0.0);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) break;
    u = RealField(grid, next.coeffs() / nrm);
    const double j = gn_quotient(u);
    est.history.push_back(j);
    est.iterations = it;
    est.value = std::max(est.value, j);
    if (std::abs(j - j_prev) < tol) {
      est.converged = true;
      break;
    }
    j_prev = j;
  }
  return est;
}

/// Constants of the a priori bounds. c6 is present only when the smallness
/// hypothesis C0 ||phi||_2 < sqrt(2) holds. c1, c2 (sup-norm and elliptic
/// constants) are user supplied; the constants built from them are reported
/// but never asserted.
struct EnvelopeConstants {
  double c0 = 0.0;
  double c3 = 0.0;
  std::optional<double> c6;
  std::optional<double> c1, c2;
  std::optional<double> c4, c5, c7, c8;

  bool smallness() const { return c6.has_value(); }
};

inline EnvelopeConstants envelope_constants(const DataNorms &d, double c0, std::optional<double> c1 = {},
                                            std::optional<double> c2 = {}) {
  if (!(c0 > 0.0)) throw std::invalid_argument("envelope_constants: C0 must be positive");
  EnvelopeConstants ec;
  ec.c0 = c0;
  ec.c1 = c1;
  ec.c2 = c2;
  const double p = d.phi_l2, gp = d.phi_grad, s0 = d.psi0_l2;
  const double s1 = d.psi1_l2, s1m = d.psi1_hm_half;
  ec.c3 = 2 * gp * gp + s0 * s0 + s1 * s1 + s1m * s1m + c0 * s0 * p * gp + c0 * c0 * p * p * s0 * s0;
  if (c0 * p < std::numbers::sqrt2) {
    ec.c6 = (gp * gp + 0.5 * (s0 * s0 + s1 * s1 + s1m * s1m) + c0 * p * gp * s0) / (1.0 - c0 * p / std::numbers::sqrt2);
  }
  if (c1 && c2) {
    const double k1 = *c1, k2 = *c2;
    ec.c4 = 2 * k2 * (c0 + k1 * p) * std::sqrt(ec.c3) + c0 * c0 * p * p;
    // n-free bound on F_n(0)
    const double f0 = std::pow(d.phi_lap + std::sqrt(k1) * d.phi_h2 * s0, 2) +
                      0.5 * (d.psi0_grad * d.psi0_grad + s1 * s1 + d.psi1_grad * d.psi1_grad);
    if (p > 0.0) ec.c5 = 4 * std::sqrt(f0) + 2 * (1 + k1 * k2 * ec.c3) * p + 2 * *ec.c4 / (c0 * c0 * p);
    if (ec.c6) {
      const double q = 1 + k1 * k2 * *ec.c6;
      ec.c7 = std::pow(2.0, 2.5) * (c0 + k1 * p) * k2 * std::sqrt(*ec.c6) * q;
      ec.c8 = 16 * q * q *
              (4 * d.phi_lap * d.phi_lap + (1 + k1 * k1 * k2 * k2) * p * p + d.psi0_grad * d.psi0_grad + s1 * s1 +
               d.psi1_grad * d.psi1_grad);
    }
  }
  return ec;
}

/// C3 exp(C0^2 ||phi||_2^2 t).
inline double envelope_h1(double t, const EnvelopeConstants &ec, const DataNorms &d) {
  if (t < 0.0) throw std::invalid_argument("envelope_h1: t must be >= 0");
  return ec.c3 * std::exp(ec.c0 * ec.c0 * d.phi_l2 * d.phi_l2 * t);
}

/// C6, or nothing when the smallness hypothesis fails.
inline std::optional<double> envelope_small(const EnvelopeConstants &ec) { return ec.c6; }

/// ||grad u||^2 + ||v||^2 + ||vt||^2 + ||(-Lap)^{-1/2} vt||^2, bounded by envelope_h1.
inline double envelope_h1_lhs(const State &s) {
  return detail::sq(s.u, 1.0) + detail::sq(s.v, 0.0) + detail::sq(s.vt, 0.0) + detail::sq(s.vt, -1.0);
}

/// ||grad u||^2 + (||v||^2 + ||(-Lap)^{-1/2} vt||^2 + eps ||vt||^2)/2, bounded by envelope_small.
inline double envelope_small_lhs(const State &s, double eps) {
  return detail::sq(s.u, 1.0) + 0.5 * (detail::sq(s.v, 0.0) + detail::sq(s.vt, -1.0) + eps * detail::sq(s.vt, 0.0));
}

/// ||f||_p / (p^{1/2} ||f||_2^{2/p} ||grad f||_2^{1-2/p}).
template <class Scalar>
double lp_interpolation_quotient(const Field<Scalar> &f, double p) {
  if (f.is_zero()) throw std::invalid_argument("lp_interpolation_quotient: zero field");
  return lp_norm(f, p) /
         (std::sqrt(p) * std::pow(sobolev_norm(f, 0.0), 2.0 / p) * std::pow(sobolev_norm(f, 1.0), 1.0 - 2.0 / p));
}

struct InterpolationReport {
  std::vector<double> exponents, quotients;
  double max_quotient = 0.0;
};

template <class Scalar>
InterpolationReport lp_interpolation_report(const Field<Scalar> &f,
                                            const std::vector<double> &exponents = {2, 4, 8, 16, 32}) {
  InterpolationReport r;
  r.exponents = exponents;
  for (double p : exponents) {
    r.quotients.push_back(lp_interpolation_quotient(f, p));
    r.max_quotient = std::max(r.max_quotient, r.quotients.back());
  }
  return r;
}

/// Smallest c >= 0 with values[i] <= values[0] exp(c (times[i] - times[0])).
inline double fit_growth_rate(const std::vector<double> &times, const std::vector<double> &values) {
  if (times.size() != values.size() || times.empty()) throw std::invalid_argument("fit_growth_rate: bad series");
  double c = 0.0;
  for (size_t i = 1; i < times.size(); ++i) {
    const double dt = times[i] - times[0];
    if (dt <= 0.0 || values[0] <= 0.0 || values[i] <= 0.0) continue;
    c = std::max(c, std::log(values[i] / values[0]) / dt);
  }
  return c;
}

/// One row of series.csv plus the left-hand sides of the envelope checks.
struct Diagnostics {
  double t = 0, charge = 0, energy_eps = 0, modified_energy = 0;
  double h1_u = 0, h2_u = 0, l2_v = 0, h1_v = 0, l2_vt = 0, hm_half_vt = 0;
  double gn_quotient = 0;  // 0 for u = 0
  double envelope_h1 = 0;
  std::optional<double> envelope_small;
  double envelope_h1_lhs = 0, envelope_small_lhs = 0;
};

class Diagnoser {
public:
  Diagnoser(const SystemParams &p, const DataNorms &d, const EnvelopeConstants &ec, double t0 = 0.0,
            ModifiedEnergyForm form = ModifiedEnergyForm::eps)
      : p_(p), d_(d), ec_(ec), t0_(t0), form_(form) {}

  Diagnostics operator()(const State &s) const {
    Diagnostics r;
    r.t = s.t;
    r.charge = charge(s);
    r.energy_eps = energy(s, p_);
    r.modified_energy = modified_energy(s, p_, d_, form_);
    r.h1_u = h_norm(s.u, 1.0);
    r.h2_u = h_norm(s.u, 2.0);
    r.l2_v = sobolev_norm(s.v, 0.0);
    r.h1_v = h_norm(s.v, 1.0);
    r.l2_vt = sobolev_norm(s.vt, 0.0);
    r.hm_half_vt = sobolev_norm(s.vt, -1.0);
    r.gn_quotient = s.u.is_zero() ? 0.0 : gn_quotient(s.u);
    r.envelope_h1 = envelope_h1(std::max(0.0, s.t - t0_), ec_, d_);
    r.envelope_small = envelope_small(ec_);
    r.envelope_h1_lhs = envelope_h1_lhs(s);
    r.envelope_small_lhs = envelope_small_lhs(s, p_.eps);
    return r;
  }

private:
  SystemParams p_;
  DataNorms d_;
  EnvelopeConstants ec_;
  double t0_;
  ModifiedEnergyForm form_;
};

}  // namespace sib
