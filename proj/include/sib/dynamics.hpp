#pragma once

// Time integration of the coupled Schrodinger / ion-sound system
//
//   i u_t + Lap u = P(v, u),
//   v_tt - Lap v - eps Lap v_tt = Lap f(u),
//
// with P(v,u) = v u and f(u) = |u|^2, or, when a Yosida index n is set,
// P = J_n(J_n v . J_n u) and f = J_n |J_n u|^2. Two integrators are
// provided: a Strang splitting built from exact sub-flows (production path)
// and a Picard iteration of the Duhamel formulation (verification oracle).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "sib/operator_calculus.hpp"
#include "sib/spectral_core.hpp"

namespace sib {

struct SystemParams {
  double eps = 1.0;
  std::optional<long long> yosida_n;
  double dt = 1e-3;
  bool dealias = true;
  // Test hook: with coupling off both equations are linear and decoupled.
  bool coupling = true;

  void validate() const {
    detail::require_eps(eps);
    if (yosida_n && *yosida_n < 1) throw std::invalid_argument("yosida_n must be >= 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive and finite");
  }
};

struct State {
  double t = 0.0;
  ComplexField u;
  RealField v;
  RealField vt;

  State(double time, ComplexField u0, RealField v0, RealField vt0)
      : t(time), u(std::move(u0)), v(std::move(v0)), vt(std::move(vt0)) {
    u.require_same_grid(v);
    u.require_same_grid(vt);
  }

  static State zero(const GridPtr &grid) { return State(0.0, ComplexField(grid), RealField(grid), RealField(grid)); }

  const GridPtr &grid() const { return u.grid(); }
  bool all_finite() const { return u.all_finite() && v.all_finite() && vt.all_finite(); }
};

class NumericalAbort : public std::runtime_error {
public:
  NumericalAbort(const std::string &what, double last_finite_time)
      : std::runtime_error(what), last_finite_time_(last_finite_time) {}
  double last_finite_time() const { return last_finite_time_; }

private:
  double last_finite_time_;
};

class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string &what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

private:
  double residual_;
  int iterations_;
};

/// Initial data (J_n phi, J_n psi0, J_n psi1) for the regularized system.
inline State regularize_data(const State &s, long long n) {
  const auto j = yosida_op(n, s.grid());
  return State(s.t, sib::apply(j, s.u), sib::apply(j, s.v), sib::apply(j, s.vt));
}

/// The nonlinear terms of the system for one parameter set.
class Coupling {
public:
  Coupling(GridPtr grid, const SystemParams &p) : grid_(std::move(grid)), params_(p) {
    if (p.yosida_n) yosida_ = yosida_op(*p.yosida_n, grid_);
  }

  const SystemParams &params() const { return params_; }
  const GridPtr &grid() const { return grid_; }

  /// P(v, u).
  ComplexField potential_term(const RealField &v, const ComplexField &u) const {
    if (!params_.coupling) return ComplexField(grid_);
    return Potential(*this, v).apply(u);
  }

  /// f(u), entering v_tt = -omega^2 (v + f).
  RealField source_density(const ComplexField &u) const {
    if (!params_.coupling) return RealField(grid_);
    if (yosida_) return sib::apply(*yosida_, raw_modulus(sib::apply(*yosida_, u)));
    return raw_modulus(u);
  }

  /// <v, f(u)>, the coupling energy.
  double coupling_energy(const RealField &v, const ComplexField &u) const {
    return inner(v, source_density(u));
  }

  /// u -> P(v, u) for a frozen v; sampled once, applied many times.
  class Potential {
  public:
    Potential(const Coupling &c, const RealField &v) : c_(c) {
      const RealField w = c.yosida_ ? sib::apply(*c.yosida_, v) : v;
      if (c.params_.dealias) {
        factor_.emplace(w);
        bound_ = factor_->max_abs();
      } else {
        nodal_ = synthesize(w);
        bound_ = nodal_.abs().maxCoeff();
      }
    }

    ComplexField apply(const ComplexField &u) const {
      if (!c_.yosida_) return raw(u);
      return sib::apply(*c_.yosida_, raw(sib::apply(*c_.yosida_, u)));
    }

    /// Estimate of the operator norm (sup of the sampled potential).
    double bound() const { return bound_; }

    /// Exact nodal multiplication is available when P is a collocation product.
    bool is_nodal_multiplier() const { return !c_.params_.dealias && !c_.yosida_; }
    const Table<double> &nodal_values() const { return nodal_; }

  private:
    ComplexField raw(const ComplexField &u) const {
      if (factor_) return factor_->times(u);
      Table<Complex> s = synthesize(u) * nodal_.cast<Complex>();
      return analyze<Complex>(s, u.grid());
    }

    const Coupling &c_;
    std::optional<ProductFactor<double>> factor_;
    Table<double> nodal_;
    double bound_ = 0.0;
  };

private:
  RealField raw_modulus(const ComplexField &u) const {
    if (params_.dealias) return modulus_squared(u);
    Table<double> s = synthesize(u).abs2();
    return analyze<double>(s, u.grid());
  }

  GridPtr grid_;
  SystemParams params_;
  std::optional<RealOperator> yosida_;
};

/// du/dt = i (Lap u - P(v, u)).
inline ComplexField dudt(const State &s, const SystemParams &p) {
  const Coupling c(s.grid(), p);
  ComplexField lap_u(s.grid(), -s.grid()->eigenvalues().cast<Complex>() * s.u.coeffs());
  ComplexField rhs = lap_u - c.potential_term(s.v, s.u);
  return Complex(0.0, 1.0) * rhs;
}

/// Per-mode kernels of the ion-sound flow over one time increment.
struct WaveKernel {
  Table<double> cos_wt, sin_over_w, w_sin;

  WaveKernel(double tau, double eps, const Grid2D &g) {
    const Table<double> w = detail::omega_symbol(eps, g);
    cos_wt = (tau * w).cos();
    sin_over_w = (tau * w).sin() / w;
    w_sin = w * (tau * w).sin();
  }
};

/// Exact flow of v_tt = -omega_eps^2 (v + f) with f frozen.
inline std::pair<RealField, RealField> wave_substep(const RealField &v, const RealField &vt, const RealField &f,
                                                    const WaveKernel &k) {
  v.require_same_grid(vt);
  v.require_same_grid(f);
  const Table<double> a = v.coeffs() + f.coeffs();
  RealField v1(v.grid(), k.cos_wt * a + k.sin_over_w * vt.coeffs() - f.coeffs());
  RealField vt1(v.grid(), -k.w_sin * a + k.cos_wt * vt.coeffs());
  return {std::move(v1), std::move(vt1)};
}

inline std::pair<RealField, RealField> wave_substep(const RealField &v, const RealField &vt, const RealField &f,
                                                    double dt, double eps) {
  detail::require_eps(eps);
  return wave_substep(v, vt, f, WaveKernel(dt, eps, *v.grid()));
}

/// exp(-i tau P(v,.)) u: exact nodal phase for collocation products,
/// otherwise a Taylor series run to round-off on sub-intervals with
/// |tau_sub| * bound <= 1/2.
inline ComplexField potential_flow(const ComplexField &u, const Coupling::Potential &pot, double tau) {
  if (tau == 0.0) return u;
  if (pot.is_nodal_multiplier()) {
    Table<Complex> phase(pot.nodal_values().rows(), pot.nodal_values().cols());
    for (Eigen::Index i = 0; i < phase.size(); ++i) phase.data()[i] = std::polar(1.0, -tau * pot.nodal_values().data()[i]);
    Table<Complex> s = synthesize(u) * phase;
    return analyze<Complex>(s, u.grid());
  }
  const double work = std::ceil(std::abs(tau) * pot.bound() / 0.5);
  if (!std::isfinite(work)) throw NumericalAbort("potential flow: non-finite potential", 0.0);
  if (work > 1e3) throw NumericalAbort("potential flow: potential too large for the step size", 0.0);
  const int pieces = std::max(1, static_cast<int>(work));
  const double h = tau / pieces;
  ComplexField w = u;
  for (int piece = 0; piece < pieces; ++piece) {
    ComplexField term = w, sum = w;
    const double scale = sum.coeffs().abs2().sum();
    for (int k = 1;; ++k) {
      term = Complex(0.0, -h / k) * pot.apply(term);
      sum += term;
      const double t2 = term.coeffs().abs2().sum();
      if (t2 <= 1e-34 * scale || t2 == 0.0) break;
      if (k > 60 || !std::isfinite(t2)) throw NumericalAbort("potential flow: Taylor series did not converge", 0.0);
    }
    w = std::move(sum);
  }
  return w;
}

/// u' = U(dt/2) exp(-i dt P(v,.)) U(dt/2) u; preserves ||u||_2.
inline ComplexField schrodinger_substep(const ComplexField &u, const RealField &v_frozen, double dt,
                                        const SystemParams &p) {
  const auto half = schrodinger_propagator(0.5 * dt, u.grid());
  ComplexField w = sib::apply(half, u);
  if (p.coupling) {
    const Coupling c(u.grid(), p);
    w = potential_flow(w, Coupling::Potential(c, v_frozen), dt);
  }
  return sib::apply(half, w);
}

/// Owns a State and advances it by Strang steps
/// wave(dt/2) -> Schrodinger(dt) -> wave(dt/2). The source f(u) computed at
/// the end of one step is reused at the start of the next.
class StrangStepper {
public:
  StrangStepper(State s0, const SystemParams &p) : state_(std::move(s0)), params_(p), coupling_(state_.grid(), p) {
    detail::require_eps(p.eps);
  }

  const State &state() const { return state_; }
  const SystemParams &params() const { return params_; }
  const Coupling &coupling() const { return coupling_; }

  /// Advance by dt (any sign); kernels are cached for the last dt used.
  void advance(double dt) {
    if (!cache_ || cache_->dt != dt) cache_.emplace(dt, params_.eps, state_.grid());
    if (!source_) source_ = coupling_.source_density(state_.u);

    auto [v1, vt1] = wave_substep(state_.v, state_.vt, *source_, cache_->wave_half);
    ComplexField u = sib::apply(cache_->kinetic_half, state_.u);
    if (params_.coupling) u = potential_flow(u, Coupling::Potential(coupling_, v1), dt);
    u = sib::apply(cache_->kinetic_half, u);
    source_ = coupling_.source_density(u);
    auto [v2, vt2] = wave_substep(v1, vt1, *source_, cache_->wave_half);

    state_ = State(state_.t + dt, std::move(u), std::move(v2), std::move(vt2));
  }

  void set_time(double t) { state_.t = t; }

private:
  struct Cache {
    Cache(double step, double eps, const GridPtr &g)
        : dt(step), wave_half(0.5 * step, eps, *g), kinetic_half(schrodinger_propagator(0.5 * step, g)) {}
    double dt;
    WaveKernel wave_half;
    ComplexOperator kinetic_half;
  };

  State state_;
  SystemParams params_;
  Coupling coupling_;
  std::optional<Cache> cache_;
  std::optional<RealField> source_;
};

inline State strang_step(const State &s, const SystemParams &p, double dt) {
  StrangStepper stepper(s, p);
  stepper.advance(dt);
  return stepper.state();
}

inline State strang_step(const State &s, const SystemParams &p) {
  p.validate();
  return strang_step(s, p, p.dt);
}

template <class Sample>
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Sample> samples;
  std::vector<State> checkpoints;
  std::int64_t steps = 0;
};

/// Repeated Strang steps from s0 over [s0.t, s0.t + horizon]. `monitor(state)`
/// is recorded at t0, every `monitor_stride` steps and at the final time; the
/// last step is shortened to land exactly on the horizon. Every
/// `checkpoint_stride`-th sample (0 = none) also stores the State.
template <class Monitor>
auto integrate(const State &s0, double horizon, const SystemParams &p, int monitor_stride, Monitor &&monitor,
               int checkpoint_stride = 0) {
  using Sample = std::invoke_result_t<Monitor &, const State &>;
  p.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("integrate: horizon must be positive");
  if (monitor_stride < 1) throw std::invalid_argument("integrate: monitor_stride must be >= 1");
  if (!s0.all_finite()) throw NumericalAbort("integrate: initial state is not finite", s0.t);

  TrajectoryRecord<Sample> rec;
  const double t0 = s0.t;
  const auto nsteps = static_cast<std::int64_t>(std::ceil(horizon / p.dt - 1e-9));
  const double last_dt = horizon - static_cast<double>(nsteps - 1) * p.dt;

  auto record = [&](const State &s) {
    rec.times.push_back(s.t);
    rec.samples.push_back(monitor(s));
    if (checkpoint_stride > 0 && (rec.times.size() - 1) % checkpoint_stride == 0) rec.checkpoints.push_back(s);
  };

  StrangStepper stepper(s0, p);
  record(stepper.state());
  for (std::int64_t k = 1; k <= nsteps; ++k) {
    const double last_t = stepper.state().t;
    try {
      stepper.advance(k == nsteps ? last_dt : p.dt);
    } catch (const NumericalAbort &e) {
      throw NumericalAbort(e.what(), last_t);
    }
    stepper.set_time(k == nsteps ? t0 + horizon : t0 + static_cast<double>(k) * p.dt);
    if (!stepper.state().all_finite()) {
      std::ostringstream msg;
      msg << "non-finite field values at step " << k << " (t = " << stepper.state().t << ")";
      throw NumericalAbort(msg.str(), last_t);
    }
    if (k % monitor_stride == 0 || k == nsteps) record(stepper.state());
  }
  rec.steps = nsteps;
  return rec;
}

// ---------------------------------------------------------------------------
// Duhamel / Picard oracle

struct PicardOptions {
  int quad_nodes = 8;
  double panel_width = 0.02;  // panels = ceil(T / panel_width)
  double tol = 1e-12;
  int max_iter = 100;
};

struct PicardResult {
  State state;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};

namespace detail {

/// Gauss-Legendre nodes and weights on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre01(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[n - 1 - i] = 0.5 * (1.0 + z);
    w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// phi_k(z) = int_0^1 e^{(1-x) z} x^{k-1} / (k-1)! dx for k = 0..kmax.
inline std::vector<Complex> phi_functions(Complex z, int kmax) {
  std::vector<Complex> phi(kmax + 1);
  if (std::abs(z) < 2.0) {
    for (int k = 0; k <= kmax; ++k) {
      Complex term = 1.0, sum = 0.0;
      for (int j = 1; j <= k; ++j) term /= static_cast<double>(j);
      for (int j = 0; j < 80; ++j) {
        sum += term;
        term *= z / static_cast<double>(j + k + 1);
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      }
      phi[k] = sum;
    }
  } else {
    phi[0] = std::exp(z);
    double fact = 1.0;  // (k-1)!
    for (int k = 1; k <= kmax; ++k) {
      phi[k] = (phi[k - 1] - 1.0 / fact) / z;
      fact *= k;
    }
  }
  return phi;
}

}  // namespace detail

/// Fixed point of the Duhamel map
///
///   u(t)  = U(t) u0 - i int_0^t U(t-s) P(v,u)(s) ds,
///   v(t)  = cos(t w) v0 + w^{-1} sin(t w) vt0 - int_0^t w sin((t-s) w) f(s) ds,
///   vt(t) = -w sin(t w) v0 + cos(t w) vt0 - int_0^t w^2 cos((t-s) w) f(s) ds,
///
/// on [t0, t0+T]. Nonlinear terms are interpolated by degree q-1 polynomials
/// on each panel (q Gauss-Legendre nodes); the kernels are integrated against
/// those polynomials exactly mode by mode via phi-functions, so stiff
/// oscillatory modes carry no quadrature error. Iterates start from the free
/// flight; the residual is max over nodes of ||du||_{H^1} + ||dv||_2.
inline PicardResult picard_duhamel(const State &s0, double horizon, const SystemParams &p,
                                   const PicardOptions &opt = {}) {
  detail::require_eps(p.eps);
  if (!(horizon > 0.0)) throw std::invalid_argument("picard_duhamel: horizon must be positive");
  if (opt.quad_nodes < 2) throw std::invalid_argument("picard_duhamel: quad_nodes must be >= 2");
  if (opt.max_iter < 1) throw std::invalid_argument("picard_duhamel: max_iter must be >= 1");

  const GridPtr &g = s0.grid();
  const int q = opt.quad_nodes;
  const int panels = std::max(1, static_cast<int>(std::ceil(horizon / opt.panel_width - 1e-9)));
  const double h = horizon / panels;
  const auto [sigma, gl_w] = detail::gauss_legendre01(q);
  (void)gl_w;

  // Local targets: the q nodes, then the panel end.
  std::vector<double> taus(q + 1);
  for (int j = 0; j < q; ++j) taus[j] = sigma[j] * h;
  taus[q] = h;

  Eigen::MatrixXd vander(q, q);
  for (int j = 0; j < q; ++j)
    for (int k = 0; k < q; ++k) vander(j, k) = std::pow(sigma[j], k);
  const Eigen::MatrixXd to_monomial = vander.fullPivLu().inverse();

  const auto &lam = g->eigenvalues();
  const Table<double> w = detail::omega_symbol(p.eps, *g);
  const Eigen::Index nm = lam.size();

  struct TargetKernels {
    Table<Complex> kinetic;                 // exp(-i lambda tau)
    Table<double> cos_wt, sin_over_w, w_sin;
    std::vector<Table<Complex>> schr, wave;  // per monomial degree
  };
  std::vector<TargetKernels> kern(q + 1);
  for (int i = 0; i <= q; ++i) {
    const double tau = taus[i];
    auto &kk = kern[i];
    kk.kinetic.resize(lam.rows(), lam.cols());
    kk.cos_wt = (tau * w).cos();
    kk.sin_over_w = (tau * w).sin() / w;
    kk.w_sin = w * (tau * w).sin();
    kk.schr.assign(q, Table<Complex>(lam.rows(), lam.cols()));
    kk.wave.assign(q, Table<Complex>(lam.rows(), lam.cols()));
    for (Eigen::Index m = 0; m < nm; ++m) {
      kk.kinetic.data()[m] = std::polar(1.0, -lam.data()[m] * tau);
      const auto ps = detail::phi_functions(Complex(0.0, -lam.data()[m] * tau), q);
      const auto pw = detail::phi_functions(Complex(0.0, w.data()[m] * tau), q);
      double fact = 1.0, ratio = 1.0;  // k!, (tau/h)^k
      for (int k = 0; k < q; ++k) {
        kk.schr[k].data()[m] = tau * ratio * fact * ps[k + 1];
        kk.wave[k].data()[m] = tau * ratio * fact * pw[k + 1];
        fact *= (k + 1);
        ratio *= tau / h;
      }
    }
  }

  const Coupling coupling(g, p);
  const int nodes = panels * q;

  struct NodeState {
    ComplexField u;
    RealField v, vt;
  };

  // One application of the integral map given nonlinear terms at the nodes.
  auto sweep = [&](const std::vector<ComplexField> &gu, const std::vector<RealField> &gf,
                   std::vector<NodeState> &out, NodeState &end) {
    out.clear();
    Table<Complex> u_a = s0.u.coeffs();
    Table<double> v_a = s0.v.coeffs(), vt_a = s0.vt.coeffs();
    const bool have_g = !gu.empty();
    std::vector<Table<Complex>> cu(q), cf(q);
    for (int pnl = 0; pnl < panels; ++pnl) {
      if (have_g) {
        for (int k = 0; k < q; ++k) {
          cu[k] = Table<Complex>::Zero(lam.rows(), lam.cols());
          cf[k] = Table<Complex>::Zero(lam.rows(), lam.cols());
          for (int j = 0; j < q; ++j) {
            const double c = to_monomial(k, j);
            cu[k] += c * gu[pnl * q + j].coeffs();
            cf[k] += c * gf[pnl * q + j].coeffs().cast<Complex>();
          }
        }
      }
      for (int i = 0; i <= q; ++i) {
        const auto &kk = kern[i];
        Table<Complex> u = kk.kinetic * u_a;
        Table<double> v = kk.cos_wt * v_a + kk.sin_over_w * vt_a;
        Table<double> vt = -kk.w_sin * v_a + kk.cos_wt * vt_a;
        if (have_g) {
          Table<Complex> du = Table<Complex>::Zero(lam.rows(), lam.cols());
          Table<Complex> z = Table<Complex>::Zero(lam.rows(), lam.cols());
          for (int k = 0; k < q; ++k) {
            du += kk.schr[k] * cu[k];
            z += kk.wave[k] * cf[k];
          }
          u -= Complex(0.0, 1.0) * du;
          v -= w * z.imag();
          vt -= w.square() * z.real();
        }
        if (i < q) {
          out.push_back({ComplexField(g, std::move(u)), RealField(g, std::move(v)), RealField(g, std::move(vt))});
        } else {
          u_a = std::move(u);
          v_a = std::move(v);
          vt_a = std::move(vt);
        }
      }
    }
    end = {ComplexField(g, u_a), RealField(g, v_a), RealField(g, vt_a)};
  };

  auto distance = [](const NodeState &a, const NodeState &b) {
    return h_norm(a.u - b.u, 1.0) + sobolev_norm(a.v - b.v, 0.0);
  };

  std::vector<NodeState> current, next;
  NodeState end_cur{ComplexField(g), RealField(g), RealField(g)}, end_next = end_cur;
  sweep({}, {}, current, end_cur);

  PicardResult result{State::zero(g)};
  std::vector<ComplexField> gu;
  std::vector<RealField> gf;
  gu.reserve(nodes);
  gf.reserve(nodes);
  for (int it = 1; it <= opt.max_iter; ++it) {
    gu.clear();
    gf.clear();
    for (const auto &ns : current) {
      gu.push_back(coupling.potential_term(ns.v, ns.u));
      gf.push_back(coupling.source_density(ns.u));
    }
    sweep(gu, gf, next, end_next);
    double res = distance(end_next, end_cur);
    for (int j = 0; j < nodes; ++j) res = std::max(res, distance(next[j], current[j]));
    result.residual_history.push_back(res);
    std::swap(current, next);
    std::swap(end_cur, end_next);
    if (!std::isfinite(res)) break;
    if (res <= opt.tol) {
      result.state = State(s0.t + horizon, end_cur.u, end_cur.v, end_cur.vt);
      result.iterations = it;
      result.residual = res;
      return result;
    }
  }
  const double last = result.residual_history.back();
  std::ostringstream msg;
  msg << "picard_duhamel: no convergence in " << opt.max_iter << " iterations (residual " << last
      << "); horizon too large for contraction";
  throw ConvergenceError(msg.str(), last, opt.max_iter);
}

}  // namespace sib
