#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's transforms, products or integrators.

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

// int_0^pi sin(c t) cos(j t) dt for c >= 1, j >= 0.
inline double sin_cos_integral(int c, int j) {
  if (c == j || (c + j) % 2 == 0) return 0.0;
  return 2.0 * c / (static_cast<double>(c) * c - static_cast<double>(j) * j);
}

// int_0^pi sin(a t) sin(b t) sin(c t) dt in closed form.
inline double triple_sine_integral(int a, int b, int c) {
  return 0.5 * (sin_cos_integral(c, std::abs(a - b)) - sin_cos_integral(c, a + b));
}

// int_0^L phi_a phi_b phi_c with phi_k = sqrt(2/L) sin(k pi x / L).
inline double triple_basis_integral(int a, int b, int c, double len) {
  return std::pow(2.0 / len, 1.5) * (len / std::numbers::pi) * triple_sine_integral(a, b, c);
}

// Brute-force Galerkin product of two real coefficient tables (nx by ny,
// column-major std::vector, index (k-1) + nx*(l-1)).
inline std::vector<double> galerkin_product(const std::vector<double> &a, const std::vector<double> &b,
                                            int nx, int ny, double lx, double ly) {
  std::vector<double> tx(static_cast<size_t>(nx) * nx * nx), ty(static_cast<size_t>(ny) * ny * ny);
  for (int i = 1; i <= nx; ++i)
    for (int j = 1; j <= nx; ++j)
      for (int m = 1; m <= nx; ++m)
        tx[(i - 1) + nx * ((j - 1) + nx * (m - 1))] = triple_basis_integral(i, j, m, lx);
  for (int i = 1; i <= ny; ++i)
    for (int j = 1; j <= ny; ++j)
      for (int m = 1; m <= ny; ++m)
        ty[(i - 1) + ny * ((j - 1) + ny * (m - 1))] = triple_basis_integral(i, j, m, ly);

  std::vector<double> out(static_cast<size_t>(nx) * ny, 0.0);
  for (int m = 0; m < nx; ++m)
    for (int n = 0; n < ny; ++n) {
      double s = 0.0;
      for (int k = 0; k < nx; ++k)
        for (int l = 0; l < ny; ++l) {
          const double ak = a[k + nx * l];
          if (ak == 0.0) continue;
          for (int kk = 0; kk < nx; ++kk)
            for (int ll = 0; ll < ny; ++ll)
              s += ak * b[kk + nx * ll] * tx[k + nx * (kk + nx * m)] * ty[l + ny * (ll + ny * n)];
        }
      out[m + nx * n] = s;
    }
  return out;
}

// Radial ground state of Q'' + Q'/r - Q + Q^3 = 0, Q'(0) = 0, found by
// bisection shooting on Q(0). Returns (Q(0), ||Q||_{L2(R^2)}^2).
inline std::pair<double, double> ground_state_by_shooting() {
  struct S {
    double q, p, m;  // Q, Q', accumulated int Q^2 r dr
  };
  const double h = 1e-4;
  auto rhs = [](double r, const S &s) {
    return S{s.p, -s.p / r + s.q - s.q * s.q * s.q, s.q * s.q * r};
  };
  // +1: overshoots (crosses zero), -1: turns back up, with the mass up to the event.
  auto shoot = [&](double q0, double &mass, double &r_end) {
    double r = 1e-6;
    S s{q0, 0.5 * r * (q0 - q0 * q0 * q0), 0.0};
    while (r < 20.0) {
      auto add = [](const S &a, const S &b, double c) { return S{a.q + c * b.q, a.p + c * b.p, a.m + c * b.m}; };
      const S k1 = rhs(r, s);
      const S k2 = rhs(r + 0.5 * h, add(s, k1, 0.5 * h));
      const S k3 = rhs(r + 0.5 * h, add(s, k2, 0.5 * h));
      const S k4 = rhs(r + h, add(s, k3, h));
      s = S{s.q + h / 6 * (k1.q + 2 * k2.q + 2 * k3.q + k4.q), s.p + h / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p),
            s.m + h / 6 * (k1.m + 2 * k2.m + 2 * k3.m + k4.m)};
      r += h;
      mass = s.m;
      r_end = r;
      if (s.q < 0.0) return +1;
      if (s.p > 0.0) return -1;
    }
    return 0;
  };
  double lo = 2.0, hi = 2.4, mass = 0.0, r_end = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (shoot(mid, mass, r_end) > 0)
      hi = mid;
    else
      lo = mid;
  }
  shoot(0.5 * (lo + hi), mass, r_end);
  return {0.5 * (lo + hi), 2.0 * std::numbers::pi * mass};
}

}  // namespace oracle
