#pragma once

// Functional calculus of the Dirichlet Laplacian. Since the sine basis
// diagonalizes -Lap, every operator here is a spectral multiplier: one symbol
// value per retained mode, evaluated from lambda(k,l).

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

#include "sib/spectral_core.hpp"

namespace sib {

template <class Scalar>
class DiagonalOperator {
public:
  using scalar_type = Scalar;

  DiagonalOperator(GridPtr grid, Table<Scalar> symbol, std::string tag)
      : grid_(std::move(grid)), symbol_(std::move(symbol)), tag_(std::move(tag)) {
    if (symbol_.rows() != grid_->Nx() || symbol_.cols() != grid_->Ny())
      throw std::invalid_argument("diagonal operator: symbol does not cover the grid modes");
  }

  static DiagonalOperator identity(GridPtr grid) {
    Table<Scalar> s = Table<Scalar>::Ones(grid->Nx(), grid->Ny());
    return DiagonalOperator(std::move(grid), std::move(s), "I");
  }
  static DiagonalOperator zero(GridPtr grid) {
    Table<Scalar> s = Table<Scalar>::Zero(grid->Nx(), grid->Ny());
    return DiagonalOperator(std::move(grid), std::move(s), "0");
  }

  const GridPtr &grid() const { return grid_; }
  const Table<Scalar> &symbol() const { return symbol_; }
  Table<Scalar> &symbol() { return symbol_; }
  Scalar operator()(int k, int l) const { return symbol_(k - 1, l - 1); }
  const std::string &tag() const { return tag_; }

  /// Composition; the symbol of A*B is the pointwise product of symbols.
  template <class Other>
  DiagonalOperator<promote_t<Scalar, Other>> operator*(const DiagonalOperator<Other> &b) const {
    using R = promote_t<Scalar, Other>;
    if (!grid_->same_as(*b.grid())) throw std::invalid_argument("compose: grid mismatch");
    return DiagonalOperator<R>(grid_, symbol_.template cast<R>() * b.symbol().template cast<R>(),
                               tag_ + "*" + b.tag());
  }

private:
  GridPtr grid_;
  Table<Scalar> symbol_;
  std::string tag_;
};

using RealOperator = DiagonalOperator<double>;
using ComplexOperator = DiagonalOperator<Complex>;

namespace detail {

inline void require_eps(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
}

inline Table<double> omega_symbol(double eps, const Grid2D &g) {
  const auto &lam = g.eigenvalues();
  return (lam / (1.0 + eps * lam)).sqrt();
}

}  // namespace detail

/// Yosida approximation J_n = (I - Lap/n)^{-1}: symbol 1/(1 + lambda/n).
inline RealOperator yosida_op(long long n, const GridPtr &grid) {
  if (n < 1) throw std::invalid_argument("yosida_op: n must be >= 1");
  const double nn = static_cast<double>(n);
  return RealOperator(grid, 1.0 / (1.0 + grid->eigenvalues() / nn), "J_" + std::to_string(n));
}

/// (-Lap)^s: symbol lambda^s.
inline RealOperator power_op(double s, const GridPtr &grid) {
  return RealOperator(grid, grid->eigenvalues().pow(s), "(-Lap)^" + std::to_string(s));
}

/// omega_eps = (-Lap)^{1/2} (1 - eps Lap)^{-1/2}: symbol sqrt(lambda / (1 + eps lambda)).
inline RealOperator omega_op(double eps, const GridPtr &grid) {
  detail::require_eps(eps);
  return RealOperator(grid, detail::omega_symbol(eps, *grid), "omega_" + std::to_string(eps));
}

/// U(t) = exp(i t Lap): symbol exp(-i lambda t).
inline ComplexOperator schrodinger_propagator(double t, const GridPtr &grid) {
  const auto &lam = grid->eigenvalues();
  Table<Complex> s(lam.rows(), lam.cols());
  for (Eigen::Index i = 0; i < lam.size(); ++i) s.data()[i] = std::polar(1.0, -lam.data()[i] * t);
  return ComplexOperator(grid, std::move(s), "U(" + std::to_string(t) + ")");
}

struct WavePropagator {
  RealOperator cos_part;   // cos(t omega)
  RealOperator sinc_part;  // omega^{-1} sin(t omega)
};

/// Kernels of the linear ion-sound flow. omega > 0 on the Dirichlet spectrum
/// (lambda >= lambda(1,1)), so sin(t omega)/omega needs no small-argument branch.
inline WavePropagator wave_propagator(double t, double eps, const GridPtr &grid) {
  detail::require_eps(eps);
  const Table<double> w = detail::omega_symbol(eps, *grid);
  const std::string ts = std::to_string(t);
  return {RealOperator(grid, (t * w).cos(), "cos(" + ts + " omega)"),
          RealOperator(grid, (t * w).sin() / w, "sin(" + ts + " omega)/omega")};
}

/// (1 - eps Lap)^{-1} Lap: symbol -lambda/(1 + eps lambda) = -omega_eps^2.
inline RealOperator source_op(double eps, const GridPtr &grid) {
  detail::require_eps(eps);
  const auto &lam = grid->eigenvalues();
  return RealOperator(grid, -lam / (1.0 + eps * lam), "source_" + std::to_string(eps));
}

/// Multiplier action c'(k,l) = sigma(k,l) c(k,l). A complex symbol applied to a
/// real field yields a complex field.
template <class S, class F>
Field<promote_t<S, F>> apply(const DiagonalOperator<S> &op, const Field<F> &f) {
  using R = promote_t<S, F>;
  if (!op.grid()->same_as(*f.grid())) throw std::invalid_argument("apply: grid mismatch");
  return Field<R>(f.grid(), op.symbol().template cast<R>() * f.coeffs().template cast<R>());
}

}  // namespace sib
