#pragma once

// Functions on the rectangle (0,Lx)x(0,Ly) with homogeneous Dirichlet data,
// represented by coefficients against the L2-orthonormal eigenbasis
//
//   e_{k,l}(x,y) = 2/sqrt(Lx*Ly) * sin(k*pi*x/Lx) * sin(l*pi*y/Ly),
//
// of the Dirichlet Laplacian, -Lap e_{k,l} = lambda(k,l) e_{k,l}. Every
// coefficient table is an Nx-by-Ny Eigen array indexed (k-1, l-1).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "sib/detail/fft.hpp"

namespace sib {

using Complex = std::complex<double>;

template <class Scalar>
using Table = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
inline constexpr bool is_complex_v = false;
template <class T>
inline constexpr bool is_complex_v<std::complex<T>> = true;

template <class A, class B>
using promote_t = std::conditional_t<is_complex_v<A> || is_complex_v<B>, Complex, double>;

class Grid2D;
using GridPtr = std::shared_ptr<const Grid2D>;

class Grid2D {
public:
  Grid2D(double lx, double ly, int nx, int ny) : lx_(lx), ly_(ly), nx_(nx), ny_(ny) {
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
      throw std::invalid_argument("grid: lengths must be positive and finite");
    if (nx < 1 || ny < 1) throw std::invalid_argument("grid: mode counts must be >= 1");

    lambda_.resize(nx, ny);
    for (int l = 1; l <= ny; ++l)
      for (int k = 1; k <= nx; ++k) lambda_(k - 1, l - 1) = axis_eigenvalue(k, lx) + axis_eigenvalue(l, ly);

    project_x_ = cosine_to_sine(nx, lx);
    project_y_ = cosine_to_sine(ny, ly);
    parity_x_ = split_parity(project_x_);
    parity_y_ = split_parity(project_y_);
  }

  double Lx() const { return lx_; }
  double Ly() const { return ly_; }
  int Nx() const { return nx_; }
  int Ny() const { return ny_; }
  Eigen::Index modes() const { return static_cast<Eigen::Index>(nx_) * ny_; }

  /// lambda(k,l) for 1 <= k <= Nx, 1 <= l <= Ny.
  double eigenvalue(int k, int l) const { return lambda_(k - 1, l - 1); }
  const Table<double> &eigenvalues() const { return lambda_; }
  double min_eigenvalue() const { return lambda_(0, 0); }
  double max_eigenvalue() const { return lambda_(nx_ - 1, ny_ - 1); }

  /// Collocation nodes x_j = j*Lx/(Nx+1), y_m = m*Ly/(Ny+1).
  double node_x(int j) const { return j * lx_ / (nx_ + 1); }
  double node_y(int m) const { return m * ly_ / (ny_ + 1); }

  /// Refined grid used for quadrature: 2(Nx+1) intervals per axis, containing the native nodes.
  int refined_intervals_x() const { return 2 * (nx_ + 1); }
  int refined_intervals_y() const { return 2 * (ny_ + 1); }

  /// Closed grid used for exact products: K = 2Nx intervals per axis, enough
  /// to resolve a cosine series of degree 2Nx.
  int product_intervals_x() const { return 2 * nx_; }
  int product_intervals_y() const { return 2 * ny_; }

  bool same_as(const Grid2D &o) const {
    return this == &o || (lx_ == o.lx_ && ly_ == o.ly_ && nx_ == o.nx_ && ny_ == o.ny_);
  }

  // Columns already carry the DCT-I normalization; see product_dealiased.
  const Eigen::MatrixXd &cosine_projection_x() const { return project_x_; }
  const Eigen::MatrixXd &cosine_projection_y() const { return project_y_; }

  /// The projection splits by parity: sine mode m only sees cosines j with
  /// m + j odd. `odd` maps j = 0,2,..,K to m = 1,3,..; `even` maps
  /// j = 1,3,..,K-1 to m = 2,4,...
  struct ParityBlocks {
    Eigen::MatrixXd odd, even;
  };
  const ParityBlocks &parity_projection_x() const { return parity_x_; }
  const ParityBlocks &parity_projection_y() const { return parity_y_; }

private:
  static double axis_eigenvalue(int k, double len) {
    const double w = k * std::numbers::pi / len;
    return w * w;
  }

  // P(m, j) = <phi_m, cos(j pi x/L)> / (K * w_j) with phi_m = sqrt(2/L) sin(m pi x/L),
  // K = 2N and w_j = 2 at j in {0, K}, 1 otherwise. Applied to raw REDFT00
  // output it yields exact sine coefficients of a cosine polynomial of degree <= K.
  static Eigen::MatrixXd cosine_to_sine(int n, double len) {
    const int K = 2 * n;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, K + 1);
    const double scale = std::sqrt(2.0 * len) / std::numbers::pi;
    for (int m = 1; m <= n; ++m) {
      for (int j = 0; j <= K; ++j) {
        if ((m + j) % 2 == 0) continue;
        const double integral = 2.0 * m / (static_cast<double>(m) * m - static_cast<double>(j) * j);
        const double w = (j == 0 || j == K) ? 2.0 : 1.0;
        p(m - 1, j) = scale * integral / (K * w);
      }
    }
    return p;
  }

  static ParityBlocks split_parity(const Eigen::MatrixXd &p) {
    const auto n = p.rows();
    ParityBlocks b{Eigen::MatrixXd((n + 1) / 2, n + 1), Eigen::MatrixXd(n / 2, n)};
    for (Eigen::Index m = 0; m < n; ++m)
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (m % 2 == 0) b.odd(m / 2, j) = p(m, 2 * j);
        else if (j < n) b.even(m / 2, j) = p(m, 2 * j + 1);
      }
    return b;
  }

  double lx_, ly_;
  int nx_, ny_;
  Table<double> lambda_;
  Eigen::MatrixXd project_x_, project_y_;
  ParityBlocks parity_x_, parity_y_;
};

inline GridPtr make_grid(double lx, double ly, int nx, int ny) {
  return std::make_shared<const Grid2D>(lx, ly, nx, ny);
}

template <class Scalar>
class Field {
public:
  using scalar_type = Scalar;
  static constexpr bool is_complex = is_complex_v<Scalar>;

  explicit Field(GridPtr grid) : grid_(std::move(grid)) {
    if (!grid_) throw std::invalid_argument("field: null grid");
    coeffs_ = Table<Scalar>::Zero(grid_->Nx(), grid_->Ny());
  }

  Field(GridPtr grid, Table<Scalar> coeffs) : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
    if (!grid_) throw std::invalid_argument("field: null grid");
    if (coeffs_.rows() != grid_->Nx() || coeffs_.cols() != grid_->Ny())
      throw std::invalid_argument("field: coefficient table does not match grid");
  }

  /// Unit coefficient on mode (k,l), i.e. the basis function e_{k,l}.
  static Field basis(GridPtr grid, int k, int l) {
    Field f(std::move(grid));
    f.coeffs_(k - 1, l - 1) = Scalar(1);
    return f;
  }

  const GridPtr &grid() const { return grid_; }
  const Table<Scalar> &coeffs() const { return coeffs_; }
  Table<Scalar> &coeffs() { return coeffs_; }
  Scalar &operator()(int k, int l) { return coeffs_(k - 1, l - 1); }
  Scalar operator()(int k, int l) const { return coeffs_(k - 1, l - 1); }

  bool is_zero() const { return (coeffs_ == Scalar(0)).all(); }
  bool all_finite() const { return coeffs_.isFinite().all(); }

  Field<Complex> to_complex() const {
    return Field<Complex>(grid_, coeffs_.template cast<Complex>());
  }

  Field &operator+=(const Field &o) {
    require_same_grid(o);
    coeffs_ += o.coeffs_;
    return *this;
  }
  Field &operator-=(const Field &o) {
    require_same_grid(o);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  Field &operator*=(double s) {
    coeffs_ *= s;
    return *this;
  }

  friend Field operator+(Field a, const Field &b) { return a += b; }
  friend Field operator-(Field a, const Field &b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }

  template <class Other>
  void require_same_grid(const Field<Other> &o) const {
    if (!grid_->same_as(*o.grid())) throw std::invalid_argument("field: grid mismatch");
  }

private:
  GridPtr grid_;
  Table<Scalar> coeffs_;
};

using RealField = Field<double>;
using ComplexField = Field<Complex>;

inline ComplexField operator*(Complex s, const ComplexField &f) {
  return ComplexField(f.grid(), f.coeffs() * s);
}

namespace detail {

template <class Scalar>
inline constexpr int channels_v = is_complex_v<Scalar> ? 2 : 1;

template <class Scalar>
double *raw(Table<Scalar> &t) {
  return reinterpret_cast<double *>(t.data());
}

// Synthesis of nx-by-ny coefficients on the interior nodes of a grid with
// (nx+1) x (ny+1) intervals.
template <class Scalar>
Table<Scalar> dst_synthesize(Table<Scalar> c, double lx, double ly) {
  const int nx = static_cast<int>(c.rows()), ny = static_cast<int>(c.cols());
  r2r_2d(R2RKind::dst1, raw(c), nx, ny, channels_v<Scalar>);
  c *= 0.25 * std::sqrt(2.0 / lx) * std::sqrt(2.0 / ly);
  return c;
}

template <class Scalar>
Table<Scalar> dst_analyze(Table<Scalar> s, double lx, double ly) {
  const int nx = static_cast<int>(s.rows()), ny = static_cast<int>(s.cols());
  r2r_2d(R2RKind::dst1, raw(s), nx, ny, channels_v<Scalar>);
  s *= 0.25 * std::sqrt(2.0 / lx) * (lx / (nx + 1)) * std::sqrt(2.0 / ly) * (ly / (ny + 1));
  return s;
}

}  // namespace detail

/// Coefficients of the band-limited interpolant of nodal samples (DST-I).
template <class Scalar>
Field<Scalar> analyze(const Table<Scalar> &samples, const GridPtr &grid) {
  if (samples.rows() != grid->Nx() || samples.cols() != grid->Ny())
    throw std::invalid_argument("analyze: sample table does not match grid nodes");
  return Field<Scalar>(grid, detail::dst_analyze<Scalar>(samples, grid->Lx(), grid->Ly()));
}

/// Nodal values at x_j, y_m (1-based nodes stored at index (j-1, m-1)).
template <class Scalar>
Table<Scalar> synthesize(const Field<Scalar> &f) {
  return detail::dst_synthesize<Scalar>(f.coeffs(), f.grid()->Lx(), f.grid()->Ly());
}

/// Samples on the interior nodes of the 2x refined grid, (2Nx+1) x (2Ny+1).
template <class Scalar>
Table<Scalar> synthesize_refined(const Field<Scalar> &f) {
  const auto &g = *f.grid();
  Table<Scalar> padded = Table<Scalar>::Zero(2 * g.Nx() + 1, 2 * g.Ny() + 1);
  padded.topLeftCorner(g.Nx(), g.Ny()) = f.coeffs();
  return detail::dst_synthesize<Scalar>(std::move(padded), g.Lx(), g.Ly());
}

/// Trapezoid projection of refined-grid samples onto the retained modes.
template <class Scalar>
Field<Scalar> analyze_refined(const Table<Scalar> &samples, const GridPtr &grid) {
  if (samples.rows() != 2 * grid->Nx() + 1 || samples.cols() != 2 * grid->Ny() + 1)
    throw std::invalid_argument("analyze_refined: sample table does not match refined grid");
  Table<Scalar> c = detail::dst_analyze<Scalar>(samples, grid->Lx(), grid->Ly());
  return Field<Scalar>(grid, c.topLeftCorner(grid->Nx(), grid->Ny()));
}

namespace detail {

// Samples on the closed (Kx+1) x (Ky+1) product grid, zero on the boundary.
template <class Scalar>
Table<Scalar> closed_product_samples(const Field<Scalar> &f) {
  const auto &g = *f.grid();
  const int kx = g.product_intervals_x(), ky = g.product_intervals_y();
  Table<Scalar> padded = Table<Scalar>::Zero(kx - 1, ky - 1);
  padded.topLeftCorner(g.Nx(), g.Ny()) = f.coeffs();
  Table<Scalar> s = Table<Scalar>::Zero(kx + 1, ky + 1);
  s.block(1, 1, kx - 1, ky - 1) = dst_synthesize<Scalar>(std::move(padded), g.Lx(), g.Ly());
  return s;
}

// Exact sine projection of a nodal product whose cosine degree is <= K per axis.
template <class Scalar>
Field<Scalar> project_cosine_samples(Table<Scalar> s, const GridPtr &grid) {
  r2r_2d(R2RKind::dct1, raw(s), static_cast<int>(s.rows()), static_cast<int>(s.cols()),
         channels_v<Scalar>);
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Strided = Eigen::Map<Mat, 0, Eigen::OuterStride<>>;
  using ConstStrided = Eigen::Map<const Mat, 0, Eigen::OuterStride<>>;
  const auto &bx = grid->parity_projection_x();
  const auto &by = grid->parity_projection_y();
  const Eigen::Index rows = s.rows(), nx = grid->Nx(), ny = grid->Ny();

  // y first: every other column of s feeds every other column of t.
  Mat t(rows, ny);
  const ConstStrided s_even(s.data(), rows, ny + 1, Eigen::OuterStride<>(2 * rows));
  const ConstStrided s_odd(s.data() + rows, rows, ny, Eigen::OuterStride<>(2 * rows));
  Strided(t.data(), rows, (ny + 1) / 2, Eigen::OuterStride<>(2 * rows)).noalias() = s_even * by.odd.transpose();
  Strided(t.data() + rows, rows, ny / 2, Eigen::OuterStride<>(2 * rows)).noalias() = s_odd * by.even.transpose();

  // then x, on row subsets of t.
  const Mat t_even = t(Eigen::seq(0, rows - 1, 2), Eigen::all);
  const Mat t_odd = t(Eigen::seq(1, rows - 2, 2), Eigen::all);
  Table<Scalar> c(nx, ny);
  c.matrix()(Eigen::seq(0, nx - 1, 2), Eigen::all) = bx.odd * t_even;
  if (nx > 1) c.matrix()(Eigen::seq(1, nx - 1, 2), Eigen::all) = bx.even * t_odd;
  return Field<Scalar>(grid, std::move(c));
}

}  // namespace detail

/// Pre-sampled factor for repeated products against a fixed field.
template <class Scalar>
class ProductFactor {
public:
  explicit ProductFactor(const Field<Scalar> &f)
      : grid_(f.grid()), samples_(detail::closed_product_samples(f)) {}

  const GridPtr &grid() const { return grid_; }
  const Table<Scalar> &samples() const { return samples_; }
  double max_abs() const { return samples_.abs().maxCoeff(); }

  template <class Other>
  Field<promote_t<Scalar, Other>> times(const Field<Other> &b) const {
    using R = promote_t<Scalar, Other>;
    if (!grid_->same_as(*b.grid())) throw std::invalid_argument("product: grid mismatch");
    Table<Other> sb = detail::closed_product_samples(b);
    Table<R> prod = samples_.template cast<R>() * sb.template cast<R>();
    return detail::project_cosine_samples<R>(std::move(prod), grid_);
  }

private:
  GridPtr grid_;
  Table<Scalar> samples_;
};

/// L2 projection of a*b onto the retained modes.
///
/// A product of two sine series is a cosine series of degree <= Nx+Nx per
/// axis; it is sampled exactly on a closed grid of 2Nx x 2Ny intervals, recovered by
/// DCT-I, and projected onto the sine modes with the closed-form
/// cosine/sine overlap integrals. No aliasing enters retained modes.
template <class A, class B>
Field<promote_t<A, B>> product_dealiased(const Field<A> &a, const Field<B> &b) {
  a.require_same_grid(b);
  return ProductFactor<A>(a).times(b);
}

/// |u|^2 projected onto the retained modes (real).
inline RealField modulus_squared(const ComplexField &u) {
  Table<Complex> s = detail::closed_product_samples(u);
  Table<double> m = s.abs2();
  return detail::project_cosine_samples<double>(std::move(m), u.grid());
}
inline RealField modulus_squared(const RealField &u) { return product_dealiased(u, u); }

/// Collocation product on the native nodes (aliased).
template <class A, class B>
Field<promote_t<A, B>> product_nodal(const Field<A> &a, const Field<B> &b) {
  a.require_same_grid(b);
  using R = promote_t<A, B>;
  Table<R> s = synthesize(a).template cast<R>() * synthesize(b).template cast<R>();
  return analyze<R>(s, a.grid());
}

/// Coefficient-space inner product <a, b> = sum conj(a) b.
template <class A, class B>
promote_t<A, B> inner(const Field<A> &a, const Field<B> &b) {
  a.require_same_grid(b);
  using R = promote_t<A, B>;
  if constexpr (is_complex_v<A>) {
    return (a.coeffs().conjugate().template cast<R>() * b.coeffs().template cast<R>()).sum();
  } else {
    return (a.coeffs().template cast<R>() * b.coeffs().template cast<R>()).sum();
  }
}

/// (sum lambda^s |c|^2)^(1/2) for s in {-1, -1/2, 0, 1/2, 1, 2}.
template <class Scalar>
double sobolev_norm(const Field<Scalar> &f, double s) {
  static constexpr double allowed[] = {-1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
  if (std::none_of(std::begin(allowed), std::end(allowed), [s](double a) { return a == s; }))
    throw std::invalid_argument("sobolev_norm: unsupported exponent " + std::to_string(s));
  const Table<double> m2 = f.coeffs().abs2();
  if (s == 0.0) return std::sqrt(m2.sum());
  return std::sqrt((f.grid()->eigenvalues().pow(s) * m2).sum());
}

/// Inhomogeneous norm (sum (1+lambda)^s |c|^2)^(1/2); s = 1 gives
/// (||f||^2 + ||grad f||^2)^(1/2).
template <class Scalar>
double h_norm(const Field<Scalar> &f, double s) {
  return std::sqrt(((1.0 + f.grid()->eigenvalues()).pow(s) * f.coeffs().abs2()).sum());
}

/// L^p norm by trapezoid quadrature on the 2x refined grid. Boundary nodes
/// carry zero weight since fields vanish there.
template <class Scalar>
double lp_norm(const Field<Scalar> &f, double p) {
  if (!(p >= 2.0) || !std::isfinite(p)) throw std::invalid_argument("lp_norm: p must be finite and >= 2");
  if (f.is_zero()) return 0.0;
  const auto &g = *f.grid();
  const double cell = (g.Lx() / g.refined_intervals_x()) * (g.Ly() / g.refined_intervals_y());
  const Table<double> a = synthesize_refined(f).abs();
  // Scale by the max to keep |f|^p finite for large p.
  const double amax = a.maxCoeff();
  const double sum = (a / amax).pow(p).sum();
  return amax * std::pow(sum * cell, 1.0 / p);
}

}  // namespace sib
