#pragma once

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "kindg/basis.hpp"
#include "kindg/errors.hpp"
#include "kindg/grid.hpp"

namespace kindg {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

/// Moments and orientation data on the spatial quadrature grid.
///
/// Every matrix is face_points() x n_spatial(): row s is the local spatial
/// Gauss point (xi_a, eta_b), s = a + n b, column is the spatial cell.
template <typename Scalar = double>
struct MacroFields {
  Matrix<Scalar> rho, mx, my;  // rho_h and rho_h u_h
  Matrix<Scalar> jx, jy;       // alignment integral J_h
  Matrix<Scalar> rx, ry;       // repulsion force R_h
  Matrix<Scalar> vfx, vfy;     // orientation v_f (zero where degenerate)
  /// true where every angular sample of f_h at that spatial point is >= 0
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> nonnegative;
  Index degenerate_points = 0;
};

/// What to do where |J + R| falls below the tolerance.
enum class OrientationPolicy {
  raise,      // throw DegenerateOrientation
  zero_drift  // set v_f = 0 there and count the point
};

/// Physical coordinates of the spatial quadrature grid.
template <typename Scalar>
struct SpatialGrid {
  Matrix<Scalar> x, y;  // face_points() x n_spatial()

  SpatialGrid(const PhaseMesh<Scalar>& mesh, const BasisSet<Scalar>& basis) {
    const int n = basis.points_per_axis();
    x.resize(basis.face_points(), mesh.n_spatial());
    y.resize(basis.face_points(), mesh.n_spatial());
    for (Index iy = 0; iy < mesh.ny; ++iy)
      for (Index ix = 0; ix < mesh.nx; ++ix)
        for (int b = 0; b < n; ++b)
          for (int a = 0; a < n; ++a) {
            x(a + n * b, mesh.spatial_index(ix, iy)) = mesh.x_at(ix, basis.nodes()(a));
            y(a + n * b, mesh.spatial_index(ix, iy)) = mesh.y_at(iy, basis.nodes()(b));
          }
  }
};

/// rho_h = int f_h dtheta and rho_h u_h = int (cos, sin) f_h dtheta at every
/// spatial quadrature point, by the angular Gauss rule of the basis.
template <typename Scalar>
MacroFields<Scalar> compute_moments(const DGField<Scalar>& f, const BasisSet<Scalar>& basis) {
  const auto& mesh = f.mesh;
  const int n = basis.points_per_axis();
  const Index nqs = basis.face_points(), nxy = mesh.n_spatial();
  const Matrix<Scalar> samples = sample_volume(f, basis);

  MacroFields<Scalar> m;
  m.rho = Matrix<Scalar>::Zero(nqs, nxy);
  m.mx = Matrix<Scalar>::Zero(nqs, nxy);
  m.my = Matrix<Scalar>::Zero(nqs, nxy);
  Matrix<Scalar> fmin = Matrix<Scalar>::Constant(nqs, nxy, std::numeric_limits<Scalar>::infinity());
  for (Index it = 0; it < mesh.ntheta; ++it)
    for (int c = 0; c < n; ++c) {
      const Scalar th = mesh.theta_at(it, basis.nodes()(c));
      const Scalar w = basis.weights()(c) * mesh.dtheta;
      const auto block = samples.block(Index(c) * nqs, it * nxy, nqs, nxy);
      m.rho.noalias() += w * block;
      m.mx.noalias() += (w * std::cos(th)) * block;
      m.my.noalias() += (w * std::sin(th)) * block;
      fmin = fmin.cwiseMin(block);
    }
  m.nonnegative = fmin.array() >= Scalar(0);
  return m;
}

/// Periodic discrete convolution on the spatial quadrature grid.
///
/// out(s, t) = sum_{s', t'} T_{s s'}(t - t') in(s', t'), with s, s' local Gauss
/// points and t, t' spatial cells. The quadrature area weight of the source
/// point is folded into T. Grid translations by whole cells commute with it.
template <typename Scalar = double>
class ConvolutionTable {
 public:
  using Complex = std::complex<Scalar>;
  using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

  /// Samples kernel(dx, dy), dx = x_target - x_source, summed over periodic
  /// images within `support_radius`.
  template <typename Fn>
  ConvolutionTable(const PhaseMesh<Scalar>& mesh, const BasisSet<Scalar>& basis, Fn&& kernel,
                   Scalar support_radius)
      : nx_(mesh.nx), ny_(mesh.ny), nqs_(basis.face_points()) {
    if (!(support_radius > 0)) throw ConfigError("convolution: support radius must be positive");
    const int n = basis.points_per_axis();
    const auto& z = basis.nodes();
    const auto& w = basis.weights();
    const Scalar lx = mesh.x_hi - mesh.x_lo, ly = mesh.y_hi - mesh.y_lo;
    const Index mx = Index(std::ceil(support_radius / lx)) + 1;
    const Index my = Index(std::ceil(support_radius / ly)) + 1;
    const Scalar r2max = support_radius * support_radius;

    blocks_.assign(static_cast<std::size_t>(nqs_ * nqs_), Matrix<Scalar>::Zero(nx_, ny_));
    for (Index s = 0; s < nqs_; ++s)
      for (Index sp = 0; sp < nqs_; ++sp) {
        const Scalar ox = mesh.dx * (z(s % n) - z(sp % n)) / 2;
        const Scalar oy = mesh.dy * (z(s / n) - z(sp / n)) / 2;
        const Scalar area = w(sp % n) * w(sp / n) * mesh.dx * mesh.dy;
        Matrix<Scalar>& T = blocks_[static_cast<std::size_t>(s * nqs_ + sp)];
        for (Index dj = 0; dj < ny_; ++dj)
          for (Index di = 0; di < nx_; ++di) {
            Scalar acc = 0;
            for (Index imy = -my; imy <= my; ++imy)
              for (Index imx = -mx; imx <= mx; ++imx) {
                const Scalar ddx = Scalar(di) * mesh.dx + ox + Scalar(imx) * lx;
                const Scalar ddy = Scalar(dj) * mesh.dy + oy + Scalar(imy) * ly;
                if (ddx * ddx + ddy * ddy <= r2max) acc += kernel(ddx, ddy);
              }
            T(di, dj) = acc * area;
          }
      }
    build_spectra();
  }

  /// Table given directly: blocks[s * nqs + s'] is the nx x ny array of T_{s s'}.
  ConvolutionTable(Index nx, Index ny, Index nqs, std::vector<Matrix<Scalar>> blocks)
      : nx_(nx), ny_(ny), nqs_(nqs), blocks_(std::move(blocks)) {
    if (static_cast<Index>(blocks_.size()) != nqs_ * nqs_)
      throw ConfigError("convolution: expected nqs^2 kernel blocks");
    for (const auto& b : blocks_)
      if (b.rows() != nx_ || b.cols() != ny_) throw ConfigError("convolution: kernel block shape mismatch");
    build_spectra();
  }

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  Index local_points() const { return nqs_; }
  const Matrix<Scalar>& block(Index s, Index sp) const { return blocks_[static_cast<std::size_t>(s * nqs_ + sp)]; }

  /// Kernel mass seen by each target point: sum over all sources of T.
  Vector<Scalar> row_mass() const {
    Vector<Scalar> m = Vector<Scalar>::Zero(nqs_);
    for (Index s = 0; s < nqs_; ++s)
      for (Index sp = 0; sp < nqs_; ++sp) m(s) += block(s, sp).sum();
    return m;
  }
  Scalar mass() const { return row_mass().mean(); }

  /// FFT evaluation.
  Matrix<Scalar> apply(const Matrix<Scalar>& in) const {
    check(in);
    const Index nxy = nx_ * ny_;
    std::vector<CMatrix> in_hat(static_cast<std::size_t>(nqs_));
    for (Index sp = 0; sp < nqs_; ++sp) {
      CMatrix g(nx_, ny_);
      for (Index t = 0; t < nxy; ++t) g(t % nx_, t / nx_) = Complex(in(sp, t), 0);
      fft2(g, false);
      in_hat[static_cast<std::size_t>(sp)] = std::move(g);
    }
    Matrix<Scalar> out(nqs_, nxy);
    CMatrix acc(nx_, ny_);
    for (Index s = 0; s < nqs_; ++s) {
      acc.setZero();
      for (Index sp = 0; sp < nqs_; ++sp)
        acc.array() += spectra_[static_cast<std::size_t>(s * nqs_ + sp)].array() *
                       in_hat[static_cast<std::size_t>(sp)].array();
      fft2(acc, true);
      for (Index t = 0; t < nxy; ++t) out(s, t) = acc(t % nx_, t / nx_).real();
    }
    return out;
  }

  /// Direct summation; O((nqs * nx * ny)^2).
  Matrix<Scalar> apply_direct(const Matrix<Scalar>& in) const {
    check(in);
    const Index nxy = nx_ * ny_;
    Matrix<Scalar> out = Matrix<Scalar>::Zero(nqs_, nxy);
    for (Index t = 0; t < nxy; ++t) {
      const Index ti = t % nx_, tj = t / nx_;
      for (Index src = 0; src < nxy; ++src) {
        const Index di = (ti - src % nx_ + nx_) % nx_, dj = (tj - src / nx_ + ny_) % ny_;
        for (Index s = 0; s < nqs_; ++s) {
          Scalar acc = 0;
          for (Index sp = 0; sp < nqs_; ++sp) acc += block(s, sp)(di, dj) * in(sp, src);
          out(s, t) += acc;
        }
      }
    }
    return out;
  }

 private:
  void check(const Matrix<Scalar>& in) const {
    if (in.rows() != nqs_ || in.cols() != nx_ * ny_)
      throw ConfigError("convolution: field grid does not match the kernel table grid");
  }

  void build_spectra() {
    spectra_.clear();
    spectra_.reserve(blocks_.size());
    for (const auto& b : blocks_) {
      CMatrix g = b.template cast<Complex>();
      fft2(g, false);
      spectra_.push_back(std::move(g));
    }
  }

  void fft2(CMatrix& g, bool inverse) const {
    std::vector<Complex> src, dst;
    src.resize(static_cast<std::size_t>(nx_));
    for (Index j = 0; j < ny_; ++j) {
      for (Index i = 0; i < nx_; ++i) src[static_cast<std::size_t>(i)] = g(i, j);
      inverse ? fft_.inv(dst, src) : fft_.fwd(dst, src);
      for (Index i = 0; i < nx_; ++i) g(i, j) = dst[static_cast<std::size_t>(i)];
    }
    src.resize(static_cast<std::size_t>(ny_));
    for (Index i = 0; i < nx_; ++i) {
      for (Index j = 0; j < ny_; ++j) src[static_cast<std::size_t>(j)] = g(i, j);
      inverse ? fft_.inv(dst, src) : fft_.fwd(dst, src);
      for (Index j = 0; j < ny_; ++j) g(i, j) = dst[static_cast<std::size_t>(j)];
    }
  }

  Index nx_, ny_, nqs_;
  std::vector<Matrix<Scalar>> blocks_;
  std::vector<CMatrix> spectra_;
  mutable Eigen::FFT<Scalar> fft_;
};

enum class KernelKind { none, gaussian, compact };

/// Radial alignment kernel k(|x|).
///   gaussian: exp(-r^2 / (2 sigma^2)), truncated at cutoff_sigmas * sigma
///   compact:  (1 - r^2 / sigma^2)^3 for r < sigma
template <typename Scalar = double>
struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  Scalar sigma = Scalar(0.1);
  Scalar cutoff_sigmas = Scalar(6);

  void validate() const {
    if (kind != KernelKind::none && !(sigma > 0)) throw ConfigError("kernel.sigma must be positive");
    if (kind == KernelKind::gaussian && !(cutoff_sigmas > 0)) throw ConfigError("kernel.cutoff must be positive");
  }
  Scalar support() const { return kind == KernelKind::compact ? sigma : cutoff_sigmas * sigma; }
  Scalar operator()(Scalar r) const {
    switch (kind) {
      case KernelKind::gaussian: return std::exp(-r * r / (2 * sigma * sigma));
      case KernelKind::compact: {
        const Scalar u = 1 - r * r / (sigma * sigma);
        return u > 0 ? u * u * u : Scalar(0);
      }
      default: return 0;
    }
  }
};

enum class PotentialKind { none, gaussian };

/// Attraction-repulsion potential phi(r) = strength * exp(-r^2 / (2 sigma^2)).
template <typename Scalar = double>
struct PotentialSpec {
  PotentialKind kind = PotentialKind::none;
  Scalar sigma = Scalar(0.1);
  Scalar strength = Scalar(1);
  Scalar cutoff_sigmas = Scalar(6);

  void validate() const {
    if (kind != PotentialKind::none && !(sigma > 0)) throw ConfigError("potential.sigma must be positive");
  }
  /// -grad phi(|d|) for displacement d = x - x'.
  Vec2<Scalar> force(Scalar dx, Scalar dy) const {
    if (kind == PotentialKind::none) return Vec2<Scalar>::Zero();
    const Scalar s2 = sigma * sigma;
    const Scalar phi = strength * std::exp(-(dx * dx + dy * dy) / (2 * s2));
    return Vec2<Scalar>(dx / s2 * phi, dy / s2 * phi);
  }
};

/// (J + R) / |J + R|.
template <typename Scalar>
Vec2<Scalar> orientation(const Vec2<Scalar>& J, const Vec2<Scalar>& R, Scalar tol) {
  if (!(tol > 0)) throw ConfigError("orientation: tolerance must be positive");
  const Vec2<Scalar> s = J + R;
  const Scalar m = std::hypot(s(0), s(1));
  if (!(m >= tol)) throw DegenerateOrientation(double(m), double(tol));
  return s / m;
}

/// Angular component of P_{v perp} v_f on S^1: v_f . (-sin theta, cos theta).
template <typename Scalar>
Scalar tangential_speed(const Vec2<Scalar>& vf, Scalar theta) {
  return -vf(0) * std::sin(theta) + vf(1) * std::cos(theta);
}

/// Fills vfx/vfy from jx+rx, jy+ry under the given degeneracy policy.
template <typename Scalar>
void compute_orientation(MacroFields<Scalar>& m, Scalar tol, OrientationPolicy policy,
                         const SpatialGrid<Scalar>* grid = nullptr) {
  m.vfx.resize(m.jx.rows(), m.jx.cols());
  m.vfy.resize(m.jx.rows(), m.jx.cols());
  m.degenerate_points = 0;
  for (Index t = 0; t < m.jx.cols(); ++t)
    for (Index s = 0; s < m.jx.rows(); ++s) {
      try {
        const Vec2<Scalar> v = orientation(Vec2<Scalar>(m.jx(s, t), m.jy(s, t)),
                                           Vec2<Scalar>(m.rx(s, t), m.ry(s, t)), tol);
        m.vfx(s, t) = v(0);
        m.vfy(s, t) = v(1);
      } catch (const DegenerateOrientation& e) {
        if (policy == OrientationPolicy::raise) {
          if (grid) throw e.at(double(grid->x(s, t)), double(grid->y(s, t)), e.time());
          throw;
        }
        m.vfx(s, t) = 0;
        m.vfy(s, t) = 0;
        ++m.degenerate_points;
      }
    }
}

/// The self-consistent orientation field v_{f_h}: moments, the alignment
/// convolution J_h = k * (rho u), the repulsion R_h = -(grad phi) * rho, and
/// the normalization.
template <typename Scalar = double>
class NonlocalModel {
 public:
  NonlocalModel(const PhaseMesh<Scalar>& mesh, const BasisSet<Scalar>& basis, const KernelSpec<Scalar>& kernel,
                const PotentialSpec<Scalar>& potential, Scalar tol,
                OrientationPolicy policy = OrientationPolicy::raise)
      : basis_(basis), grid_(mesh, basis), tol_(tol), policy_(policy) {
    kernel.validate();
    potential.validate();
    if (!(tol > 0)) throw ConfigError("orientation tolerance must be positive");
    if (kernel.kind != KernelKind::none) {
      alignment_.emplace(
          mesh, basis, [kernel](Scalar dx, Scalar dy) { return kernel(std::hypot(dx, dy)); }, kernel.support());
    }
    if (potential.kind != PotentialKind::none) {
      const Scalar radius = potential.cutoff_sigmas * potential.sigma;
      force_x_.emplace(mesh, basis, [potential](Scalar dx, Scalar dy) { return potential.force(dx, dy)(0); }, radius);
      force_y_.emplace(mesh, basis, [potential](Scalar dx, Scalar dy) { return potential.force(dx, dy)(1); }, radius);
    }
  }

  Scalar tolerance() const { return tol_; }
  OrientationPolicy policy() const { return policy_; }
  const SpatialGrid<Scalar>& grid() const { return grid_; }
  const std::optional<ConvolutionTable<Scalar>>& alignment_table() const { return alignment_; }
  Scalar kernel_mass() const { return alignment_ ? alignment_->mass() : Scalar(0); }

  MacroFields<Scalar> evaluate(const DGField<Scalar>& f) const {
    MacroFields<Scalar> m = compute_moments(f, basis_);
    const Index nqs = m.rho.rows(), nxy = m.rho.cols();
    if (alignment_) {
      m.jx = alignment_->apply(m.mx);
      m.jy = alignment_->apply(m.my);
    } else {
      m.jx = Matrix<Scalar>::Zero(nqs, nxy);
      m.jy = Matrix<Scalar>::Zero(nqs, nxy);
    }
    if (force_x_) {
      m.rx = force_x_->apply(m.rho);
      m.ry = force_y_->apply(m.rho);
    } else {
      m.rx = Matrix<Scalar>::Zero(nqs, nxy);
      m.ry = Matrix<Scalar>::Zero(nqs, nxy);
    }
    compute_orientation(m, tol_, policy_, &grid_);
    return m;
  }

 private:
  BasisSet<Scalar> basis_;
  SpatialGrid<Scalar> grid_;
  Scalar tol_;
  OrientationPolicy policy_;
  std::optional<ConvolutionTable<Scalar>> alignment_, force_x_, force_y_;
};

/// Macro fields carrying only a prescribed orientation vf(x, y) (unit or zero).
template <typename Scalar, typename Fn>
MacroFields<Scalar> prescribed_macro(const PhaseMesh<Scalar>& mesh, const BasisSet<Scalar>& basis, Fn&& vf) {
  const SpatialGrid<Scalar> grid(mesh, basis);
  const Index nqs = basis.face_points(), nxy = mesh.n_spatial();
  MacroFields<Scalar> m;
  m.vfx.resize(nqs, nxy);
  m.vfy.resize(nqs, nxy);
  for (Index t = 0; t < nxy; ++t)
    for (Index s = 0; s < nqs; ++s) {
      const Vec2<Scalar> v = vf(grid.x(s, t), grid.y(s, t));
      m.vfx(s, t) = v(0);
      m.vfy(s, t) = v(1);
    }
  return m;
}

}  // namespace kindg
