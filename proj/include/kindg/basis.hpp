#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "kindg/errors.hpp"
#include "kindg/grid.hpp"
#include "kindg/quadrature.hpp"

namespace kindg {

/// P: total degree <= k.  Q: degree <= k in each variable.
enum class SpaceType { P, Q };

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Orthonormal modal basis on the reference cell [-1,1]^3 = (xi, eta, zeta),
/// zeta being the angular direction.
///
/// Functions are products of normalized Legendre polynomials and are orthonormal
/// under the averaged measure d(xi) d(eta) d(zeta) / 8, so the physical mass
/// matrix of a cell K is |K| times the identity and the first coefficient is
/// the cell mean.
///
/// Quadrature is a tensor Gauss rule with `points_per_axis()` nodes. Point
/// orderings used by every tabulation:
///   volume   q = a + n (b + n c)      (xi_a, eta_b, zeta_c)
///   x-face   p = b + n c              (eta_b, zeta_c)
///   y-face   p = a + n c              (xi_a, zeta_c)
///   theta    p = a + n b              (xi_a, eta_b), also the spatial point order
template <typename Scalar = double>
class BasisSet {
 public:
  using Mode = std::array<int, 3>;

  explicit BasisSet(int degree, SpaceType space = SpaceType::P, int points_per_axis = 0)
      : degree_(degree), space_(space) {
    if (degree < 0) throw ConfigError("basis: degree must be >= 0");
    n1_ = points_per_axis > 0 ? points_per_axis : degree + 2;
    if (n1_ < degree + 1) throw ConfigError("basis: quadrature needs >= k+1 points per axis");

    for (int d = 0; d <= (space == SpaceType::P ? degree : 3 * degree); ++d)
      for (int c = 0; c <= std::min(d, degree); ++c)
        for (int b = 0; b <= std::min(d - c, degree); ++b) {
          const int a = d - b - c;
          if (a <= degree) modes_.push_back({a, b, c});
        }

    rule_ = gauss_rule<Scalar>(n1_);
    weights1_ = rule_.weights / Scalar(2);
    tabulate();
  }

  int degree() const { return degree_; }
  SpaceType space() const { return space_; }
  Index size() const { return static_cast<Index>(modes_.size()); }
  int points_per_axis() const { return n1_; }
  Index volume_points() const { return Index(n1_) * n1_ * n1_; }
  Index face_points() const { return Index(n1_) * n1_; }
  const std::vector<Mode>& modes() const { return modes_; }

  /// 1D nodes on [-1,1] and weights normalized to sum 1.
  const Vector<Scalar>& nodes() const { return rule_.nodes; }
  const Vector<Scalar>& weights() const { return weights1_; }

  Scalar value(Index i, Scalar xi, Scalar eta, Scalar zeta) const {
    const Mode& m = modes_[static_cast<std::size_t>(i)];
    return legendre_normalized(m[0], xi).first * legendre_normalized(m[1], eta).first *
           legendre_normalized(m[2], zeta).first;
  }

  Vector<Scalar> values(Scalar xi, Scalar eta, Scalar zeta) const {
    Vector<Scalar> v(size());
    for (Index i = 0; i < size(); ++i) v(i) = value(i, xi, eta, zeta);
    return v;
  }

  /// Basis values at volume points, volume_points() x size().
  const Matrix<Scalar>& volume_values() const { return vol_; }
  /// Reference derivative d/d(xi), d/d(eta) or d/d(zeta) at volume points.
  const Matrix<Scalar>& volume_derivative(Axis axis) const { return dvol_[int(axis)]; }
  /// Tensor weights at volume points, summing to 1.
  const Vector<Scalar>& volume_weights() const { return wvol_; }

  /// Trace on the face normal to `axis` at reference coordinate +1 (side > 0) or -1.
  const Matrix<Scalar>& face_trace(Axis axis, int side) const { return trace_[int(axis)][side > 0 ? 1 : 0]; }
  /// Tensor weights at face points, summing to 1.
  const Vector<Scalar>& face_weights() const { return wface_; }

 private:
  void tabulate() {
    const Index nb = size(), nq = volume_points(), np = face_points();
    const auto& x = rule_.nodes;

    // 1D tables: value and derivative of each degree at each node and at +-1.
    Matrix<Scalar> L(n1_, degree_ + 1), dL(n1_, degree_ + 1);
    Vector<Scalar> Lp(degree_ + 1), Lm(degree_ + 1);
    for (int d = 0; d <= degree_; ++d) {
      for (int a = 0; a < n1_; ++a) {
        const auto [v, dv] = legendre_normalized(d, x(a));
        L(a, d) = v;
        dL(a, d) = dv;
      }
      Lp(d) = legendre_normalized(d, Scalar(1)).first;
      Lm(d) = legendre_normalized(d, Scalar(-1)).first;
    }

    vol_.resize(nq, nb);
    for (auto& m : dvol_) m.resize(nq, nb);
    wvol_.resize(nq);
    for (int c = 0; c < n1_; ++c)
      for (int b = 0; b < n1_; ++b)
        for (int a = 0; a < n1_; ++a) {
          const Index q = a + n1_ * (b + n1_ * c);
          wvol_(q) = weights1_(a) * weights1_(b) * weights1_(c);
          for (Index i = 0; i < nb; ++i) {
            const Mode& m = modes_[static_cast<std::size_t>(i)];
            vol_(q, i) = L(a, m[0]) * L(b, m[1]) * L(c, m[2]);
            dvol_[0](q, i) = dL(a, m[0]) * L(b, m[1]) * L(c, m[2]);
            dvol_[1](q, i) = L(a, m[0]) * dL(b, m[1]) * L(c, m[2]);
            dvol_[2](q, i) = L(a, m[0]) * L(b, m[1]) * dL(c, m[2]);
          }
        }

    wface_.resize(np);
    for (auto& axis : trace_)
      for (auto& side : axis) side.resize(np, nb);
    for (int t = 0; t < n1_; ++t)
      for (int s = 0; s < n1_; ++s) {
        const Index p = s + n1_ * t;
        wface_(p) = weights1_(s) * weights1_(t);
        for (Index i = 0; i < nb; ++i) {
          const Mode& m = modes_[static_cast<std::size_t>(i)];
          // x-face: (eta_s, zeta_t); y-face: (xi_s, zeta_t); theta-face: (xi_s, eta_t).
          trace_[0][1](p, i) = Lp(m[0]) * L(s, m[1]) * L(t, m[2]);
          trace_[0][0](p, i) = Lm(m[0]) * L(s, m[1]) * L(t, m[2]);
          trace_[1][1](p, i) = L(s, m[0]) * Lp(m[1]) * L(t, m[2]);
          trace_[1][0](p, i) = L(s, m[0]) * Lm(m[1]) * L(t, m[2]);
          trace_[2][1](p, i) = L(s, m[0]) * L(t, m[1]) * Lp(m[2]);
          trace_[2][0](p, i) = L(s, m[0]) * L(t, m[1]) * Lm(m[2]);
        }
      }
  }

  int degree_;
  SpaceType space_;
  int n1_ = 0;
  std::vector<Mode> modes_;
  GaussRule<Scalar> rule_;
  Vector<Scalar> weights1_;
  Matrix<Scalar> vol_;
  std::array<Matrix<Scalar>, 3> dvol_;
  Vector<Scalar> wvol_;
  std::array<std::array<Matrix<Scalar>, 2>, 3> trace_;
  Vector<Scalar> wface_;
};

struct DensityTag {};
struct TangentTag {};

/// Per-cell modal coefficients on a PhaseMesh, column c holding cell c.
template <typename Scalar, typename Tag>
struct ModalField {
  PhaseMesh<Scalar> mesh;
  Matrix<Scalar> coeffs;

  ModalField() = default;
  ModalField(const PhaseMesh<Scalar>& m, Index basis_size)
      : mesh(m), coeffs(Matrix<Scalar>::Zero(basis_size, m.n_cells())) {}
  ModalField(const PhaseMesh<Scalar>& m, Matrix<Scalar> c) : mesh(m), coeffs(std::move(c)) {
    if (coeffs.cols() != mesh.n_cells())
      throw ConfigError("field: coefficient array does not match the mesh cell count");
  }

  Index basis_size() const { return coeffs.rows(); }
};

/// f_h, the phase-space density.
template <typename Scalar = double>
using DGField = ModalField<Scalar, DensityTag>;
/// q_h, the angular LDG gradient of f_h (a scalar on S^1).
template <typename Scalar = double>
using TangentField = ModalField<Scalar, TangentTag>;

/// Samples of `field` at all volume quadrature points, volume_points() x n_cells.
template <typename Scalar, typename Tag>
Matrix<Scalar> sample_volume(const ModalField<Scalar, Tag>& field, const BasisSet<Scalar>& basis) {
  return basis.volume_values() * field.coeffs;
}

/// Evaluates g(x, y, theta) at every volume quadrature point.
template <typename Scalar, typename Fn>
Matrix<Scalar> sample_function(Fn&& g, const PhaseMesh<Scalar>& mesh, const BasisSet<Scalar>& basis) {
  const int n = basis.points_per_axis();
  const auto& z = basis.nodes();
  Matrix<Scalar> values(basis.volume_points(), mesh.n_cells());
  for (Index it = 0; it < mesh.ntheta; ++it)
    for (Index iy = 0; iy < mesh.ny; ++iy)
      for (Index ix = 0; ix < mesh.nx; ++ix) {
        const Index cell = mesh.cell_index(ix, iy, it);
        for (int c = 0; c < n; ++c) {
          const Scalar th = mesh.theta_at(it, z(c));
          for (int b = 0; b < n; ++b) {
            const Scalar y = mesh.y_at(iy, z(b));
            for (int a = 0; a < n; ++a)
              values(a + n * (b + n * c), cell) = g(mesh.x_at(ix, z(a)), y, th);
          }
        }
      }
  return values;
}

/// Cell-wise L2 projection onto the DG space.
template <typename Scalar, typename Fn>
DGField<Scalar> project(Fn&& g, const PhaseMesh<Scalar>& mesh, const BasisSet<Scalar>& basis) {
  const Matrix<Scalar> samples = sample_function(g, mesh, basis);
  if (!samples.allFinite()) throw InputError("project: non-finite sample value");
  Matrix<Scalar> coeffs = basis.volume_values().transpose() * basis.volume_weights().asDiagonal() * samples;
  return DGField<Scalar>(mesh, std::move(coeffs));
}

/// Value of `field` at reference point (xi, eta, zeta) of `cell`.
template <typename Scalar, typename Tag>
Scalar field_eval(const ModalField<Scalar, Tag>& field, const BasisSet<Scalar>& basis, Index cell,
                  Scalar xi, Scalar eta, Scalar zeta) {
  if (cell < 0 || cell >= field.mesh.n_cells())
    throw IndexError("field_eval: cell index " + std::to_string(cell) + " out of range");
  return basis.values(xi, eta, zeta).dot(field.coeffs.col(cell));
}

}  // namespace kindg
