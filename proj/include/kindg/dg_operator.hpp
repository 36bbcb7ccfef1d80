#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "kindg/basis.hpp"
#include "kindg/errors.hpp"
#include "kindg/grid.hpp"
#include "kindg/nonlocal.hpp"

namespace kindg {

template <typename Scalar = double>
struct SimConfig {
  Scalar nu = 0;     // angular diffusion
  Scalar eps = 1;    // the angular operator is scaled by 1/eps
  Scalar c11 = 1;    // LDG penalty on [f]
  Scalar c22 = 1;    // LDG penalty on [q]
  Scalar cfl = Scalar(0.8);
  Scalar tol_orientation = 0;  // <= 0: derived from the initial data
  Scalar t_final = 1;
  Scalar snapshot_every = 0;   // <= 0: no periodic snapshots
  OrientationPolicy orientation_policy = OrientationPolicy::zero_drift;

  void validate() const {
    if (!(nu >= 0)) throw ConfigError("sim.nu must be >= 0");
    if (!(eps > 0)) throw ConfigError("sim.eps must be > 0");
    if (!(c11 > 0)) throw ConfigError("sim.c11 must be > 0");
    if (!(c22 > 0)) throw ConfigError("sim.c22 must be > 0");
    if (!(cfl > 0 && cfl <= 1)) throw ConfigError("time.cfl must lie in (0, 1]");
    if (!(t_final >= 0)) throw ConfigError("time.t_final must be >= 0");
  }
};

/// Upwind flux for transport with normal speed v.n: v.n {f} - |v.n|/2 [f].
template <typename Scalar>
Scalar flux_x(Scalar f_minus, Scalar f_plus, Scalar v_dot_n) {
  return v_dot_n * (f_minus + f_plus) / 2 - std::abs(v_dot_n) / 2 * (f_plus - f_minus);
}

/// Upwind flux in theta for the drift speed a; n = +-1 is the minus cell's normal.
template <typename Scalar>
Scalar flux_theta_adv(Scalar f_minus, Scalar f_plus, Scalar a, int n = 1) {
  const Scalar an = a * Scalar(n);
  return an * (f_minus + f_plus) / 2 - std::abs(a) / 2 * (f_plus - f_minus);
}

template <typename Scalar>
struct DiffusiveFlux {
  Scalar q_hat_dot_n;
  Scalar f_hat_dot_n;
};

/// LDG fluxes: q^.n = {q} n + C11/2 [f],  f^ n = {f} n + C22/2 [q], [g] = g+ - g-.
template <typename Scalar>
DiffusiveFlux<Scalar> flux_theta_diff(Scalar f_minus, Scalar f_plus, Scalar q_minus, Scalar q_plus, int n,
                                      Scalar c11, Scalar c22) {
  const Scalar sn = Scalar(n);
  return {(q_minus + q_plus) / 2 * sn + c11 / 2 * (f_plus - f_minus),
          (f_minus + f_plus) / 2 * sn + c22 / 2 * (q_plus - q_minus)};
}

/// Wraps a pointwise source g(t, x, y, theta) into the batched form.
template <typename Scalar, typename Fn>
auto pointwise_source(Fn g) {
  return [g](Scalar t, Scalar theta, const Matrix<Scalar>& x, const Matrix<Scalar>& y) {
    Matrix<Scalar> out(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j)
      for (Index i = 0; i < x.rows(); ++i) out(i, j) = g(t, x(i, j), y(i, j), theta);
    return out;
  };
}

/// Semi-discrete DG operator for
///   f_t + v . grad_x f = -(1/eps) d_theta [ a f - nu q ],  q = d_theta f,
/// with upwind transport fluxes and LDG fluxes for the angular diffusion.
///
/// All work is organized by theta slab: a slab is the contiguous block of
/// nx*ny cells sharing one angular cell, so volume terms are dense products
/// with the tabulated basis and neighbor access is a column shift.
template <typename Scalar = double>
class DGOperator {
 public:
  /// Source values at time t and angle theta on the whole spatial grid
  /// (x, y are face_points() x n_spatial()).
  using SourceFn = std::function<Matrix<Scalar>(Scalar t, Scalar theta, const Matrix<Scalar>& x,
                                                const Matrix<Scalar>& y)>;
  using Mat = Matrix<Scalar>;

  DGOperator(const PhaseMesh<Scalar>& mesh, const BasisSet<Scalar>& basis, const SimConfig<Scalar>& cfg)
      : mesh_(mesh), basis_(basis), cfg_(cfg), grid_(mesh, basis) {
    cfg_.validate();
    const Index nb = basis.size();
    const int n = basis.points_per_axis();
    const auto& wv = basis.volume_weights();
    const auto& wf = basis.face_weights();

    vt_w_ = basis.volume_values().transpose() * wv.asDiagonal();
    for (int ax = 0; ax < 3; ++ax) {
      dt_w_[ax] = basis.volume_derivative(Axis(ax)).transpose() * wv.asDiagonal();
      for (int side = 0; side < 2; ++side) {
        trace_[ax][side] = basis.face_trace(Axis(ax), side ? 1 : -1);
        trace_t_w_[ax][side] = trace_[ax][side].transpose() * wf.asDiagonal();
      }
    }

    cos_vol_.resize(n, mesh.ntheta);
    sin_vol_.resize(n, mesh.ntheta);
    for (Index it = 0; it < mesh.ntheta; ++it)
      for (int c = 0; c < n; ++c) {
        const Scalar th = mesh.theta_at(it, basis.nodes()(c));
        cos_vol_(c, it) = std::cos(th);
        sin_vol_(c, it) = std::sin(th);
      }
    cos_top_.resize(mesh.ntheta);
    sin_top_.resize(mesh.ntheta);
    for (Index it = 0; it < mesh.ntheta; ++it) {
      const Scalar th = mesh.theta_left(it + 1);
      cos_top_(it) = std::cos(th);
      sin_top_(it) = std::sin(th);
    }

    build_transport_blocks();
    build_angular_blocks();
    build_gradient_system(nb);
  }

  const PhaseMesh<Scalar>& mesh() const { return mesh_; }
  const BasisSet<Scalar>& basis() const { return basis_; }
  const SimConfig<Scalar>& config() const { return cfg_; }

  /// q_h from the LDG relation
  ///   int q u + int f d_theta u - sum_faces f^ n u^- = 0   for all u,
  /// solved exactly; with C22 > 0 this couples each theta column.
  TangentField<Scalar> ldg_gradient(const DGField<Scalar>& f) const {
    check(f);
    Mat q(basis_.size(), mesh_.n_cells());
    solve_gradient(f.coeffs, q);
    return TangentField<Scalar>(mesh_, std::move(q));
  }

  /// Time derivative of the coefficients of f_h given the macro fields of the
  /// same state (only vfx/vfy are read) and an optional source term.
  DGField<Scalar> residual(const DGField<Scalar>& f, const MacroFields<Scalar>& macro, Scalar t = 0,
                           const SourceFn* source = nullptr, TangentField<Scalar>* q_out = nullptr) const {
    check(f);
    const Index nxy = mesh_.n_spatial();
    const Index nqs = basis_.face_points();
    if (macro.vfx.rows() != nqs || macro.vfx.cols() != nxy || macro.vfy.rows() != nqs || macro.vfy.cols() != nxy)
      throw ConfigError("residual: macro fields do not match the mesh");

    const Index nb = basis_.size(), nt = mesh_.ntheta;
    const int n = basis_.points_per_axis();
    const Mat& V = basis_.volume_values();
    const Scalar inv_eps = Scalar(1) / cfg_.eps;

    // z = [q; f] so the angular stencil is one product per neighbor.
    Mat z(2 * nb, mesh_.n_cells());
    {
      Mat q(nb, mesh_.n_cells());
      solve_gradient(f.coeffs, q);
      z.topRows(nb) = q;
      z.bottomRows(nb) = f.coeffs;
    }

    Mat R(nb, mesh_.n_cells());
    Mat tmp(nb, nxy), carry(nb, nxy), fv(basis_.volume_points(), nxy), flux(nqs, nxy), a(nqs, nxy);
    for (Index it = 0; it < nt; ++it) {
      const Index up = (it + 1) % nt, dn = (it + nt - 1) % nt;
      const auto cj = slab(f.coeffs, it);
      auto rj = R.middleCols(it * nxy, nxy);

      rj.noalias() = self_[it] * slab(z, it);
      rj.noalias() += theta_up_ * slab(z, up);
      rj.noalias() += theta_dn_ * slab(z, dn);
      if (it > 0) rj += carry;

      tmp.noalias() = from_xp_[it] * cj;
      add_shifted(rj, tmp, 1, 0);
      tmp.noalias() = from_xm_[it] * cj;
      add_shifted(rj, tmp, -1, 0);
      tmp.noalias() = from_yp_[it] * cj;
      add_shifted(rj, tmp, 0, 1);
      tmp.noalias() = from_ym_[it] * cj;
      add_shifted(rj, tmp, 0, -1);

      // Angular drift a = vf . tau: volume term and upwind flux through the upper face.
      fv.noalias() = V * cj;
      for (int c = 0; c < n; ++c) {
        auto fb = fv.middleRows(Index(c) * nqs, nqs).array();
        fb *= cos_vol_(c, it) * macro.vfy.array() - sin_vol_(c, it) * macro.vfx.array();
      }
      rj.noalias() += (2 * inv_eps / mesh_.dtheta) * dt_w_[2] * fv;

      a.array() = cos_top_(it) * macro.vfy.array() - sin_top_(it) * macro.vfx.array();
      tmp.noalias() = trace_[2][1] * cj;
      flux.array() = a.array().max(Scalar(0)) * tmp.array();
      tmp.noalias() = trace_[2][0] * slab(f.coeffs, up);
      flux.array() += a.array().min(Scalar(0)) * tmp.array();
      rj.noalias() -= (inv_eps / mesh_.dtheta) * trace_t_w_[2][1] * flux;
      carry.noalias() = (inv_eps / mesh_.dtheta) * trace_t_w_[2][0] * flux;
    }
    R.leftCols(nxy) += carry;
    if (source)
      for (Index it = 0; it < nt; ++it) R.middleCols(it * nxy, nxy).noalias() += vt_w_ * sample_source(*source, t, it);
    if (q_out) *q_out = TangentField<Scalar>(mesh_, z.topRows(nb));
    return DGField<Scalar>(mesh_, std::move(R));
  }

  /// L2 projection of a source term at time t.
  DGField<Scalar> project_source(const SourceFn& source, Scalar t) const {
    Mat c(basis_.size(), mesh_.n_cells());
    for (Index it = 0; it < mesh_.ntheta; ++it)
      c.middleCols(it * mesh_.n_spatial(), mesh_.n_spatial()) = vt_w_ * sample_source(source, t, it);
    return DGField<Scalar>(mesh_, std::move(c));
  }

 private:
  template <typename M>
  auto slab(M& m, Index it) const {
    return m.middleCols(it * mesh_.n_spatial(), mesh_.n_spatial());
  }

  void check(const DGField<Scalar>& f) const {
    if (f.coeffs.rows() != basis_.size() || f.coeffs.cols() != mesh_.n_cells())
      throw ConfigError("DG operator: field layout does not match mesh and basis");
  }

  /// out(cell) += g(cell + (sx, sy)) over the periodic spatial grid.
  template <typename Out>
  void add_shifted(Out& out, const Mat& g, int sx, int sy) const {
    const Index nx = mesh_.nx, ny = mesh_.ny, nxy = nx * ny;
    if (sy != 0) {
      const Index k = sy > 0 ? nx : nxy - nx;
      out.leftCols(nxy - k) += g.rightCols(nxy - k);
      out.rightCols(k) += g.leftCols(k);
      return;
    }
    const Index k = sx > 0 ? 1 : nx - 1;
    for (Index iy = 0; iy < ny; ++iy) {
      const Index c0 = iy * nx;
      out.middleCols(c0, nx - k) += g.middleCols(c0 + k, nx - k);
      out.middleCols(c0 + nx - k, k) += g.middleCols(c0, k);
    }
  }

  /// Upwind transport v . grad_x f within a slab, reduced to constant blocks:
  /// the speed at a face point depends only on its theta node.
  void build_transport_blocks() {
    const Index nt = mesh_.ntheta, np = basis_.face_points();
    const int n = basis_.points_per_axis();
    const Mat& V = basis_.volume_values();
    const Index nv = basis_.volume_points(), nqs = basis_.face_points();
    from_xp_.resize(nt);
    from_xm_.resize(nt);
    from_yp_.resize(nt);
    from_ym_.resize(nt);
    for (Index it = 0; it < nt; ++it) {
      Vector<Scalar> cv(nv), sv(nv);
      for (Index r = 0; r < nv; ++r) {
        cv(r) = cos_vol_(r / nqs, it);
        sv(r) = sin_vol_(r / nqs, it);
      }
      Mat self = (2 / mesh_.dx) * dt_w_[0] * cv.asDiagonal() * V + (2 / mesh_.dy) * dt_w_[1] * sv.asDiagonal() * V;
      for (int ax = 0; ax < 2; ++ax) {
        const Scalar h = ax == 0 ? mesh_.dx : mesh_.dy;
        Vector<Scalar> pos(np), neg(np);
        for (Index p = 0; p < np; ++p) {
          const Scalar vn = ax == 0 ? cos_vol_(p / n, it) : sin_vol_(p / n, it);
          pos(p) = std::max(vn, Scalar(0));
          neg(p) = std::min(vn, Scalar(0));
        }
        const Mat& Tp = trace_[ax][1];
        const Mat& Tm = trace_[ax][0];
        self.noalias() -= (1 / h) * trace_t_w_[ax][1] * pos.asDiagonal() * Tp;
        self.noalias() += (1 / h) * trace_t_w_[ax][0] * neg.asDiagonal() * Tm;
        Mat from_plus = -(1 / h) * trace_t_w_[ax][1] * neg.asDiagonal() * Tm;
        Mat from_minus = (1 / h) * trace_t_w_[ax][0] * pos.asDiagonal() * Tp;
        (ax == 0 ? from_xp_ : from_yp_)[it] = std::move(from_plus);
        (ax == 0 ? from_xm_ : from_ym_)[it] = std::move(from_minus);
      }
      transport_self_.push_back(std::move(self));
    }
  }

  /// LDG diffusion and gradient right-hand side as stencils on theta neighbors.
  void build_angular_blocks() {
    const Index nb = basis_.size(), nt = mesh_.ntheta;
    const Scalar h = mesh_.dtheta, c11 = cfg_.c11;
    const Scalar s = cfg_.nu / cfg_.eps;
    const Mat& Tp = trace_[2][1];
    const Mat& Tm = trace_[2][0];
    const Mat mpp = trace_t_w_[2][1] * Tp, mpm = trace_t_w_[2][1] * Tm;
    const Mat mmp = trace_t_w_[2][0] * Tp, mmm = trace_t_w_[2][0] * Tm;
    const Mat dq = (2 / h) * dt_w_[2] * basis_.volume_values();

    grad_self_ = -dq + (mpp - mmm) / (2 * h);
    grad_up_ = mpm / (2 * h);
    grad_dn_ = -mmp / (2 * h);

    theta_up_.resize(nb, 2 * nb);
    theta_up_ << s / (2 * h) * mpm, s * c11 / (2 * h) * mpm;
    theta_dn_.resize(nb, 2 * nb);
    theta_dn_ << -s / (2 * h) * mmp, s * c11 / (2 * h) * mmp;
    const Mat q_self = -s * dq + s / (2 * h) * (mpp - mmm);
    const Mat f_self = -s * c11 / (2 * h) * (mpp + mmm);
    self_.resize(nt);
    for (Index it = 0; it < nt; ++it) {
      self_[it].resize(nb, 2 * nb);
      self_[it] << q_self, f_self + transport_self_[it];
    }
    transport_self_.clear();
  }

  void solve_gradient(const Mat& c, Mat& q) const {
    const Index nb = basis_.size(), nxy = mesh_.n_spatial(), nt = mesh_.ntheta;
    Mat rhs(nt * nb, nxy);
    for (Index it = 0; it < nt; ++it) {
      auto r = rhs.middleRows(it * nb, nb);
      r.noalias() = grad_self_ * slab(c, it);
      r.noalias() += grad_up_ * slab(c, (it + 1) % nt);
      r.noalias() += grad_dn_ * slab(c, (it + nt - 1) % nt);
    }
    const Mat sol = gradient_solver_->solve(rhs);
    for (Index it = 0; it < nt; ++it) slab(q, it) = sol.middleRows(it * nb, nb);
  }

  Mat sample_source(const SourceFn& source, Scalar t, Index it) const {
    const Index nqs = basis_.face_points();
    Mat s(basis_.volume_points(), mesh_.n_spatial());
    for (int c = 0; c < basis_.points_per_axis(); ++c) {
      const Mat v = source(t, mesh_.theta_at(it, basis_.nodes()(c)), grid_.x, grid_.y);
      if (v.rows() != nqs || v.cols() != mesh_.n_spatial()) throw ConfigError("source: wrong output shape");
      s.middleRows(Index(c) * nqs, nqs) = v;
    }
    return s;
  }

  /// (I + C22/(2 dtheta) sum_faces J^T W J) q = rhs on one theta column, where
  /// J q = q_R(-1) - q_L(+1) is the trace jump; symmetric positive definite.
  void build_gradient_system(Index nb) {
    const Index nt = mesh_.ntheta, dim = nt * nb;
    const Scalar sigma = cfg_.c22 / (2 * mesh_.dtheta);
    const Mat& Tp = trace_[2][1];
    const Mat& Tm = trace_[2][0];
    const Mat ll = sigma * trace_t_w_[2][1] * Tp, lr = -sigma * trace_t_w_[2][1] * Tm;
    const Mat rl = -sigma * trace_t_w_[2][0] * Tp, rr = sigma * trace_t_w_[2][0] * Tm;

    std::vector<Eigen::Triplet<Scalar>> entries;
    auto add_block = [&](Index bi, Index bj, const Mat& b) {
      for (Index j = 0; j < nb; ++j)
        for (Index i = 0; i < nb; ++i)
          if (b(i, j) != Scalar(0)) entries.emplace_back(bi * nb + i, bj * nb + j, b(i, j));
    };
    for (Index i = 0; i < dim; ++i) entries.emplace_back(i, i, Scalar(1));
    for (Index it = 0; it < nt; ++it) {
      const Index up = (it + 1) % nt;
      add_block(it, it, ll);
      add_block(it, up, lr);
      add_block(up, it, rl);
      add_block(up, up, rr);
    }
    Eigen::SparseMatrix<Scalar> m(dim, dim);
    m.setFromTriplets(entries.begin(), entries.end());
    auto solver = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>>>(m);
    if (solver->info() != Eigen::Success) throw ConfigError("LDG gradient system factorization failed");
    gradient_solver_ = std::move(solver);
  }

  PhaseMesh<Scalar> mesh_;
  BasisSet<Scalar> basis_;
  SimConfig<Scalar> cfg_;
  SpatialGrid<Scalar> grid_;
  Mat vt_w_;
  std::array<Mat, 3> dt_w_;
  std::array<std::array<Mat, 2>, 3> trace_, trace_t_w_;
  Mat cos_vol_, sin_vol_;
  Vector<Scalar> cos_top_, sin_top_;
  std::vector<Mat> transport_self_, self_, from_xp_, from_xm_, from_yp_, from_ym_;
  Mat theta_up_, theta_dn_, grad_self_, grad_up_, grad_dn_;
  std::shared_ptr<const Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>>> gradient_solver_;
};

}  // namespace kindg
