#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <utility>

#include "kindg/basis.hpp"
#include "kindg/dg_operator.hpp"
#include "kindg/diagnostics.hpp"
#include "kindg/nonlocal.hpp"
#include "kindg/time_integrator.hpp"

namespace kindg {

/// Method-of-lines driver: macro fields are recomputed from every RK stage
/// state, then the DG residual is applied.
template <typename Scalar = double>
class Solver {
 public:
  using MacroFn = std::function<MacroFields<Scalar>(const DGField<Scalar>&, Scalar)>;
  using SourceFn = typename DGOperator<Scalar>::SourceFn;

  Solver(DGOperator<Scalar> op, MacroFn macro, DGField<Scalar> f0, Scalar t0 = 0,
         std::optional<SourceFn> source = std::nullopt)
      : op_(std::move(op)), macro_(std::move(macro)), source_(std::move(source)), f_(std::move(f0)), t_(t0) {
    ledger_ = EnergyLedger<Scalar>(l2_norm_squared(f_), op_.config().nu, op_.config().eps);
  }

  const DGOperator<Scalar>& op() const { return op_; }
  const DGField<Scalar>& state() const { return f_; }
  Scalar time() const { return t_; }
  const EnergyLedger<Scalar>& ledger() const { return ledger_; }
  Index degenerate_points() const { return degenerate_; }

  MacroFields<Scalar> macro() const { return macro_(f_, t_); }

  /// Full right-hand side at (f, t); |q|^2 goes to `q_norm` if given.
  Matrix<Scalar> rhs(const Matrix<Scalar>& c, Scalar t, Scalar* q_norm = nullptr, Index* degenerate = nullptr) const {
    const DGField<Scalar> f(f_.mesh, c);
    const MacroFields<Scalar> m = macro_(f, t);
    if (degenerate) *degenerate += m.degenerate_points;
    TangentField<Scalar> q;
    DGField<Scalar> r = op_.residual(f, m, t, source_ ? &*source_ : nullptr, &q);
    if (q_norm) *q_norm = l2_norm_squared(q);
    return std::move(r.coeffs);
  }

  StepReport<Scalar> step(Scalar dt) {
    std::array<Scalar, 3> q{};
    int stage = 0;
    Index degenerate = 0;
    f_.coeffs = rk3_step(f_.coeffs, t_, dt, [&](const Matrix<Scalar>& c, Scalar t) {
      return rhs(c, t, &q[std::size_t(stage++)], &degenerate);
    });
    t_ += dt;
    ledger_.add_step(dt, q[0], q[1], q[2]);
    degenerate_ += degenerate;
    return {t_, dt, total_mass(f_), l2_norm(f_), degenerate};
  }

  /// Advances to `t_end` exactly. dt_fixed > 0 gives fixed steps (the last one
  /// shortened), otherwise the CFL step with a_max = 1.
  template <typename OnStep>
  void advance_to(Scalar t_end, Scalar dt_fixed, OnStep&& on_step) {
    const Scalar dt_cfl = stable_dt(f_.mesh, Scalar(1), op_.config());
    const Scalar dt = dt_fixed > 0 ? dt_fixed : dt_cfl;
    const std::vector<Scalar> stop{t_end};
    while (t_end - t_ > 16 * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), std::abs(t_end))) {
      const Scalar h = cap_dt(t_, dt, stop);
      const bool last = h == t_end - t_;
      StepReport<Scalar> r = step(h);
      if (last) t_ = r.t = t_end;
      on_step(r);
    }
    t_ = t_end;
  }

  void advance_to(Scalar t_end, Scalar dt_fixed = 0) {
    advance_to(t_end, dt_fixed, [](const StepReport<Scalar>&) {});
  }

 private:
  DGOperator<Scalar> op_;
  MacroFn macro_;
  std::optional<SourceFn> source_;
  DGField<Scalar> f_;
  Scalar t_;
  EnergyLedger<Scalar> ledger_;
  Index degenerate_ = 0;
};

/// Macro evaluation through the nonlocal model.
template <typename Scalar>
typename Solver<Scalar>::MacroFn nonlocal_macro(std::shared_ptr<const NonlocalModel<Scalar>> model) {
  return [model](const DGField<Scalar>& f, Scalar t) {
    try {
      return model->evaluate(f);
    } catch (const DegenerateOrientation& e) {
      throw e.at(e.x(), e.y(), double(t));
    }
  };
}

/// Moments of f with a prescribed, time-dependent orientation vf(t, x, y).
template <typename Scalar, typename VfFn>
typename Solver<Scalar>::MacroFn prescribed_drift(const PhaseMesh<Scalar>& mesh, const BasisSet<Scalar>& basis,
                                                  VfFn vf) {
  auto grid = std::make_shared<const SpatialGrid<Scalar>>(mesh, basis);
  return [basis, vf, grid](const DGField<Scalar>& f, Scalar t) {
    MacroFields<Scalar> m = compute_moments(f, basis);
    const Index nqs = m.rho.rows(), nxy = m.rho.cols();
    m.vfx.resize(nqs, nxy);
    m.vfy.resize(nqs, nxy);
    for (Index j = 0; j < nxy; ++j)
      for (Index i = 0; i < nqs; ++i) {
        const Vec2<Scalar> v = vf(t, grid->x(i, j), grid->y(i, j));
        m.vfx(i, j) = v(0);
        m.vfy(i, j) = v(1);
      }
    m.jx = Matrix<Scalar>::Zero(nqs, nxy);
    m.jy = Matrix<Scalar>::Zero(nqs, nxy);
    m.rx = Matrix<Scalar>::Zero(nqs, nxy);
    m.ry = Matrix<Scalar>::Zero(nqs, nxy);
    return m;
  };
}

}  // namespace kindg
