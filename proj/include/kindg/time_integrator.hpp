#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "kindg/basis.hpp"
#include "kindg/dg_operator.hpp"
#include "kindg/errors.hpp"
#include "kindg/grid.hpp"

namespace kindg {

template <typename Scalar = double>
struct StepReport {
  Scalar t = 0;
  Scalar dt = 0;
  Scalar mass = 0;
  Scalar l2 = 0;
  Index degenerate_points = 0;
};

namespace detail {

template <typename Derived>
void check_finite(const Eigen::MatrixBase<Derived>& c, int stage, double t) {
  if (c.allFinite()) return;
  for (Index j = 0; j < c.cols(); ++j)
    if (!c.col(j).allFinite()) throw BlowUpError(stage, j, t);
}

}  // namespace detail

/// One step of the three-stage TVD Runge-Kutta scheme in Shu-Osher form:
///   u1 = u + dt L(u, t)
///   u2 = 3/4 u + 1/4 (u1 + dt L(u1, t + dt))
///   u' = 1/3 u + 2/3 (u2 + dt L(u2, t + dt/2))
/// evaluated as increments on u, so a zero rhs returns u bitwise.
/// State is any Eigen dense matrix; columns index cells in the blow-up report.
template <typename State, typename Rhs, typename Scalar = typename State::Scalar>
State rk3_step(const State& u, Scalar t, Scalar dt, Rhs&& rhs) {
  if (!(dt > 0)) throw ConfigError("rk3_step: dt must be positive");
  State u1 = u + dt * rhs(u, t);
  detail::check_finite(u1, 1, double(t + dt));
  State u2 = u + ((u1 - u) + dt * rhs(u1, t + dt)) / Scalar(4);
  detail::check_finite(u2, 2, double(t + dt / 2));
  State out = u + Scalar(2) * ((u2 - u) + dt * rhs(u2, t + dt / 2)) / Scalar(3);
  detail::check_finite(out, 3, double(t + dt));
  return out;
}

/// Scalar overload, mainly for order checks on ODEs.
template <typename Rhs>
double rk3_step(double u, double t, double dt, Rhs&& rhs) {
  if (!(dt > 0)) throw ConfigError("rk3_step: dt must be positive");
  const double u1 = u + dt * rhs(u, t);
  const double u2 = u + ((u1 - u) + dt * rhs(u1, t + dt)) / 4;
  const double out = u + 2 * ((u2 - u) + dt * rhs(u2, t + dt / 2)) / 3;
  if (!std::isfinite(u1) || !std::isfinite(u2) || !std::isfinite(out)) throw BlowUpError(3, 0, t + dt);
  return out;
}

/// CFL step for the explicit scheme:
///   cfl / [ (2k+1)(1/dx + 1/dy + a_max/(eps dtheta)) + nu kappa / (eps dtheta^2) ],
/// kappa = 2 (C11 + 1).
template <typename Scalar>
Scalar stable_dt(const PhaseMesh<Scalar>& mesh, Scalar a_max, const SimConfig<Scalar>& cfg) {
  if (mesh.n_cells() == 0 || !(mesh.dx > 0) || !(mesh.dy > 0) || !(mesh.dtheta > 0))
    throw ConfigError("stable_dt: empty mesh");
  const Scalar kappa = 2 * (cfg.c11 + 1);
  const Scalar p = Scalar(2 * mesh.degree + 1);
  const Scalar denom = p * (1 / mesh.dx + 1 / mesh.dy + a_max / (cfg.eps * mesh.dtheta)) +
                       cfg.nu * kappa / (cfg.eps * mesh.dtheta * mesh.dtheta);
  return cfg.cfl / denom;
}

/// Largest |a| over the spatial grid and every angle, i.e. max |vf|.
template <typename Scalar>
Scalar max_tangential_speed(const Matrix<Scalar>& vfx, const Matrix<Scalar>& vfy) {
  if (vfx.size() == 0) return 0;
  return (vfx.array().square() + vfy.array().square()).sqrt().maxCoeff();
}

/// Shortens dt so that t + dt does not step over the next stop time; a step
/// that would end within a relative 1e-9 of a stop lands on it exactly.
template <typename Scalar>
Scalar cap_dt(Scalar t, Scalar dt, const std::vector<Scalar>& stops) {
  for (Scalar s : stops) {
    if (s - t <= 16 * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), std::abs(t))) continue;
    const Scalar gap = s - t;
    if (dt >= gap * (1 - Scalar(1e-9))) return gap;
    break;
  }
  return dt;
}

}  // namespace kindg
