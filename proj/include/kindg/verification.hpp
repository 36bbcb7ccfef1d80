#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <string>

#include "kindg/errors.hpp"
#include "kindg/nonlocal.hpp"

namespace kindg {

enum class Experiment { accuracy, taylor_green, bands, custom };

inline Experiment parse_experiment(const std::string& tag) {
  if (tag == "accuracy") return Experiment::accuracy;
  if (tag == "taylor_green" || tag == "taylor-green") return Experiment::taylor_green;
  if (tag == "bands") return Experiment::bands;
  if (tag == "custom") return Experiment::custom;
  throw ConfigError("unknown experiment '" + tag + "'");
}

inline std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::accuracy: return "accuracy";
    case Experiment::taylor_green: return "taylor_green";
    case Experiment::bands: return "bands";
    default: return "custom";
  }
}

template <typename Scalar>
struct SolutionJet {
  Scalar f = 0, f_t = 0, f_x = 0, f_y = 0, f_th = 0, f_thth = 0;
};

/// S = f_t + v . grad f + (1/eps) [ d_theta(a f) - nu d_theta^2 f ], a = vf . tau(theta).
template <typename Scalar>
Scalar operator_source(const SolutionJet<Scalar>& j, const Vec2<Scalar>& vf, Scalar theta, Scalar nu,
                       Scalar eps) {
  const Scalar c = std::cos(theta), s = std::sin(theta);
  const Scalar a = -vf(0) * s + vf(1) * c;
  const Scalar da = -(vf(0) * c + vf(1) * s);
  return j.f_t + c * j.f_x + s * j.f_y + (da * j.f + a * j.f_th - nu * j.f_thth) / eps;
}

/// Moving Gaussian f = exp(-|x - v t|^2 / (2 nu)) / (2 pi nu) with the
/// prescribed orientation v_f = x t / |x t| and the source that makes it an
/// exact solution of
///   f_t + v . grad f = -(1/eps) d_theta [ a f - nu d_theta f ].
template <typename Scalar = double>
struct ManufacturedCase {
  Scalar nu = Scalar(0.05);
  Scalar eps = 1;
  /// |x t| below this is treated as a zero orientation vector.
  Scalar tol = Scalar(1e-12);

  Scalar exact(Scalar t, Scalar x, Scalar y, Scalar theta) const {
    const Scalar dx = x - std::cos(theta) * t, dy = y - std::sin(theta) * t;
    return std::exp(-(dx * dx + dy * dy) / (2 * nu)) / (2 * std::numbers::pi_v<Scalar> * nu);
  }

  /// Zero at t = 0, where the drift is switched off.
  Vec2<Scalar> prescribed_vf(Scalar t, Scalar x, Scalar y) const {
    if (t == 0) return Vec2<Scalar>::Zero();
    const Scalar m = std::hypot(x * t, y * t);
    if (!(m >= tol)) throw DegenerateOrientation(double(m), double(tol), double(x), double(y), double(t));
    return Vec2<Scalar>(x * t / m, y * t / m);
  }

  /// Value and the derivatives entering the operator.
  SolutionJet<Scalar> jet(Scalar t, Scalar x, Scalar y, Scalar theta) const {
    const Scalar c = std::cos(theta), s = std::sin(theta);
    const Scalar dx = x - c * t, dy = y - s * t;
    const Scalar d_tau = -dx * s + dy * c, d_v = dx * c + dy * s;
    SolutionJet<Scalar> j;
    j.f = exact(t, x, y, theta);
    j.f_t = j.f * d_v / nu;
    j.f_x = -j.f * dx / nu;
    j.f_y = -j.f * dy / nu;
    j.f_th = j.f * t * d_tau / nu;
    j.f_thth = j.f * ((t * d_tau / nu) * (t * d_tau / nu) + (t / nu) * (-t - d_v));
    return j;
  }

  Scalar source(Scalar t, Scalar x, Scalar y, Scalar theta) const {
    return operator_source(jet(t, x, y, theta), prescribed_vf(t, x, y), theta, nu, eps);
  }

  /// source() at one angle over arrays of points.
  Matrix<Scalar> source_at_angle(Scalar t, Scalar theta, const Matrix<Scalar>& xm, const Matrix<Scalar>& ym) const {
    using Arr = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Scalar c = std::cos(theta), s = std::sin(theta);
    const Arr x = xm.array(), y = ym.array();
    Arr vx = Arr::Zero(x.rows(), x.cols()), vy = vx;
    if (t != 0) {
      const Arr m = (x.square() + y.square()).sqrt() * std::abs(t);
      if (!(m.minCoeff() >= tol)) throw DegenerateOrientation(double(m.minCoeff()), double(tol));
      vx = x * t / m;
      vy = y * t / m;
    }
    const Arr dx = x - c * t, dy = y - s * t;
    const Arr d_tau = -dx * s + dy * c, d_v = dx * c + dy * s;
    const Arr f = (-(dx.square() + dy.square()) / (2 * nu)).exp() / (2 * std::numbers::pi_v<Scalar> * nu);
    const Arr a = -vx * s + vy * c, da = -(vx * c + vy * s);
    const Arr g = t * d_tau / nu;
    const Arr f_thth = f * (g.square() + (t / nu) * (-t - d_v));
    return ((da * f + a * f * g - nu * f_thth) / eps).matrix();
  }
};

/// Taylor-Green vortex modes (Omega_x, Omega_y) on (0, 10)^2.
template <typename Scalar>
Vec2<Scalar> taylor_green_omega(Scalar x, Scalar y) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar ox = 0, oy = 0;
  for (Scalar k : {pi / 5, 3 * pi / 10, pi / 2}) {
    ox += std::sin(k * x) * std::cos(k * y);
    oy -= std::cos(k * x) * std::sin(k * y);
  }
  return Vec2<Scalar>(ox / 3, oy / 3);
}

/// Initial datum f0(x, y, theta) of each experiment. The accuracy case uses
/// variance `nu`; taylor_green uses the density scale `rho0`.
template <typename Scalar>
Scalar initial_condition(Experiment e, Scalar x, Scalar y, Scalar theta, Scalar rho0 = 1,
                         Scalar nu = Scalar(0.05)) {
  switch (e) {
    case Experiment::accuracy: {
      const ManufacturedCase<Scalar> mms{nu};
      return mms.exact(Scalar(0), x, y, theta);
    }
    case Experiment::taylor_green: {
      const Vec2<Scalar> om = taylor_green_omega(x, y);
      return rho0 * (2 + std::cos(theta) * om(0) + std::sin(theta) * om(1));
    }
    case Experiment::bands: {
      const Scalar pi = std::numbers::pi_v<Scalar>;
      return (1 + std::cos(theta) / 2) *
             (1 + Scalar(0.6) * std::sin(2 * pi * x) + Scalar(0.3) * std::cos(2 * pi * y));
    }
    default: throw ConfigError("initial_condition: experiment has no built-in initial datum");
  }
}

}  // namespace kindg
