#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "kindg/basis.hpp"
#include "kindg/diagnostics.hpp"
#include "kindg/verification.hpp"

using namespace kindg;
constexpr double pi = std::numbers::pi;

namespace {

/// f_t + v . grad f + (1/eps) d_theta (a f - nu d_theta f) by centered
/// differences of the closed-form solution.
double fd_operator(const ManufacturedCase<double>& c, double t, double x, double y, double th, double h,
                   bool fourth_order) {
  auto f = [&](double tt, double xx, double yy, double ang) { return c.exact(tt, xx, yy, ang); };
  auto d1 = [&](auto g) {
    if (!fourth_order) return (g(h) - g(-h)) / (2 * h);
    return (-g(2 * h) + 8 * g(h) - 8 * g(-h) + g(-2 * h)) / (12 * h);
  };
  auto d2 = [&](auto g) {
    if (!fourth_order) return (g(h) - 2 * g(0.0) + g(-h)) / (h * h);
    return (-g(2 * h) + 16 * g(h) - 30 * g(0.0) + 16 * g(-h) - g(-2 * h)) / (12 * h * h);
  };
  const Vec2<double> vf = c.prescribed_vf(t, x, y);
  const double ft = d1([&](double s) { return f(t + s, x, y, th); });
  const double fx = d1([&](double s) { return f(t, x + s, y, th); });
  const double fy = d1([&](double s) { return f(t, x, y + s, th); });
  const double daf = d1([&](double s) { return tangential_speed(vf, th + s) * f(t, x, y, th + s); });
  const double fthth = d2([&](double s) { return f(t, x, y, th + s); });
  return ft + std::cos(th) * fx + std::sin(th) * fy + (daf - c.nu * fthth) / c.eps;
}

}  // namespace

TEST_CASE("exact solution values") {
  const ManufacturedCase<double> c{0.05};
  const double peak = 1 / (0.1 * pi);
  for (double th : {0.0, 1.0, 4.0}) CHECK(c.exact(0, 0, 0, th) == doctest::Approx(peak).epsilon(1e-15));
  const double r = std::sqrt(2 * 0.05);
  CHECK(c.exact(0, r / std::sqrt(2.0), r / std::sqrt(2.0), 0.3) == doctest::Approx(peak * std::exp(-1.0)).epsilon(1e-14));
  CHECK(c.exact(0.5, 0.5, 0, 0) == doctest::Approx(peak).epsilon(1e-15));
  CHECK(c.exact(0.5, 0.5, 0, pi) < 1e-3 * peak);
}

TEST_CASE("prescribed vf is normalized and off at t = 0") {
  const ManufacturedCase<double> c{0.05};
  CHECK(c.prescribed_vf(0, 0.3, 0.4).norm() == 0);
  const Vec2<double> v = c.prescribed_vf(0.5, 0.3, -0.4);
  CHECK(v.norm() == doctest::Approx(1).epsilon(1e-15));
  CHECK(v(0) == doctest::Approx(0.6));
  CHECK(v(1) == doctest::Approx(-0.8));
  CHECK_THROWS_AS(c.prescribed_vf(0.5, 0, 0), DegenerateOrientation);
  Matrix<double> x = Matrix<double>::Zero(2, 2), y = Matrix<double>::Zero(2, 2);
  CHECK_THROWS_AS((void)c.source_at_angle(0.5, 0.0, x, y), DegenerateOrientation);
}

TEST_CASE("operator_source for a uniform state reduces to the drift divergence") {
  SolutionJet<double> j;
  j.f = 1.7;
  const Vec2<double> vf(std::cos(0.4), std::sin(0.4));
  for (double th : {0.0, 1.1, 3.0, 5.5}) {
    const Vec2<double> v(std::cos(th), std::sin(th));
    CHECK(operator_source(j, vf, th, 0.3, 1.0) == doctest::Approx(-j.f * vf.dot(v)).epsilon(1e-14));
    CHECK(operator_source(j, vf, th, 0.3, 0.25) == doctest::Approx(-4 * j.f * vf.dot(v)).epsilon(1e-14));
  }
}

TEST_CASE("source matches finite differences of the exact solution") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ut(0.1, 0.5), ux(-0.8, 0.8), uth(0, 2 * pi);
  for (double eps : {1.0, 0.5}) {
    ManufacturedCase<double> c{0.05};
    c.eps = eps;
    for (int i = 0; i < 20; ++i) {
      const double t = ut(rng), x = ux(rng), y = ux(rng), th = uth(rng);
      const double s = c.source(t, x, y, th);
      const double scale = std::max(1.0, c.exact(t, x, y, th) / c.nu);
      CHECK(std::abs(s - fd_operator(c, t, x, y, th, 1e-4, false)) <= 1e-6 * scale);
      CHECK(std::abs(s - fd_operator(c, t, x, y, th, 1e-3, true)) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("source_at_angle agrees with the pointwise source") {
  const ManufacturedCase<double> c{0.05};
  Matrix<double> x(3, 2), y(3, 2);
  x << 0.1, -0.5, 0.3, 0.7, -0.2, 0.05;
  y << 0.4, 0.2, -0.6, 0.1, 0.3, -0.9;
  for (double th : {0.2, 2.5}) {
    const Matrix<double> s = c.source_at_angle(0.4, th, x, y);
    for (Index j = 0; j < 2; ++j)
      for (Index i = 0; i < 3; ++i)
        CHECK(s(i, j) == doctest::Approx(c.source(0.4, x(i, j), y(i, j), th)).epsilon(1e-13));
  }
}

TEST_CASE("jet derivatives match finite differences") {
  const ManufacturedCase<double> c{0.05};
  const double t = 0.3, x = 0.2, y = -0.1, th = 0.7, h = 1e-5;
  const auto j = c.jet(t, x, y, th);
  CHECK(j.f_x == doctest::Approx((c.exact(t, x + h, y, th) - c.exact(t, x - h, y, th)) / (2 * h)).epsilon(1e-7));
  CHECK(j.f_y == doctest::Approx((c.exact(t, x, y + h, th) - c.exact(t, x, y - h, th)) / (2 * h)).epsilon(1e-7));
  CHECK(j.f_t == doctest::Approx((c.exact(t + h, x, y, th) - c.exact(t - h, x, y, th)) / (2 * h)).epsilon(1e-7));
  CHECK(j.f_th == doctest::Approx((c.exact(t, x, y, th + h) - c.exact(t, x, y, th - h)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("initial data values") {
  CHECK(initial_condition<double>(Experiment::bands, 0, 0, 0) == doctest::Approx(1.95));
  CHECK(initial_condition<double>(Experiment::bands, 0, 0, pi) == doctest::Approx(0.65));
  CHECK(initial_condition<double>(Experiment::taylor_green, 2.5, 0, 0) == doctest::Approx(2 + 1.0 / 3));
  CHECK(initial_condition<double>(Experiment::taylor_green, 2.5, 0, 0, 3.0) == doctest::Approx(3 * (2 + 1.0 / 3)));
  CHECK(initial_condition<double>(Experiment::accuracy, 0, 0, 1, 1, 0.05) == doctest::Approx(1 / (0.1 * pi)));
  CHECK_THROWS_AS(initial_condition<double>(Experiment::custom, 0, 0, 0), ConfigError);
  CHECK_THROWS_AS(parse_experiment("vortex"), ConfigError);
  CHECK(parse_experiment("taylor-green") == Experiment::taylor_green);
  CHECK(experiment_name(parse_experiment("bands")) == "bands");
}

TEST_CASE("taylor_green_omega modes") {
  const Vec2<double> om = taylor_green_omega(2.5, 0.0);
  CHECK(om(0) == doctest::Approx((1 + std::sin(3 * pi / 4) + std::sin(5 * pi / 4)) / 3));
  CHECK(om(1) == doctest::Approx(0).epsilon(1e-15));
  CHECK(std::abs(om(0)) <= 1);
}

TEST_CASE("bands datum is positive and Taylor-Green integrates to 4 pi rho0") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ux(-0.5, 0.5), uy(0, 1), u10(0, 10);
  const auto [nodes, weights] = gauss_rule<double>(24);
  double worst_min = 1e300;
  for (int i = 0; i < 200; ++i)
    for (Index q = 0; q < nodes.size(); ++q)
      worst_min = std::min(worst_min, initial_condition(Experiment::bands, ux(rng), uy(rng), pi * (nodes(q) + 1)));
  CHECK(worst_min > 0);
  CHECK(worst_min >= 0.05);

  for (int i = 0; i < 10; ++i) {
    const double x = u10(rng), y = u10(rng);
    double integral = 0;
    for (Index q = 0; q < nodes.size(); ++q)
      integral += pi * weights(q) * initial_condition(Experiment::taylor_green, x, y, pi * (nodes(q) + 1), 1.5);
    CHECK(integral == doctest::Approx(4 * pi * 1.5).epsilon(1e-13));
  }
}
