#include "doctest.h"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "kindg/diagnostics.hpp"
#include "kindg/dg_operator.hpp"
#include "kindg/nonlocal.hpp"
#include "kindg/simulation.hpp"
#include "kindg/verification.hpp"
#include "oracle_dg.hpp"

using namespace kindg;
constexpr double pi = std::numbers::pi;

namespace {

Matrix<double> random_coeffs(Index rows, Index cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix<double> c(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) c(i, j) = u(rng);
  return c;
}

Vec2<double> swirl(double x, double y) {
  const double a = std::atan2(std::sin(2 * pi * y) + 0.3, std::cos(2 * pi * x) - 0.2);
  return Vec2<double>(std::cos(a), std::sin(a));
}

SimConfig<double> sim(double nu, double eps, double c11 = 1, double c22 = 1) {
  SimConfig<double> c;
  c.nu = nu;
  c.eps = eps;
  c.c11 = c11;
  c.c22 = c22;
  return c;
}

double inner(const DGField<double>& a, const Matrix<double>& b) {
  return a.mesh.cell_volume() * (a.coeffs.array() * b.array()).sum();
}

}  // namespace

TEST_CASE("flux_x") {
  CHECK(flux_x(2.0, 0.0, 1.0) == 2);
  CHECK(flux_x(2.0, 0.0, -1.0) == 0);
  for (double vn : {-0.7, 0.0, 0.4}) CHECK(flux_x(1.5, 1.5, vn) == doctest::Approx(vn * 1.5));
  CHECK(flux_x(3.0, -1.0, 0.25) == doctest::Approx(0.75));
  CHECK(flux_x(3.0, -1.0, -0.25) == doctest::Approx(0.25));
}

TEST_CASE("flux_theta_adv") {
  CHECK(flux_theta_adv(1.0, 3.0, 2.0, 1) == 2);
  CHECK(flux_theta_adv(1.0, 3.0, -2.0, 1) == -6);
  for (double a : {-1.0, 0.3}) {
    CHECK(flux_theta_adv(0.8, 0.8, a, 1) == doctest::Approx(a * 0.8));
    CHECK(flux_theta_adv(0.8, 0.8, a, -1) == doctest::Approx(-a * 0.8));
  }
}

TEST_CASE("flux_theta_diff") {
  const auto same = flux_theta_diff(0.4, 0.4, -2.0, -2.0, 1, 3.0, 5.0);
  CHECK(same.q_hat_dot_n == doctest::Approx(-2));
  CHECK(same.f_hat_dot_n == doctest::Approx(0.4));
  const auto jf = flux_theta_diff(0.0, 2.0, 0.0, 0.0, 1, 1.0, 1.0);
  CHECK(jf.q_hat_dot_n == 1);
  CHECK(jf.f_hat_dot_n == 1);
  const auto jq = flux_theta_diff(0.0, 0.0, -1.0, 1.0, 1, 1.0, 1.0);
  CHECK(jq.q_hat_dot_n == 0);
  CHECK(jq.f_hat_dot_n == 1);
}

TEST_CASE("SimConfig validation") {
  CHECK_NOTHROW(sim(0.0, 1).validate());
  CHECK_THROWS_AS(sim(-1, 1).validate(), ConfigError);
  CHECK_THROWS_AS(sim(0.1, 0).validate(), ConfigError);
  CHECK_THROWS_AS(sim(0.1, 1, 0, 1).validate(), ConfigError);
  CHECK_THROWS_AS(sim(0.1, 1, 1, -1).validate(), ConfigError);
  SimConfig<double> c;
  c.cfl = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.cfl = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("ldg_gradient of a constant vanishes and is linear") {
  const auto mesh = build_mesh<double>({0, 1, 0, 1}, 2, 3, 8, 2);
  const BasisSet<double> b(2);
  const DGOperator<double> op(mesh, b, sim(0.1, 1));
  const auto c = project([](double, double, double) { return 3.0; }, mesh, b);
  CHECK(op.ldg_gradient(c).coeffs.cwiseAbs().maxCoeff() <= 1e-13);

  const DGField<double> f(mesh, random_coeffs(b.size(), mesh.n_cells(), 1));
  const DGField<double> g(mesh, random_coeffs(b.size(), mesh.n_cells(), 2));
  DGField<double> h(mesh, 2.5 * f.coeffs - 0.75 * g.coeffs);
  const Matrix<double> lhs = op.ldg_gradient(h).coeffs;
  const Matrix<double> rhs = 2.5 * op.ldg_gradient(f).coeffs - 0.75 * op.ldg_gradient(g).coeffs;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-13 * rhs.cwiseAbs().maxCoeff());
}

TEST_CASE("ldg_gradient converges to the angular derivative") {
  auto f = [](double, double, double th) { return std::sin(th) + std::cos(2 * th); };
  auto df = [](double, double, double th) { return std::cos(th) - 2 * std::sin(2 * th); };
  for (int k : {1, 2}) {
    const BasisSet<double> b(k);
    std::vector<ErrorRecord<double>> rec;
    for (Index nt : {8, 16, 32, 64}) {
      const auto mesh = build_mesh<double>({0, 1, 0, 1}, 1, 1, nt, k);
      const DGOperator<double> op(mesh, b, sim(0.1, 1));
      const auto q = op.ldg_gradient(project(f, mesh, b));
      rec.push_back(error_vs_exact(DGField<double>(mesh, q.coeffs), b, df, nt));
    }
    rec = convergence_orders(rec);
    for (std::size_t i = 1; i < rec.size(); ++i) CHECK(rec[i].order_l2 >= k);
  }

  const BasisSet<double> b1(1);
  const auto mesh = build_mesh<double>({0, 1, 0, 1}, 1, 1, 32, 1);
  const DGOperator<double> op(mesh, b1, sim(0.1, 1));
  const auto q = op.ldg_gradient(project([](double, double, double th) { return std::sin(th); }, mesh, b1));
  const auto e = error_vs_exact(DGField<double>(mesh, q.coeffs), b1, [](double, double, double th) { return std::cos(th); });
  CHECK(e.l2 <= mesh.dtheta);
}

TEST_CASE("residual conserves mass for random fields") {
  for (int k : {0, 1, 2}) {
    const auto mesh = build_mesh<double>({-1, 1, 0, 2}, 4, 3, 6, k);
    const BasisSet<double> b(k);
    const DGOperator<double> op(mesh, b, sim(0.05, 0.25));
    const DGField<double> f(mesh, random_coeffs(b.size(), mesh.n_cells(), 10 + unsigned(k)));
    const auto m = prescribed_macro(mesh, b, swirl);
    const auto r = op.residual(f, m);
    CHECK(std::abs(total_mass(r)) <= 1e-12 * l2_norm(f));
  }
}

TEST_CASE("residual matches the brute-force weak form") {
  struct Case {
    int k;
    SpaceType space;
    double nu, eps, c11, c22;
  };
  for (const Case& cs : {Case{1, SpaceType::P, 0.05, 1, 1, 1}, Case{2, SpaceType::P, 0.1, 0.25, 2, 0.5},
                         Case{1, SpaceType::Q, 0.02, 0.5, 1, 1}, Case{0, SpaceType::P, 0.3, 1, 1, 1}}) {
    CAPTURE(cs.k);
    const auto mesh = build_mesh<double>({-0.5, 0.5, 0, 1}, 3, 2, 5, cs.k);
    const BasisSet<double> b(cs.k, cs.space);
    const auto cfg = sim(cs.nu, cs.eps, cs.c11, cs.c22);
    const DGOperator<double> op(mesh, b, cfg);
    const DGField<double> f(mesh, random_coeffs(b.size(), mesh.n_cells(), 20 + unsigned(cs.k)));
    const auto r = op.residual(f, prescribed_macro(mesh, b, swirl));

    const oracle::PhaseSpaceResidual ref(mesh, b.modes(), b.points_per_axis(), cfg,
                                         [](double x, double y) { return Eigen::Vector2d(swirl(x, y)); });
    const Matrix<double> expect = ref.residual(f.coeffs);
    CHECK((r.coeffs - expect).cwiseAbs().maxCoeff() <= 1e-12 * expect.cwiseAbs().maxCoeff());

    const Matrix<double> q = op.ldg_gradient(f).coeffs, q_ref = ref.gradient(f.coeffs);
    CHECK((q - q_ref).cwiseAbs().maxCoeff() <= 1e-12 * q_ref.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("x-uniform problem reduces to the 1D angular DG operator") {
  for (int k : {1, 2}) {
    for (const Vec2<double> vf : {Vec2<double>(1, 0), Vec2<double>(0.6, -0.8)}) {
      for (double nu : {0.0, 0.07}) {
        const Index nt = 7;
        const auto mesh = build_mesh<double>({0, 2, -1, 1}, 3, 2, nt, k);
        const BasisSet<double> b(k);
        const double eps = 0.5;
        const DGOperator<double> op(mesh, b, sim(nu, eps, 1.5, 0.75));

        Matrix<double> c1 = random_coeffs(k + 1, nt, 30 + unsigned(k));
        Matrix<double> c = Matrix<double>::Zero(b.size(), mesh.n_cells());
        std::vector<Index> angular(std::size_t(k) + 1, -1);
        for (Index i = 0; i < b.size(); ++i) {
          const auto& md = b.modes()[std::size_t(i)];
          if (md[0] == 0 && md[1] == 0) angular[std::size_t(md[2])] = i;
        }
        for (Index it = 0; it < nt; ++it)
          for (Index sp = 0; sp < mesh.n_spatial(); ++sp)
            for (int l = 0; l <= k; ++l) c(angular[std::size_t(l)], it * mesh.n_spatial() + sp) = c1(l, it);
        const DGField<double> f(mesh, c);
        const auto r = op.residual(f, prescribed_macro(mesh, b, [vf](double, double) { return vf; }));

        const oracle::AngularDG ref(nt, k, b.points_per_axis(), nu, eps, 1.5, 0.75,
                                    [vf](double th) { return tangential_speed(vf, th); });
        const Matrix<double> r1 = ref.residual(c1);
        const double scale = r1.cwiseAbs().maxCoeff();
        double worst = 0;
        for (Index it = 0; it < nt; ++it)
          for (Index sp = 0; sp < mesh.n_spatial(); ++sp)
            for (Index i = 0; i < b.size(); ++i) {
              const auto& md = b.modes()[std::size_t(i)];
              const double expect = (md[0] == 0 && md[1] == 0) ? r1(md[2], it) : 0.0;
              worst = std::max(worst, std::abs(r.coeffs(i, it * mesh.n_spatial() + sp) - expect));
            }
        CHECK(worst <= 1e-12 * scale);
      }
    }
  }
}

TEST_CASE("discrete energy identity without angular drift") {
  for (int k : {1, 2}) {
    const auto mesh = build_mesh<double>({0, 1, 0, 1}, 3, 4, 6, k);
    const BasisSet<double> b(k);
    const double nu = 0.08, eps = 0.5, c11 = 1.3, c22 = 0.6;
    const DGOperator<double> op(mesh, b, sim(nu, eps, c11, c22));
    const DGField<double> f(mesh, random_coeffs(b.size(), mesh.n_cells(), 40 + unsigned(k)));
    const auto zero = prescribed_macro(mesh, b, [](double, double) { return Vec2<double>::Zero(); });
    TangentField<double> q;
    const auto r = op.residual(f, zero, 0.0, nullptr, &q);
    const double lhs = 2 * inner(f, r.coeffs);

    const int n = b.points_per_axis();
    const auto& wf = b.face_weights();
    double upwind = 0, jf = 0, jq = 0;
    for (int ax = 0; ax < 3; ++ax) {
      const Matrix<double>& tp = b.face_trace(Axis(ax), 1);
      const Matrix<double>& tm = b.face_trace(Axis(ax), -1);
      const double area = ax == 0 ? mesh.dy * mesh.dtheta : ax == 1 ? mesh.dx * mesh.dtheta : mesh.dx * mesh.dy;
      for (const auto& e : enumerate_edges(mesh, Axis(ax))) {
        const Vector<double> fj = tm * f.coeffs.col(e.plus_cell) - tp * f.coeffs.col(e.minus_cell);
        const Vector<double> qj = tm * q.coeffs.col(e.plus_cell) - tp * q.coeffs.col(e.minus_cell);
        const Index it = mesh.coords(e.minus_cell).it;
        for (Index p = 0; p < wf.size(); ++p) {
          if (ax == 2) {
            jf += area * wf(p) * fj(p) * fj(p);
            jq += area * wf(p) * qj(p) * qj(p);
          } else {
            const double th = mesh.theta_at(it, b.nodes()(p / n));
            const double vn = ax == 0 ? std::cos(th) : std::sin(th);
            upwind += area * wf(p) * std::abs(vn) * fj(p) * fj(p);
          }
        }
      }
    }
    const double rhs = -upwind - 2 * nu / eps * l2_norm_squared(q) - nu / eps * (c11 * jf + c22 * jq);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    CHECK(lhs < 0);
  }
}

TEST_CASE("semi-discrete L2 growth is bounded by |f|^2") {
  for (unsigned seed : {50u, 51u, 52u}) {
    const auto mesh = build_mesh<double>({-0.5, 0.5, 0, 1}, 4, 4, 8, 1);
    const BasisSet<double> b(1);
    const DGOperator<double> op(mesh, b, sim(0.005, 1));
    Matrix<double> c = random_coeffs(b.size(), mesh.n_cells(), seed);
    c.row(0).array() += 3;  // dominant smooth part
    c.bottomRows(b.size() - 1) *= 1e-3;
    const DGField<double> f(mesh, c);
    const auto r = op.residual(f, prescribed_macro(mesh, b, swirl));
    const double n2 = l2_norm_squared(f);
    CHECK(2 * inner(f, r.coeffs) <= n2 * (1 + 1e-10));
  }
}

TEST_CASE("residual is positively homogeneous with self-consistent orientation") {
  const auto mesh = build_mesh<double>({-0.5, 0.5, 0, 1}, 6, 6, 8, 1);
  const BasisSet<double> b(1);
  auto model = std::make_shared<const NonlocalModel<double>>(mesh, b, KernelSpec<double>{KernelKind::gaussian, 0.1, 6},
                                                             PotentialSpec<double>{}, 1e-12);
  const DGOperator<double> op(mesh, b, sim(0.005, 0.25));
  auto f0 = [](double x, double y, double th) { return initial_condition(Experiment::bands, x, y, th); };
  const auto f = project(f0, mesh, b);
  for (double s : {0.5, 10.0, 1e3}) {
    DGField<double> g = f;
    g.coeffs *= s;
    const Matrix<double> r1 = op.residual(f, model->evaluate(f)).coeffs;
    const Matrix<double> rs = op.residual(g, model->evaluate(g)).coeffs;
    CHECK((rs - s * r1).cwiseAbs().maxCoeff() <= 1e-12 * s * r1.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("source term is added as its projection") {
  const auto mesh = build_mesh<double>({-1, 1, -1, 1}, 4, 4, 8, 1);
  const BasisSet<double> b(1);
  const DGOperator<double> op(mesh, b, sim(0.05, 1));
  const ManufacturedCase<double> mms{0.05};
  const double t = 0.3;
  const auto f = project([&](double x, double y, double th) { return mms.exact(t, x, y, th); }, mesh, b);
  const auto m = prescribed_macro(mesh, b, [&](double x, double y) { return mms.prescribed_vf(t, x, y); });
  const DGOperator<double>::SourceFn src = [&](double tt, double th, const Matrix<double>& x, const Matrix<double>& y) {
    return mms.source_at_angle(tt, th, x, y);
  };
  const Matrix<double> with = op.residual(f, m, t, &src).coeffs;
  const Matrix<double> without = op.residual(f, m, t).coeffs;
  const Matrix<double> proj = op.project_source(src, t).coeffs;
  CHECK((with - without - proj).cwiseAbs().maxCoeff() <= 1e-12 * proj.cwiseAbs().maxCoeff());

  // the batched source agrees with the pointwise one
  const auto point = project([&](double x, double y, double th) { return mms.source(t, x, y, th); }, mesh, b);
  CHECK((point.coeffs - proj).cwiseAbs().maxCoeff() <= 1e-12 * proj.cwiseAbs().maxCoeff());
}

namespace {

struct SmoothMms {
  ManufacturedCase<double> mms{0.2};
  Vec2<double> vf{0.6, 0.8};
  double half = 3;

  DGOperator<double>::SourceFn source() const {
    return [this](double t, double th, const Matrix<double>& x, const Matrix<double>& y) {
      return Matrix<double>(x.binaryExpr(y, [&](double xi, double yi) {
        return operator_source(mms.jet(t, xi, yi, th), vf, th, mms.nu, 1.0);
      }));
    };
  }
  PhaseMesh<double> mesh(Index n, int k) const { return build_mesh<double>({-half, half, -half, half}, n, n, n, k); }
};

}  // namespace

TEST_CASE("manufactured solution: residual is consistent with the time derivative") {
  // truncation error of the projected exact solution, O(h^k)
  const SmoothMms c;
  const double t = 0.3;
  for (int k : {1, 2}) {
    const BasisSet<double> b(k);
    std::vector<double> err;
    for (Index n : {16, 32}) {
      const auto mesh = c.mesh(n, k);
      const DGOperator<double> op(mesh, b, sim(c.mms.nu, 1));
      const auto f = project([&](double x, double y, double th) { return c.mms.exact(t, x, y, th); }, mesh, b);
      const auto m = prescribed_macro(mesh, b, [&](double, double) { return c.vf; });
      const auto src = c.source();
      const auto r = op.residual(f, m, t, &src);
      const auto ft = project([&](double x, double y, double th) { return c.mms.jet(t, x, y, th).f_t; }, mesh, b);
      err.push_back(std::sqrt(mesh.cell_volume() * (r.coeffs - ft.coeffs).squaredNorm()));
    }
    const double order = std::log(err[0] / err[1]) / std::log(2.0);
    CAPTURE(k);
    CAPTURE(order);
    CHECK(order >= k - 0.25);
  }
}

TEST_CASE("manufactured solution: evolved error is O(h^{k+1/2})") {
  const SmoothMms c;
  const double t_end = 0.2;
  const BasisSet<double> b(1);
  std::vector<double> err;
  for (Index n : {8, 16}) {
    const auto mesh = c.mesh(n, 1);
    const DGOperator<double> op(mesh, b, sim(c.mms.nu, 1));
    auto macro = [&](const DGField<double>&, double) { return prescribed_macro(mesh, b, [&](double, double) { return c.vf; }); };
    auto f0 = project([&](double x, double y, double th) { return c.mms.exact(0, x, y, th); }, mesh, b);
    Solver<double> solver(op, macro, f0, 0.0, c.source());
    solver.advance_to(t_end, 0.25 * stable_dt(mesh, 1.0, op.config()));
    err.push_back(error_vs_exact(solver.state(), b, [&](double x, double y, double th) {
                    return c.mms.exact(t_end, x, y, th);
                  }).l2);
  }
  const double order = std::log(err[0] / err[1]) / std::log(2.0);
  CAPTURE(order);
  CHECK(order >= 1.5);
}

TEST_CASE("operator input checks") {
  const auto mesh = build_mesh<double>({0, 1, 0, 1}, 2, 2, 4, 1);
  const BasisSet<double> b(1);
  const DGOperator<double> op(mesh, b, sim(0.1, 1));
  const DGField<double> f(mesh, b.size());
  MacroFields<double> bad;
  bad.vfx = Matrix<double>::Zero(2, 2);
  bad.vfy = Matrix<double>::Zero(2, 2);
  CHECK_THROWS_AS(op.residual(f, bad), ConfigError);
  const auto other = build_mesh<double>({0, 1, 0, 1}, 3, 2, 4, 1);
  CHECK_THROWS_AS(op.ldg_gradient(DGField<double>(other, b.size())), ConfigError);
  CHECK_THROWS_AS(DGOperator<double>(mesh, b, sim(-1, 1)), ConfigError);

  // copies share the factorization and give identical results
  const DGOperator<double> copy = op;
  const DGField<double> g(mesh, random_coeffs(b.size(), mesh.n_cells(), 60));
  const auto m = prescribed_macro(mesh, b, swirl);
  CHECK((copy.residual(g, m).coeffs - op.residual(g, m).coeffs).cwiseAbs().maxCoeff() == 0);
}
