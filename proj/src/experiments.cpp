#include "kindg/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "kindg/verification.hpp"

namespace kindg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

bool contains(const std::vector<double>& v, double t) {
  return std::any_of(v.begin(), v.end(), [t](double s) { return near(s, t); });
}

std::vector<double> cadence(double every, double t_final) {
  std::vector<double> out;
  if (!(every > 0)) return out;
  for (Index i = 1;; ++i) {
    const double t = double(i) * every;
    if (t > t_final * (1 + 1e-12)) break;
    out.push_back(t);
  }
  return out;
}

void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(), near), v.end());
}

/// Weighted inner products over the spatial quadrature grid.
struct SpatialQuadrature {
  Vector<double> w;  // per local point, including the cell area
  SpatialQuadrature(const PhaseMesh<double>& mesh, const BasisSet<double>& basis) : w(basis.face_points()) {
    const int n = basis.points_per_axis();
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) w(a + n * b) = basis.weights()(a) * basis.weights()(b) * mesh.dx * mesh.dy;
  }
  double integrate(const Matrix<double>& g) const { return (w.transpose() * g).sum(); }
};

void omega_alignment(const MacroFields<double>& m, const SpatialGrid<double>& grid, const SpatialQuadrature& q,
                     SnapshotRecord& rec) {
  const Index nqs = m.rho.rows(), nxy = m.rho.cols();
  Matrix<double> ux(nqs, nxy), uy(nqs, nxy), ox(nqs, nxy), oy(nqs, nxy);
  for (Index j = 0; j < nxy; ++j)
    for (Index i = 0; i < nqs; ++i) {
      const double r = m.rho(i, j);
      ux(i, j) = r > 0 ? m.mx(i, j) / r : 0.0;
      uy(i, j) = r > 0 ? m.my(i, j) / r : 0.0;
      const Vec2<double> om = taylor_green_omega(grid.x(i, j), grid.y(i, j));
      ox(i, j) = om(0);
      oy(i, j) = om(1);
    }
  rec.omega_inner = q.integrate(ux.cwiseProduct(ox) + uy.cwiseProduct(oy));
  const double nu = std::sqrt(q.integrate(ux.cwiseAbs2() + uy.cwiseAbs2()));
  const double no = std::sqrt(q.integrate(ox.cwiseAbs2() + oy.cwiseAbs2()));
  rec.omega_correlation = nu > 0 && no > 0 ? rec.omega_inner / (nu * no) : 0.0;
}

MonitorRecord monitor(const Solver<double>& s, const MacroFields<double>& m, const BasisSet<double>& basis) {
  const auto& mesh = s.state().mesh;
  MonitorRecord r;
  r.t = s.time();
  r.mass = total_mass(s.state());
  r.l2 = l2_norm(s.state());
  const Vector<double> px = density_profile_x(m, mesh, basis), py = density_profile_y(m, mesh, basis);
  r.peak_x = periodic_peak(px, mesh.x_lo, mesh.dx);
  const double mean = px.mean();
  r.contrast_x = mean > 0 ? (px.maxCoeff() - px.minCoeff()) / mean : 0.0;
  r.var_x = (px.array() - px.mean()).square().mean();
  r.var_y = (py.array() - py.mean()).square().mean();
  return r;
}

void write_monitor_csv(const std::vector<MonitorRecord>& recs, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  os << "t,mass,l2,peak_x,contrast_x,var_x,var_y\n" << std::setprecision(17);
  for (const auto& r : recs)
    os << r.t << ',' << r.mass << ',' << r.l2 << ',' << r.peak_x << ',' << r.contrast_x << ',' << r.var_x << ','
       << r.var_y << '\n';
}

void write_summary(const RunSummary& s, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  os << std::setprecision(10);
  os << "experiment " << experiment_name(s.config.experiment) << "\n";
  os << "steps " << s.steps << "  dt " << s.dt << "  wall " << s.wall_seconds << " s\n";
  os << "mass0 " << s.mass0 << "  max relative mass drift " << s.max_mass_drift << "\n";
  os << "orientation tolerance " << s.tol_orientation << "  degenerate points " << s.degenerate_points << "\n";
  if (s.band_speed == s.band_speed) os << "band speed " << s.band_speed << "\n";
  os << "t,mass,l2_squared,stability_ratio,ledger_excess,unweighted_ledger_excess,min_rho,max_speed,"
        "max_speed_nonnegative,checked,nonnegative,excluded,omega_inner,omega_correlation\n";
  for (const auto& r : s.snapshots)
    os << r.t << ',' << r.mass << ',' << r.l2_squared << ',' << r.stability_ratio << ',' << r.ledger_excess << ','
       << r.unweighted_ledger_excess << ',' << r.min_rho << ',' << r.speed.max_speed << ','
       << r.speed.max_speed_nonnegative << ',' << r.speed.checked << ',' << r.speed.nonnegative << ','
       << r.speed.excluded << ',' << r.omega_inner << ',' << r.omega_correlation << '\n';
}

}  // namespace

DGField<double> initial_field(const RunConfig& cfg, const PhaseMesh<double>& mesh, const BasisSet<double>& basis) {
  const Experiment datum = cfg.experiment == Experiment::custom ? cfg.initial_datum : cfg.experiment;
  const double rho0 = cfg.rho0, nu = cfg.sim.nu, scale = cfg.scale;
  DGField<double> f = project(
      [&](double x, double y, double th) { return initial_condition(datum, x, y, th, rho0, nu); }, mesh, basis);
  f.coeffs *= scale;
  return f;
}

std::vector<double> snapshot_schedule(const RunConfig& cfg) {
  const double tf = cfg.sim.t_final;
  std::vector<double> t{0.0, tf};
  for (double s : cfg.snapshot_times)
    if (s <= tf * (1 + 1e-12)) t.push_back(s);
  for (double s : cadence(cfg.sim.snapshot_every, tf)) t.push_back(s);
  sort_unique(t);
  return t;
}

RunSummary run_simulation(const RunConfig& cfg, const SnapshotHook& hook) {
  cfg.validate();
  if (cfg.experiment == Experiment::accuracy) throw ConfigError("run_simulation: use run_accuracy for the accuracy study");
  const auto t_start = Clock::now();

  const auto mesh = build_mesh(cfg.domain, cfg.nx, cfg.ny, cfg.ntheta, cfg.degree);
  const BasisSet<double> basis(cfg.degree, cfg.space);
  DGField<double> f0 = initial_field(cfg, mesh, basis);

  RunSummary summary;
  summary.config = cfg;
  summary.mass0 = total_mass(f0);

  // Degeneracy tolerance: 1e-10 x mean density x kernel mass unless given.
  SimConfig<double> sim = cfg.sim;
  auto probe = std::make_shared<NonlocalModel<double>>(mesh, basis, cfg.kernel, cfg.potential, 1.0, sim.orientation_policy);
  if (!(sim.tol_orientation > 0)) {
    const double mean_density = summary.mass0 / mesh.spatial_area();
    const double kmass = probe->kernel_mass() > 0 ? probe->kernel_mass() : 1.0;
    sim.tol_orientation = 1e-10 * std::abs(mean_density) * kmass;
    if (!(sim.tol_orientation > 0)) sim.tol_orientation = 1e-300;
  }
  summary.tol_orientation = sim.tol_orientation;
  auto model = std::make_shared<const NonlocalModel<double>>(mesh, basis, cfg.kernel, cfg.potential,
                                                             sim.tol_orientation, sim.orientation_policy);
  probe.reset();

  DGOperator<double> op(mesh, basis, sim);
  Solver<double> solver(op, nonlocal_macro<double>(model), std::move(f0));

  const double tf = cfg.sim.t_final;
  const std::vector<double> snaps = snapshot_schedule(cfg);
  const std::vector<double> monitors = cadence(cfg.monitor_every, tf);
  std::vector<double> stops(snaps);
  stops.insert(stops.end(), monitors.begin(), monitors.end());
  sort_unique(stops);

  const double dt = cfg.dt > 0 ? cfg.dt : stable_dt(mesh, 1.0, sim);
  summary.dt = dt;
  const SpatialGrid<double> grid(mesh, basis);
  const SpatialQuadrature quad(mesh, basis);
  if (cfg.write_snapshots) std::filesystem::create_directories(cfg.output_dir);

  auto visit = [&](bool at_snapshot, bool at_monitor) {
    const MacroFields<double> m = solver.macro();
    const double t = solver.time();
    if (at_monitor || (at_snapshot && cfg.monitor_every > 0)) summary.monitors.push_back(monitor(solver, m, basis));
    if (!at_snapshot) return;
    SnapshotRecord r;
    r.t = t;
    r.mass = total_mass(solver.state());
    r.l2_squared = l2_norm_squared(solver.state());
    const auto& ledger = solver.ledger();
    r.stability_ratio = r.l2_squared / ledger.budget(t);
    r.ledger_excess = ledger.excess(t, r.l2_squared);
    r.unweighted_ledger_excess = ledger.unweighted_excess(t, r.l2_squared);
    r.min_rho = m.rho.minCoeff();
    r.speed = velocity_bound(m);
    r.degenerate_points = m.degenerate_points;
    if (cfg.experiment == Experiment::taylor_green) omega_alignment(m, grid, quad, r);
    summary.snapshots.push_back(r);
    if (cfg.write_snapshots) export_snapshot(m, mesh, basis, t, cfg.output_dir);
    if (hook) hook(solver, m, t);
  };

  visit(true, false);
  std::size_t next = 0;
  while (next < stops.size() && stops[next] <= 0) ++next;
  while (next < stops.size()) {
    const double target = stops[next];
    solver.advance_to(target, dt, [&](const StepReport<double>& rep) {
      ++summary.steps;
      summary.max_mass_drift = std::max(summary.max_mass_drift, std::abs(rep.mass - summary.mass0) / std::abs(summary.mass0));
    });
    visit(contains(snaps, target), contains(monitors, target));
    ++next;
  }
  summary.degenerate_points = solver.degenerate_points();

  // Band speed: peak position over the fit window.
  std::vector<double> ts, xs;
  for (const auto& r : summary.monitors)
    if (r.t >= cfg.band_fit_start - 1e-9 && r.t <= cfg.band_fit_end + 1e-9) {
      ts.push_back(r.t);
      xs.push_back(r.peak_x);
    }
  if (ts.size() >= 2) summary.band_speed = unwrapped_speed(ts, xs, mesh.x_hi - mesh.x_lo);

  summary.wall_seconds = seconds_since(t_start);
  if (cfg.write_snapshots) {
    std::ostringstream run;
    run << "version = " << kVersion << "\nwall_seconds = " << std::setprecision(6) << summary.wall_seconds
        << "\nsteps = " << summary.steps << "\n";
    write_manifest(cfg, cfg.output_dir / "manifest.ini", run.str());
    if (!summary.monitors.empty()) write_monitor_csv(summary.monitors, cfg.output_dir / "monitor.csv");
    write_summary(summary, cfg.output_dir / "summary.txt");
  }
  return summary;
}

AccuracyResult run_accuracy(const RunConfig& cfg, bool verbose) {
  cfg.validate();
  const auto t_start = Clock::now();
  AccuracyResult out;
  const double tf = cfg.sim.t_final;
  ManufacturedCase<double> mms;
  mms.nu = cfg.sim.nu;
  mms.eps = cfg.sim.eps;
  if (!(mms.nu > 0)) throw ConfigError("accuracy: sim.nu must be positive (it is also the Gaussian variance)");

  for (Index n : cfg.accuracy_n) {
    const auto t0 = Clock::now();
    const Index nt = cfg.ntheta_follows_n ? std::max<Index>(n, 4) : cfg.ntheta;
    const auto mesh = build_mesh(cfg.domain, n, n, nt, cfg.degree);
    const BasisSet<double> basis(cfg.degree, cfg.space);
    DGField<double> f0 = project([&](double x, double y, double th) { return mms.exact(0.0, x, y, th); }, mesh, basis);
    f0.coeffs *= cfg.scale;
    const double m0 = total_mass(f0);
    DGOperator<double> op(mesh, basis, cfg.sim);
    Solver<double> solver(
        op, prescribed_drift(mesh, basis, [mms](double t, double x, double y) { return mms.prescribed_vf(t, x, y); }),
        std::move(f0), 0.0,
        typename Solver<double>::SourceFn(
            [mms, s = cfg.scale](double t, double th, const Matrix<double>& x, const Matrix<double>& y) {
              return Matrix<double>(s * mms.source_at_angle(t, th, x, y));
            }));
    solver.advance_to(tf, cfg.dt);
    ErrorRecord<double> rec = error_vs_exact(
        solver.state(), basis, [&](double x, double y, double th) { return cfg.scale * mms.exact(tf, x, y, th); }, n);
    out.records.push_back(rec);
    out.mass_drift.push_back(std::abs(total_mass(solver.state()) - m0) / std::abs(m0));
    if (verbose)
      std::cerr << "  N = " << n << "  L1 = " << rec.l1 << "  Linf = " << rec.linf << "  (" << std::setprecision(3)
                << seconds_since(t0) << " s)" << std::setprecision(6) << std::endl;
  }
  if (out.records.size() >= 2) out.records = convergence_orders(out.records);
  out.wall_seconds = seconds_since(t_start);

  if (cfg.write_snapshots || !cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    const std::string stem = "convergence_k" + std::to_string(cfg.degree);
    write_convergence_csv(out.records, cfg.output_dir / (stem + ".csv"));
    std::ofstream txt(cfg.output_dir / (stem + ".txt"));
    txt << format_convergence_table(out.records, cfg.degree);
    std::ostringstream run;
    run << "version = " << kVersion << "\nwall_seconds = " << std::setprecision(6) << out.wall_seconds << "\n";
    write_manifest(cfg, cfg.output_dir / "manifest.ini", run.str());
  }
  return out;
}

}  // namespace kindg
