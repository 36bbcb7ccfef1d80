#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "kindg/config.hpp"
#include "kindg/diagnostics.hpp"
#include "kindg/simulation.hpp"

namespace kindg {

struct SnapshotRecord {
  double t = 0;
  double mass = 0;
  double l2_squared = 0;
  /// |f(t)|^2 / (e^{t/eps} |f(0)|^2)
  double stability_ratio = 0;
  /// ledger lhs / budget - 1, with the e^{(t-s)/eps} weighted dissipation
  double ledger_excess = 0;
  /// same with e^{t/eps} times the unweighted dissipation integral
  double unweighted_ledger_excess = 0;
  double min_rho = 0;
  VelocityBound<double> speed;
  Index degenerate_points = 0;
  /// Taylor-Green only: <u, Omega> and its normalized form.
  double omega_inner = 0, omega_correlation = 0;
};

struct MonitorRecord {
  double t = 0;
  double mass = 0;
  double l2 = 0;
  double peak_x = 0;
  /// (max - min) / mean of the y-averaged density profile
  double contrast_x = 0;
  double var_x = 0, var_y = 0;
};

struct RunSummary {
  RunConfig config;
  std::vector<SnapshotRecord> snapshots;
  std::vector<MonitorRecord> monitors;
  double mass0 = 0;
  double max_mass_drift = 0;  // relative
  Index steps = 0;
  double dt = 0;              // nominal step
  double tol_orientation = 0;
  Index degenerate_points = 0;
  double band_speed = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0;
};

/// Called at every snapshot with the solver state and its macro fields.
using SnapshotHook = std::function<void(const Solver<double>&, const MacroFields<double>&, double t)>;

/// Projected initial datum of the configured experiment, times cfg.scale.
DGField<double> initial_field(const RunConfig& cfg, const PhaseMesh<double>& mesh, const BasisSet<double>& basis);

/// Time-dependent run (taylor_green, bands, custom): snapshots, monitor.csv,
/// manifest.ini and summary.txt under cfg.output_dir.
RunSummary run_simulation(const RunConfig& cfg, const SnapshotHook& hook = {});

struct AccuracyResult {
  std::vector<ErrorRecord<double>> records;
  std::vector<double> mass_drift;
  double wall_seconds = 0;
};

/// Manufactured-solution study over cfg.accuracy_n; writes
/// convergence_k<k>.csv / .txt and manifest.ini.
AccuracyResult run_accuracy(const RunConfig& cfg, bool verbose = false);

/// Sorted stop times: 0, snapshot times, cadence multiples, t_final.
std::vector<double> snapshot_schedule(const RunConfig& cfg);

}  // namespace kindg
