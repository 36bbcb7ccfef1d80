#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kindg/basis.hpp"
#include "kindg/dg_operator.hpp"
#include "kindg/grid.hpp"
#include "kindg/nonlocal.hpp"
#include "kindg/verification.hpp"

namespace kindg {

/// Every resolved parameter of one run.
struct RunConfig {
  Experiment experiment = Experiment::custom;

  // mesh
  Index nx = 16, ny = 16, ntheta = 16;
  int degree = 1;
  SpaceType space = SpaceType::P;
  DomainBounds<double> domain{0, 1, 0, 1};

  SimConfig<double> sim;
  double dt = 0;  // > 0: fixed step, otherwise CFL

  KernelSpec<double> kernel;
  PotentialSpec<double> potential;

  // initial datum
  double rho0 = 1;
  double scale = 1;
  Experiment initial_datum = Experiment::bands;  // custom runs only

  // accuracy study
  std::vector<Index> accuracy_n{16, 24, 32, 48, 64};
  bool ntheta_follows_n = true;

  // output
  std::filesystem::path output_dir = "out";
  std::vector<double> snapshot_times;  // in addition to snapshot_every
  double monitor_every = 0;            // <= 0: every snapshot only
  bool write_snapshots = true;
  bool deterministic = false;

  // band speed fit window
  double band_fit_start = 20, band_fit_end = 30;

  void validate() const;
  DomainBounds<double> bounds() const { return domain; }
};

/// Defaults of the built-in experiments.
RunConfig default_config(Experiment e);

/// Reads `key = value` lines with `[section]` headers (or dotted keys).
/// Unknown keys are configuration errors; a [run] section is informational.
RunConfig load_config(const std::filesystem::path& path);

/// Applies one dotted key, e.g. "time.cfl" = "0.5".
void set_option(RunConfig& cfg, const std::string& key, const std::string& value);

/// Writes a file that load_config reads back into the same configuration.
void write_manifest(const RunConfig& cfg, const std::filesystem::path& path, const std::string& extra_run_section = "");

std::string format_list(const std::vector<double>& v);
std::string format_list(const std::vector<Index>& v);

extern const char* const kVersion;

}  // namespace kindg
