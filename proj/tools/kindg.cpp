#include <CLI11.hpp>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>

#include "kindg/config.hpp"
#include "kindg/errors.hpp"
#include "kindg/experiments.hpp"

namespace {

enum ExitCode { ok = 0, failure = 1, config_error = 2, input_error = 3, degenerate = 4, blow_up = 5 };

struct Overrides {
  std::optional<int> degree;
  std::vector<long> n;
  std::optional<long> ntheta;
  std::optional<double> nu, eps, cfl, dt, t_final;
  std::optional<std::string> out;
  bool deterministic = false;
  bool strict_orientation = false;
  std::vector<std::string> set;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--degree", o.degree, "polynomial degree k");
  app->add_option("--n", o.n, "cells per spatial direction (accuracy: list of N)")->delimiter(',');
  app->add_option("--ntheta", o.ntheta, "angular cells");
  app->add_option("--nu", o.nu, "angular diffusion");
  app->add_option("--eps", o.eps, "scaling of the angular operator");
  app->add_option("--cfl", o.cfl, "CFL number");
  app->add_option("--dt", o.dt, "fixed time step (0: CFL)");
  app->add_option("--t-final", o.t_final, "final time");
  app->add_option("--out", o.out, "output directory");
  app->add_flag("--deterministic", o.deterministic, "record the bitwise-reproducible mode in the manifest");
  app->add_flag("--strict-orientation", o.strict_orientation, "abort on a degenerate orientation field");
  app->add_option("--set", o.set, "override any config key, e.g. --set kernel.sigma=0.2");
}

void apply(kindg::RunConfig& c, const Overrides& o) {
  if (o.degree) c.degree = *o.degree;
  if (!o.n.empty()) {
    if (c.experiment == kindg::Experiment::accuracy) {
      c.accuracy_n.assign(o.n.begin(), o.n.end());
    } else {
      if (o.n.size() != 1) throw kindg::ConfigError("--n takes a single value outside the accuracy study");
      c.nx = c.ny = o.n.front();
    }
  }
  if (o.ntheta) {
    c.ntheta = *o.ntheta;
    c.ntheta_follows_n = false;
  }
  if (o.nu) c.sim.nu = *o.nu;
  if (o.eps) c.sim.eps = *o.eps;
  if (o.cfl) c.sim.cfl = *o.cfl;
  if (o.dt) c.dt = *o.dt;
  if (o.t_final) c.sim.t_final = *o.t_final;
  if (o.out) c.output_dir = *o.out;
  if (o.deterministic) c.deterministic = true;
  if (o.strict_orientation) c.sim.orientation_policy = kindg::OrientationPolicy::raise;
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw kindg::ConfigError("--set expects key=value, got '" + kv + "'");
    kindg::set_option(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  c.validate();
}

int run(const kindg::RunConfig& c) {
  std::cout << std::setprecision(6);
  if (c.experiment == kindg::Experiment::accuracy) {
    std::cout << "accuracy study, k = " << c.degree << ", N = " << kindg::format_list(c.accuracy_n) << std::endl;
    const auto result = kindg::run_accuracy(c, true);
    std::cout << kindg::format_convergence_table(result.records, c.degree);
    std::cout << "tables written to " << c.output_dir.string() << " (" << result.wall_seconds << " s)\n";
    return ok;
  }
  std::cout << kindg::experiment_name(c.experiment) << ": " << c.nx << "x" << c.ny << "x" << c.ntheta
            << ", k = " << c.degree << ", t_final = " << c.sim.t_final << std::endl;
  const auto s = kindg::run_simulation(c, [](const kindg::Solver<double>& solver, const kindg::MacroFields<double>&,
                                              double t) {
    std::cout << "  t = " << t << "  mass = " << std::setprecision(15) << kindg::total_mass(solver.state())
              << std::setprecision(6) << "  |f| = " << kindg::l2_norm(solver.state()) << std::endl;
  });
  std::cout << "steps " << s.steps << ", dt " << s.dt << ", max relative mass drift " << s.max_mass_drift
            << ", degenerate points " << s.degenerate_points << "\n";
  if (s.band_speed == s.band_speed) std::cout << "band speed " << s.band_speed << "\n";
  std::cout << "output in " << c.output_dir.string() << " (" << s.wall_seconds << " s)\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order DG solver for the kinetic Vicsek model"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_path;
  auto* acc = app.add_subcommand("accuracy", "manufactured-solution convergence study");
  auto* tg = app.add_subcommand("taylor-green", "Taylor-Green vortex lattice on (0,10)^2");
  auto* bands = app.add_subcommand("bands", "band formation on (-1/2,1/2)x(0,1)");
  auto* cfg = app.add_subcommand("run", "run from a configuration file");
  cfg->add_option("--config", config_path, "key = value file with [section] headers")->required()->check(CLI::ExistingFile);
  for (auto* sub : {acc, tg, bands, cfg}) add_common(sub, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : config_error;
  }

  try {
    kindg::RunConfig c;
    if (*acc) c = kindg::default_config(kindg::Experiment::accuracy);
    else if (*tg) c = kindg::default_config(kindg::Experiment::taylor_green);
    else if (*bands) c = kindg::default_config(kindg::Experiment::bands);
    else c = kindg::load_config(config_path);
    if (!*cfg && !o.out) c.output_dir = std::filesystem::path("out") / kindg::experiment_name(c.experiment);
    apply(c, o);
    return run(c);
  } catch (const kindg::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return config_error;
  } catch (const kindg::DegenerateOrientation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return degenerate;
  } catch (const kindg::BlowUpError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return blow_up;
  } catch (const kindg::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return input_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure;
  }
}
