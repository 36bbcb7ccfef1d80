#include "kindg/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "kindg/errors.hpp"

namespace kindg {

const char* const kVersion = "0.1.0";

namespace {

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
  if (value.find_first_not_of(" \t", used) != std::string::npos)
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  return x;
}

Index parse_index(const std::string& key, const std::string& value) {
  const double x = parse_double(key, value);
  if (x != std::floor(x) || x < 0) throw ConfigError(key + ": expected a nonnegative integer, got '" + value + "'");
  return Index(x);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto a = item.find_first_not_of(" \t"), b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

// Shortest form that reads back to the same double.
std::string fmt(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::string format_list(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

void RunConfig::validate() const {
  if (nx < 1 || ny < 1) throw ConfigError("mesh.nx and mesh.ny must be >= 1");
  if (ntheta < 4) throw ConfigError("mesh.ntheta must be >= 4");
  if (degree < 0) throw ConfigError("mesh.degree must be >= 0");
  if (!(domain.x_hi > domain.x_lo)) throw ConfigError("domain.x_hi must exceed domain.x_lo");
  if (!(domain.y_hi > domain.y_lo)) throw ConfigError("domain.y_hi must exceed domain.y_lo");
  sim.validate();
  if (dt < 0) throw ConfigError("time.dt must be >= 0");
  kernel.validate();
  potential.validate();
  if (!(scale > 0)) throw ConfigError("initial.scale must be positive");
  if (!(rho0 > 0)) throw ConfigError("initial.rho0 must be positive");
  if (experiment == Experiment::accuracy) {
    if (accuracy_n.empty()) throw ConfigError("accuracy.n must list at least one mesh size");
    for (Index n : accuracy_n)
      if (n < 4) throw ConfigError("accuracy.n entries must be >= 4");
  }
  for (double t : snapshot_times)
    if (!(t >= 0)) throw ConfigError("output.snapshot_times must be >= 0");
}

RunConfig default_config(Experiment e) {
  RunConfig c;
  c.experiment = e;
  c.sim.c11 = c.sim.c22 = 1;
  switch (e) {
    case Experiment::accuracy:
      c.domain = {-1, 1, -1, 1};
      c.sim.nu = 0.01;
      c.sim.eps = 1;
      c.sim.t_final = 0.5;
      c.kernel.kind = KernelKind::none;
      c.write_snapshots = false;
      break;
    case Experiment::taylor_green:
      c.domain = {0, 10, 0, 10};
      c.nx = c.ny = 50;
      c.ntheta = 16;
      c.dt = 0.01;
      c.sim.nu = 0.005;
      c.sim.eps = 1;
      c.sim.t_final = 30;
      c.kernel = {KernelKind::gaussian, 0.1, 6};
      c.snapshot_times = {5, 15, 20, 30, 50};
      break;
    case Experiment::bands:
      c.domain = {-0.5, 0.5, 0, 1};
      c.nx = c.ny = 32;
      c.ntheta = 16;
      c.sim.nu = 0.005;
      c.sim.eps = 0.25;
      c.sim.t_final = 30;
      c.kernel = {KernelKind::gaussian, 0.1, 6};
      c.snapshot_times = {2, 9, 13, 17.25, 22.75, 30};
      c.monitor_every = 0.25;
      break;
    case Experiment::custom:
      break;
  }
  return c;
}

void set_option(RunConfig& c, const std::string& key, const std::string& v) {
  if (key == "experiment") c.experiment = parse_experiment(v);
  else if (key == "mesh.nx") c.nx = parse_index(key, v);
  else if (key == "mesh.ny") c.ny = parse_index(key, v);
  else if (key == "mesh.ntheta") c.ntheta = parse_index(key, v);
  else if (key == "mesh.degree") c.degree = int(parse_index(key, v));
  else if (key == "mesh.space") {
    if (v == "P") c.space = SpaceType::P;
    else if (v == "Q") c.space = SpaceType::Q;
    else throw ConfigError("mesh.space: expected P or Q, got '" + v + "'");
  }
  else if (key == "domain.x_lo") c.domain.x_lo = parse_double(key, v);
  else if (key == "domain.x_hi") c.domain.x_hi = parse_double(key, v);
  else if (key == "domain.y_lo") c.domain.y_lo = parse_double(key, v);
  else if (key == "domain.y_hi") c.domain.y_hi = parse_double(key, v);
  else if (key == "sim.nu") c.sim.nu = parse_double(key, v);
  else if (key == "sim.eps") c.sim.eps = parse_double(key, v);
  else if (key == "sim.c11") c.sim.c11 = parse_double(key, v);
  else if (key == "sim.c22") c.sim.c22 = parse_double(key, v);
  else if (key == "sim.tol_orientation") c.sim.tol_orientation = parse_double(key, v);
  else if (key == "sim.orientation_policy") {
    if (v == "raise") c.sim.orientation_policy = OrientationPolicy::raise;
    else if (v == "zero_drift") c.sim.orientation_policy = OrientationPolicy::zero_drift;
    else throw ConfigError("sim.orientation_policy: expected raise or zero_drift, got '" + v + "'");
  }
  else if (key == "time.dt") c.dt = parse_double(key, v);
  else if (key == "time.cfl") c.sim.cfl = parse_double(key, v);
  else if (key == "time.t_final") c.sim.t_final = parse_double(key, v);
  else if (key == "kernel.kind") {
    if (v == "none") c.kernel.kind = KernelKind::none;
    else if (v == "gaussian") c.kernel.kind = KernelKind::gaussian;
    else if (v == "compact") c.kernel.kind = KernelKind::compact;
    else throw ConfigError("kernel.kind: expected none, gaussian or compact, got '" + v + "'");
  }
  else if (key == "kernel.sigma") c.kernel.sigma = parse_double(key, v);
  else if (key == "kernel.cutoff") c.kernel.cutoff_sigmas = parse_double(key, v);
  else if (key == "potential.kind") {
    if (v == "none") c.potential.kind = PotentialKind::none;
    else if (v == "gaussian") c.potential.kind = PotentialKind::gaussian;
    else throw ConfigError("potential.kind: expected none or gaussian, got '" + v + "'");
  }
  else if (key == "potential.sigma") c.potential.sigma = parse_double(key, v);
  else if (key == "potential.strength") c.potential.strength = parse_double(key, v);
  else if (key == "potential.cutoff") c.potential.cutoff_sigmas = parse_double(key, v);
  else if (key == "initial.rho0") c.rho0 = parse_double(key, v);
  else if (key == "initial.scale") c.scale = parse_double(key, v);
  else if (key == "initial.datum") {
    c.initial_datum = parse_experiment(v);
    if (c.initial_datum == Experiment::custom) throw ConfigError("initial.datum: expected accuracy, taylor_green or bands");
  }
  else if (key == "accuracy.n") {
    c.accuracy_n.clear();
    for (const auto& s : split(v)) c.accuracy_n.push_back(parse_index(key, s));
  }
  else if (key == "accuracy.ntheta_follows_n") c.ntheta_follows_n = parse_bool(key, v);
  else if (key == "output.directory") c.output_dir = v;
  else if (key == "output.snapshot_every") c.sim.snapshot_every = parse_double(key, v);
  else if (key == "output.snapshot_times") {
    c.snapshot_times.clear();
    for (const auto& s : split(v)) c.snapshot_times.push_back(parse_double(key, s));
  }
  else if (key == "output.monitor_every") c.monitor_every = parse_double(key, v);
  else if (key == "output.write_snapshots") c.write_snapshots = parse_bool(key, v);
  else if (key == "output.deterministic") c.deterministic = parse_bool(key, v);
  else if (key == "band.fit_start") c.band_fit_start = parse_double(key, v);
  else if (key == "band.fit_end") c.band_fit_end = parse_double(key, v);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

RunConfig load_config(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(path.string() + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  // The experiment tag selects the defaults that the other keys override.
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      entries.emplace_back(name, node.data());
      continue;
    }
    if (name == "run") continue;
    for (const auto& [key, leaf] : node) entries.emplace_back(name + "." + key, leaf.data());
  }
  RunConfig c;
  for (const auto& [k, v] : entries)
    if (k == "experiment") c = default_config(parse_experiment(v));
  for (const auto& [k, v] : entries) set_option(c, k, v);
  c.validate();
  return c;
}

void write_manifest(const RunConfig& c, const std::filesystem::path& path, const std::string& extra) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  const char* space = c.space == SpaceType::P ? "P" : "Q";
  const char* kernel = c.kernel.kind == KernelKind::none ? "none" : c.kernel.kind == KernelKind::gaussian ? "gaussian" : "compact";
  os << "experiment = " << experiment_name(c.experiment) << "\n\n";
  os << "[mesh]\nnx = " << c.nx << "\nny = " << c.ny << "\nntheta = " << c.ntheta << "\ndegree = " << c.degree
     << "\nspace = " << space << "\n\n";
  os << "[domain]\nx_lo = " << fmt(c.domain.x_lo) << "\nx_hi = " << fmt(c.domain.x_hi) << "\ny_lo = "
     << fmt(c.domain.y_lo) << "\ny_hi = " << fmt(c.domain.y_hi) << "\n\n";
  os << "[sim]\nnu = " << fmt(c.sim.nu) << "\neps = " << fmt(c.sim.eps) << "\nc11 = " << fmt(c.sim.c11)
     << "\nc22 = " << fmt(c.sim.c22) << "\ntol_orientation = " << fmt(c.sim.tol_orientation)
     << "\norientation_policy = " << (c.sim.orientation_policy == OrientationPolicy::raise ? "raise" : "zero_drift")
     << "\n\n";
  os << "[time]\ndt = " << fmt(c.dt) << "\ncfl = " << fmt(c.sim.cfl) << "\nt_final = " << fmt(c.sim.t_final)
     << "\n\n";
  os << "[kernel]\nkind = " << kernel << "\nsigma = " << fmt(c.kernel.sigma) << "\ncutoff = "
     << fmt(c.kernel.cutoff_sigmas) << "\n\n";
  os << "[potential]\nkind = " << (c.potential.kind == PotentialKind::none ? "none" : "gaussian")
     << "\nsigma = " << fmt(c.potential.sigma) << "\nstrength = " << fmt(c.potential.strength)
     << "\ncutoff = " << fmt(c.potential.cutoff_sigmas) << "\n\n";
  os << "[initial]\nrho0 = " << fmt(c.rho0) << "\nscale = " << fmt(c.scale)
     << "\ndatum = " << experiment_name(c.initial_datum) << "\n\n";
  os << "[accuracy]\nn = " << format_list(c.accuracy_n) << "\nntheta_follows_n = "
     << (c.ntheta_follows_n ? "true" : "false") << "\n\n";
  os << "[output]\ndirectory = " << c.output_dir.string() << "\nsnapshot_every = " << fmt(c.sim.snapshot_every)
     << "\nsnapshot_times = " << format_list(c.snapshot_times) << "\nmonitor_every = " << fmt(c.monitor_every)
     << "\nwrite_snapshots = " << (c.write_snapshots ? "true" : "false")
     << "\ndeterministic = " << (c.deterministic ? "true" : "false") << "\n\n";
  os << "[band]\nfit_start = " << fmt(c.band_fit_start) << "\nfit_end = " << fmt(c.band_fit_end) << "\n";
  if (!extra.empty()) os << "\n[run]\n" << extra;
  if (!os) throw InputError("write failed: " + path.string());
}

}  // namespace kindg
