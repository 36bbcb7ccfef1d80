#pragma once

#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace kindg {

/// Invalid mesh, solver, kernel or experiment parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid input data, e.g. non-finite samples handed to a projection.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// The alignment/repulsion sum |J + R| dropped below the degeneracy tolerance,
/// so the orientation field is undefined at (x, y).
class DegenerateOrientation : public std::runtime_error {
 public:
  DegenerateOrientation(double magnitude, double tol,
                        double x = std::numeric_limits<double>::quiet_NaN(),
                        double y = std::numeric_limits<double>::quiet_NaN(),
                        double t = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(describe(magnitude, tol, x, y, t)),
        magnitude_(magnitude), tol_(tol), x_(x), y_(y), t_(t) {}

  double magnitude() const noexcept { return magnitude_; }
  double tolerance() const noexcept { return tol_; }
  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double time() const noexcept { return t_; }

  DegenerateOrientation at(double x, double y, double t) const {
    return DegenerateOrientation(magnitude_, tol_, x, y, t);
  }

 private:
  static std::string describe(double m, double tol, double x, double y, double t) {
    std::ostringstream os;
    os << "degenerate orientation: |J+R| = " << m << " < tol = " << tol;
    if (x == x) os << " at x = (" << x << ", " << y << ")";
    if (t == t) os << ", t = " << t;
    return os.str();
  }

  double magnitude_, tol_, x_, y_, t_;
};

/// A Runge-Kutta stage produced a non-finite coefficient.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(int stage, std::ptrdiff_t cell, double t)
      : std::runtime_error(describe(stage, cell, t)), stage_(stage), cell_(cell), t_(t) {}

  int stage() const noexcept { return stage_; }
  std::ptrdiff_t cell() const noexcept { return cell_; }
  double time() const noexcept { return t_; }

 private:
  static std::string describe(int stage, std::ptrdiff_t cell, double t) {
    std::ostringstream os;
    os << "non-finite state in RK stage " << stage << ", cell " << cell << ", t = " << t;
    return os.str();
  }

  int stage_;
  std::ptrdiff_t cell_;
  double t_;
};

}  // namespace kindg
