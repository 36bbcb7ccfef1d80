#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "kindg/basis.hpp"
#include "kindg/errors.hpp"
#include "kindg/grid.hpp"
#include "kindg/nonlocal.hpp"

namespace kindg {

/// Integral of f_h over Omega x S^1: cell volume times the sum of cell means.
template <typename Scalar, typename Tag>
Scalar total_mass(const ModalField<Scalar, Tag>& f) {
  return f.mesh.cell_volume() * f.coeffs.row(0).sum();
}

/// Squared L2 norm; exact by orthonormality.
template <typename Scalar, typename Tag>
Scalar l2_norm_squared(const ModalField<Scalar, Tag>& f) {
  return f.mesh.cell_volume() * f.coeffs.squaredNorm();
}

template <typename Scalar, typename Tag>
Scalar l2_norm(const ModalField<Scalar, Tag>& f) {
  return std::sqrt(l2_norm_squared(f));
}

template <typename Scalar = double>
struct ErrorRecord {
  Index n = 0;
  Scalar l1 = 0, linf = 0, l2 = 0;
  Scalar order_l1 = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar order_linf = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar order_l2 = std::numeric_limits<Scalar>::quiet_NaN();
  bool has_order() const { return order_l1 == order_l1; }
};

/// L1, L2 and max errors against exact(x, y, theta), by a Gauss rule with
/// k+3 points per axis; the max is taken over those points.
template <typename Scalar, typename Fn>
ErrorRecord<Scalar> error_vs_exact(const DGField<Scalar>& f, const BasisSet<Scalar>& basis, Fn&& exact,
                                   Index n = 0) {
  const BasisSet<Scalar> fine(basis.degree(), basis.space(), basis.degree() + 3);
  const Matrix<Scalar> fh = fine.volume_values() * f.coeffs;
  const Matrix<Scalar> ex = sample_function(exact, f.mesh, fine);
  const Matrix<Scalar> diff = (fh - ex).cwiseAbs();
  const auto& w = fine.volume_weights();
  const Scalar vol = f.mesh.cell_volume();
  ErrorRecord<Scalar> r;
  r.n = n;
  r.l1 = vol * (w.transpose() * diff).sum();
  r.l2 = std::sqrt(vol * (w.transpose() * diff.cwiseAbs2()).sum());
  r.linf = diff.maxCoeff();
  return r;
}

/// order = log(e_prev / e_curr) / log(N_curr / N_prev).
template <typename Scalar>
std::vector<ErrorRecord<Scalar>> convergence_orders(std::vector<ErrorRecord<Scalar>> records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i - 1];
    auto& b = records[i];
    if (a.n == b.n) throw InputError("convergence_orders: repeated mesh size N = " + std::to_string(b.n));
    const Scalar ratio = std::log(Scalar(b.n) / Scalar(a.n));
    b.order_l1 = std::log(a.l1 / b.l1) / ratio;
    b.order_linf = std::log(a.linf / b.linf) / ratio;
    b.order_l2 = std::log(a.l2 / b.l2) / ratio;
  }
  return records;
}

template <typename Scalar>
void write_convergence_csv(const std::vector<ErrorRecord<Scalar>>& records, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  os << "n,l1,order_l1,linf,order_linf,l2,order_l2\n" << std::setprecision(17);
  for (const auto& r : records) {
    os << r.n << ',' << r.l1 << ',';
    if (r.has_order()) os << r.order_l1;
    os << ',' << r.linf << ',';
    if (r.has_order()) os << r.order_linf;
    os << ',' << r.l2 << ',';
    if (r.has_order()) os << r.order_l2;
    os << '\n';
  }
}

/// Aligned text table; the max error is over the error quadrature points.
template <typename Scalar>
std::string format_convergence_table(const std::vector<ErrorRecord<Scalar>>& records, int degree) {
  std::ostringstream os;
  os << "k = " << degree << "  (L-inf over the (k+3)^3 Gauss points of each cell)\n";
  os << std::setw(6) << "N" << std::setw(16) << "L1 error" << std::setw(8) << "order" << std::setw(16)
     << "Linf error" << std::setw(8) << "order" << '\n';
  for (const auto& r : records) {
    os << std::setw(6) << r.n << std::setw(16) << std::scientific << std::setprecision(5) << r.l1;
    os << std::setw(8) << std::fixed << std::setprecision(2);
    if (r.has_order()) os << r.order_l1; else os << "--";
    os << std::setw(16) << std::scientific << std::setprecision(5) << r.linf;
    os << std::setw(8) << std::fixed << std::setprecision(2);
    if (r.has_order()) os << r.order_linf; else os << "--";
    os << '\n';
  }
  return os.str();
}

/// max |rho u| / rho over the points with rho > 0, and separately over those
/// where every angular sample of f_h is nonnegative too.
template <typename Scalar = double>
struct VelocityBound {
  Scalar max_speed = 0;
  Scalar max_speed_nonnegative = 0;
  Index checked = 0;      // rho > 0
  Index nonnegative = 0;  // rho > 0 and f_h >= 0 at every angular sample
  Index excluded = 0;     // rho <= 0
};

template <typename Scalar>
VelocityBound<Scalar> velocity_bound(const MacroFields<Scalar>& m) {
  VelocityBound<Scalar> b;
  for (Index t = 0; t < m.rho.cols(); ++t)
    for (Index s = 0; s < m.rho.rows(); ++s) {
      if (!(m.rho(s, t) > 0)) {
        ++b.excluded;
        continue;
      }
      ++b.checked;
      const Scalar speed = std::hypot(m.mx(s, t), m.my(s, t)) / m.rho(s, t);
      b.max_speed = std::max(b.max_speed, speed);
      if (m.nonnegative(s, t)) {
        ++b.nonnegative;
        b.max_speed_nonnegative = std::max(b.max_speed_nonnegative, speed);
      }
    }
  return b;
}

/// L2 energy budget
///   |f(t)|^2 + (2 nu / eps) int_0^t e^{(t-s)/eps} |q(s)|^2 ds <= e^{t/eps} |f(0)|^2,
/// with the time integrals accumulated from the RK stages. The unweighted
/// integral is kept as well for the form |f|^2 + (2 nu / eps) e^{t/eps} int |q|^2.
template <typename Scalar = double>
class EnergyLedger {
 public:
  EnergyLedger() = default;
  EnergyLedger(Scalar initial_l2_squared, Scalar nu, Scalar eps)
      : f0_(initial_l2_squared), nu_(nu), eps_(eps) {}

  /// Adds one step of length dt from |q|^2 at the three stage states
  /// (times t, t + dt, t + dt/2).
  void add_step(Scalar dt, Scalar q0, Scalar q1, Scalar q2) {
    integral_ += dt * (q0 / 6 + q1 / 6 + 2 * q2 / 3);
    const Scalar g = std::exp(dt / eps_), gh = std::exp(dt / (2 * eps_));
    weighted_ = g * weighted_ + dt * (g * q0 / 6 + q1 / 6 + gh * 2 * q2 / 3);
  }

  Scalar dissipation_integral() const { return integral_; }
  Scalar weighted_integral() const { return weighted_; }
  Scalar growth(Scalar t) const { return std::exp(t / eps_); }
  Scalar budget(Scalar t) const { return growth(t) * f0_; }
  Scalar lhs(Scalar l2_squared) const { return l2_squared + 2 * nu_ / eps_ * weighted_; }
  /// lhs / budget - 1; <= 0 when the bound holds.
  Scalar excess(Scalar t, Scalar l2_squared) const { return lhs(l2_squared) / budget(t) - 1; }
  /// Same with the unweighted integral scaled by e^{t/eps}.
  Scalar unweighted_excess(Scalar t, Scalar l2_squared) const {
    return (l2_squared + 2 * nu_ / eps_ * growth(t) * integral_) / budget(t) - 1;
  }

 private:
  Scalar f0_ = 0, nu_ = 0, eps_ = 1;
  Scalar integral_ = 0, weighted_ = 0;
};

/// Cell means of rho averaged over y: one value per x column.
template <typename Scalar>
Vector<Scalar> density_profile_x(const MacroFields<Scalar>& m, const PhaseMesh<Scalar>& mesh,
                                 const BasisSet<Scalar>& basis) {
  const int n = basis.points_per_axis();
  const auto& w = basis.weights();
  Vector<Scalar> ws(basis.face_points());
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) ws(a + n * b) = w(a) * w(b);
  const Vector<Scalar> means = m.rho.transpose() * ws;
  Vector<Scalar> profile = Vector<Scalar>::Zero(mesh.nx);
  for (Index iy = 0; iy < mesh.ny; ++iy)
    for (Index ix = 0; ix < mesh.nx; ++ix) profile(ix) += means(mesh.spatial_index(ix, iy));
  return profile / Scalar(mesh.ny);
}

/// Same along y (averaged over x).
template <typename Scalar>
Vector<Scalar> density_profile_y(const MacroFields<Scalar>& m, const PhaseMesh<Scalar>& mesh,
                                 const BasisSet<Scalar>& basis) {
  const int n = basis.points_per_axis();
  const auto& w = basis.weights();
  Vector<Scalar> ws(basis.face_points());
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) ws(a + n * b) = w(a) * w(b);
  const Vector<Scalar> means = m.rho.transpose() * ws;
  Vector<Scalar> profile = Vector<Scalar>::Zero(mesh.ny);
  for (Index iy = 0; iy < mesh.ny; ++iy)
    for (Index ix = 0; ix < mesh.nx; ++ix) profile(iy) += means(mesh.spatial_index(ix, iy));
  return profile / Scalar(mesh.nx);
}

/// Position of the maximum of a periodic cell profile on [lo, lo + nx h),
/// refined by a parabola through the peak and its two neighbors.
template <typename Scalar>
Scalar periodic_peak(const Vector<Scalar>& p, Scalar lo, Scalar h) {
  const Index n = p.size();
  Index i = 0;
  p.maxCoeff(&i);
  const Scalar l = p((i + n - 1) % n), c = p(i), r = p((i + 1) % n);
  const Scalar den = l - 2 * c + r;
  const Scalar shift = den < 0 ? Scalar(0.5) * (l - r) / den : Scalar(0);
  return lo + h * (Scalar(i) + Scalar(0.5) + shift);
}

/// Least-squares slope of positions on a periodic axis of length L, after
/// unwrapping jumps larger than L/2.
template <typename Scalar>
Scalar unwrapped_speed(const std::vector<Scalar>& times, const std::vector<Scalar>& positions, Scalar period) {
  if (times.size() != positions.size() || times.size() < 2)
    throw InputError("unwrapped_speed: need at least two (t, x) samples");
  std::vector<Scalar> x(positions);
  for (std::size_t i = 1; i < x.size(); ++i) {
    Scalar d = x[i] - x[i - 1];
    d -= period * std::round(d / period);
    x[i] = x[i - 1] + d;
  }
  const Index n = Index(x.size());
  Matrix<Scalar> A(n, 2);
  Vector<Scalar> b(n);
  for (Index i = 0; i < n; ++i) {
    A(i, 0) = 1;
    A(i, 1) = times[std::size_t(i)];
    b(i) = x[std::size_t(i)];
  }
  return A.colPivHouseholderQr().solve(b)(1);
}

/// Snapshot file names use the shortest round-trip-safe rendering of t.
inline std::string time_tag(double t) {
  std::ostringstream os;
  os << std::setprecision(10) << t;
  return os.str();
}

/// Writes rho_<t>.csv, u_<t>.csv and vf_<t>.csv on the rectilinear grid of
/// spatial Gauss points, x fastest. u is written as 0 where rho <= 0.
template <typename Scalar>
void export_snapshot(const MacroFields<Scalar>& m, const PhaseMesh<Scalar>& mesh, const BasisSet<Scalar>& basis,
                     double t, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
  const int n = basis.points_per_axis();
  const SpatialGrid<Scalar> grid(mesh, basis);
  const std::string tag = time_tag(t);

  auto open = [&](const std::string& stem) {
    const auto path = dir / (stem + "_" + tag + ".csv");
    std::ofstream os(path);
    if (!os) throw InputError("cannot write " + path.string());
    os << std::setprecision(17);
    return os;
  };
  std::ofstream rho = open("rho"), u = open("u"), vf = open("vf");
  rho << "x,y,rho\n";
  u << "x,y,ux,uy\n";
  vf << "x,y,vfx,vfy\n";
  for (Index iy = 0; iy < mesh.ny; ++iy)
    for (int b = 0; b < n; ++b)
      for (Index ix = 0; ix < mesh.nx; ++ix)
        for (int a = 0; a < n; ++a) {
          const Index sp = mesh.spatial_index(ix, iy), s = a + n * b;
          const Scalar x = grid.x(s, sp), y = grid.y(s, sp), r = m.rho(s, sp);
          const Scalar ux = r > 0 ? m.mx(s, sp) / r : Scalar(0), uy = r > 0 ? m.my(s, sp) / r : Scalar(0);
          rho << x << ',' << y << ',' << r << '\n';
          u << x << ',' << y << ',' << ux << ',' << uy << '\n';
          vf << x << ',' << y << ',' << m.vfx(s, sp) << ',' << m.vfy(s, sp) << '\n';
        }
  if (!rho || !u || !vf) throw InputError("write failed in " + dir.string());
}

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd rows;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw InputError("empty file " + path.string());
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) table.header.push_back(cell);
  std::vector<double> values;
  Index count = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::size_t cols = 0, start = 0;
    for (;; ++cols) {
      const std::size_t end = line.find(',', start);
      const std::string cell = line.substr(start, end == std::string::npos ? std::string::npos : end - start);
      values.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN() : std::strtod(cell.c_str(), nullptr));
      if (end == std::string::npos) break;
      start = end + 1;
    }
    ++cols;
    if (cols != table.header.size()) throw InputError("ragged row in " + path.string());
    ++count;
  }
  const Index nc = Index(table.header.size());
  table.rows = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), count, nc);
  return table;
}

}  // namespace kindg
