#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "kindg/errors.hpp"

namespace kindg {

using Index = Eigen::Index;

enum class Axis { x = 0, y = 1, theta = 2 };

template <typename Scalar = double>
struct DomainBounds {
  Scalar x_lo, x_hi, y_lo, y_hi;
};

struct CellCoords {
  Index ix, iy, it;
};

/// Uniform periodic partition of Omega x S^1, theta in [0, 2 pi).
///
/// Cells are numbered row-major with x fastest, then y, then theta, so that
/// one theta slab (fixed it) is a contiguous block of nx*ny cells.
template <typename Scalar = double>
struct PhaseMesh {
  Index nx = 0, ny = 0, ntheta = 0;
  Scalar x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
  Scalar dx = 0, dy = 0, dtheta = 0;
  int degree = 0;

  Index n_spatial() const { return nx * ny; }
  Index n_cells() const { return nx * ny * ntheta; }

  Index spatial_index(Index ix, Index iy) const { return ix + nx * iy; }
  Index cell_index(Index ix, Index iy, Index it) const { return ix + nx * (iy + ny * it); }

  CellCoords coords(Index cell) const {
    const Index ix = cell % nx;
    const Index rest = cell / nx;
    return {ix, rest % ny, rest / ny};
  }

  Scalar cell_volume() const { return dx * dy * dtheta; }
  Scalar spatial_area() const { return (x_hi - x_lo) * (y_hi - y_lo); }
  Scalar phase_volume() const { return spatial_area() * Scalar(2) * std::numbers::pi_v<Scalar>; }

  Scalar x_left(Index ix) const { return x_lo + dx * Scalar(ix); }
  Scalar y_left(Index iy) const { return y_lo + dy * Scalar(iy); }
  Scalar theta_left(Index it) const { return dtheta * Scalar(it); }

  /// Maps a reference coordinate in [-1, 1] to the physical coordinate in a cell.
  Scalar x_at(Index ix, Scalar xi) const { return x_left(ix) + dx * (xi + 1) / 2; }
  Scalar y_at(Index iy, Scalar eta) const { return y_left(iy) + dy * (eta + 1) / 2; }
  Scalar theta_at(Index it, Scalar zeta) const { return theta_left(it) + dtheta * (zeta + 1) / 2; }

  Index count(Axis axis) const {
    switch (axis) {
      case Axis::x: return nx;
      case Axis::y: return ny;
      default: return ntheta;
    }
  }
};

template <typename Scalar>
PhaseMesh<Scalar> build_mesh(const DomainBounds<Scalar>& bounds, Index nx, Index ny, Index ntheta,
                             int degree) {
  if (nx < 1 || ny < 1) throw ConfigError("mesh: nx and ny must be >= 1");
  if (ntheta < 4) throw ConfigError("mesh: ntheta must be >= 4");
  if (degree < 0) throw ConfigError("mesh: degree must be >= 0");
  if (!(bounds.x_hi > bounds.x_lo) || !(bounds.y_hi > bounds.y_lo))
    throw ConfigError("mesh: domain bounds must satisfy lo < hi");

  PhaseMesh<Scalar> m;
  m.nx = nx;
  m.ny = ny;
  m.ntheta = ntheta;
  m.x_lo = bounds.x_lo;
  m.x_hi = bounds.x_hi;
  m.y_lo = bounds.y_lo;
  m.y_hi = bounds.y_hi;
  m.dx = (bounds.x_hi - bounds.x_lo) / Scalar(nx);
  m.dy = (bounds.y_hi - bounds.y_lo) / Scalar(ny);
  m.dtheta = Scalar(2) * std::numbers::pi_v<Scalar> / Scalar(ntheta);
  m.degree = degree;
  return m;
}

/// Periodic neighbor of `cell` after `direction` steps along `axis`.
template <typename Scalar>
Index wrap_neighbor(const PhaseMesh<Scalar>& mesh, Index cell, Axis axis, Index direction) {
  CellCoords c = mesh.coords(cell);
  auto wrap = [](Index i, Index step, Index n) { return ((i + step) % n + n) % n; };
  switch (axis) {
    case Axis::x: c.ix = wrap(c.ix, direction, mesh.nx); break;
    case Axis::y: c.iy = wrap(c.iy, direction, mesh.ny); break;
    case Axis::theta: c.it = wrap(c.it, direction, mesh.ntheta); break;
  }
  return mesh.cell_index(c.ix, c.iy, c.it);
}

/// One interior face. The minus cell owns the face on its upper side; its
/// outward normal along `axis` has sign `normal_sign`.
struct EdgeRef {
  Axis axis;
  Index minus_cell;
  Index plus_cell;
  int normal_sign;
};

/// Enumerates every face normal to `axis` exactly once (periodic seam included).
template <typename Scalar>
std::vector<EdgeRef> enumerate_edges(const PhaseMesh<Scalar>& mesh, Axis axis) {
  std::vector<EdgeRef> edges;
  edges.reserve(static_cast<std::size_t>(mesh.n_cells()));
  for (Index c = 0; c < mesh.n_cells(); ++c)
    edges.push_back({axis, c, wrap_neighbor(mesh, c, axis, 1), +1});
  return edges;
}

}  // namespace kindg
