#pragma once

#include <array>
#include <vector>

#include "hisd/types.hpp"

namespace hisd {

/// Uniform partition of an interval (0, L) or a rectangle (0, Lx) x (0, Ly).
///
/// In 2D every square cell is split along its (0,0)-(1,1) diagonal into two
/// counter-clockwise triangles. Boundary nodes carry no degree of freedom.
struct Mesh {
  int dim = 1;
  std::array<double, 2> extents{0.0, 0.0};
  std::array<int, 2> cells{1, 1};
  std::array<double, 2> h{0.0, 0.0};

  std::vector<Point> nodes;
  /// Node indices per element; only the first dim + 1 entries are used.
  std::vector<std::array<int, 3>> elements;
  std::vector<bool> on_boundary;
  /// Interior DOF index per node, -1 for boundary nodes.
  std::vector<int> dof_of_node;
  std::vector<int> node_of_dof;

  int nodes_per_element() const { return dim + 1; }
  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_dofs() const { return static_cast<int>(node_of_dof.size()); }
  /// Largest spacing over the axes.
  double mesh_size() const { return dim == 1 ? h[0] : std::max(h[0], h[1]); }
  /// Node index of grid position (i, j); j is ignored in 1D.
  int node_index(int i, int j = 0) const { return j * (cells[0] + 1) + i; }
};

Mesh build_mesh(int dim, const std::vector<double>& extents, const std::vector<int>& cells);

}  // namespace hisd
