#include "hisd/mesh.hpp"

#include <cmath>
#include <string>

namespace hisd {

Mesh build_mesh(int dim, const std::vector<double>& extents, const std::vector<int>& cells) {
  if (dim != 1 && dim != 2) throw Error("build_mesh: dimension must be 1 or 2, got " + std::to_string(dim));
  if (static_cast<int>(extents.size()) != dim || static_cast<int>(cells.size()) != dim)
    throw Error("build_mesh: expected " + std::to_string(dim) + " extents and cell counts");
  for (int d = 0; d < dim; ++d) {
    if (!(extents[d] > 0.0) || !std::isfinite(extents[d])) throw Error("build_mesh: extents must be positive");
    if (cells[d] < 2) throw Error("build_mesh: need at least 2 cells per axis");
  }

  Mesh mesh;
  mesh.dim = dim;
  for (int d = 0; d < dim; ++d) {
    mesh.extents[d] = extents[d];
    mesh.cells[d] = cells[d];
    mesh.h[d] = extents[d] / cells[d];
  }

  const int nx = mesh.cells[0] + 1;
  const int ny = dim == 2 ? mesh.cells[1] + 1 : 1;
  mesh.nodes.reserve(static_cast<std::size_t>(nx) * ny);
  mesh.on_boundary.reserve(mesh.nodes.capacity());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      // Multiply rather than accumulate so node coordinates are exact multiples of h.
      const double x = (i == nx - 1) ? mesh.extents[0] : i * mesh.h[0];
      const double y = dim == 2 ? ((j == ny - 1) ? mesh.extents[1] : j * mesh.h[1]) : 0.0;
      mesh.nodes.emplace_back(x, y);
      bool boundary = (i == 0 || i == nx - 1);
      if (dim == 2) boundary = boundary || j == 0 || j == ny - 1;
      mesh.on_boundary.push_back(boundary);
    }
  }

  if (dim == 1) {
    for (int i = 0; i < mesh.cells[0]; ++i) mesh.elements.push_back({i, i + 1, -1});
  } else {
    for (int j = 0; j < mesh.cells[1]; ++j) {
      for (int i = 0; i < mesh.cells[0]; ++i) {
        const int n00 = mesh.node_index(i, j);
        const int n10 = mesh.node_index(i + 1, j);
        const int n01 = mesh.node_index(i, j + 1);
        const int n11 = mesh.node_index(i + 1, j + 1);
        mesh.elements.push_back({n00, n10, n11});
        mesh.elements.push_back({n00, n11, n01});
      }
    }
  }

  mesh.dof_of_node.assign(mesh.nodes.size(), -1);
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    if (!mesh.on_boundary[n]) {
      mesh.dof_of_node[n] = static_cast<int>(mesh.node_of_dof.size());
      mesh.node_of_dof.push_back(n);
    }
  }
  return mesh;
}

}  // namespace hisd
