#pragma once

#include "elastreg/geometry/mesh.hpp"

namespace elastreg {

// Parametric test meshes for the in-silico protocol. These are structured
// fixtures, not general tetrahedralization (external meshers remain out of
// scope).

// Axis-aligned bar: nx x ny x nz nodes over `size`, each grid cell split into
// six tetrahedra.
VolumeMesh make_bar_mesh(int nx, int ny, int nz, const Vec3& size);

// Liver-like blob: bar-grid cells kept when their centroid lies inside the
// ellipsoid with the given semi-axes; unused nodes are stripped. Centered at
// the origin.
VolumeMesh make_ellipsoid_mesh(const Vec3& semi_axes, double spacing);

// Mesh with an exact node and tet count, built from short face-sharing tet
// strips laid out on a grid. Requires num_tets >= 1 and
// num_tets + 3 <= num_nodes <= 4 * num_tets.
VolumeMesh make_strip_mesh(int num_nodes, int num_tets);

}  // namespace elastreg
