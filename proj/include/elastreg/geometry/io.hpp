#pragma once

#include <filesystem>

#include "elastreg/geometry/mesh.hpp"

namespace elastreg {

// Mesh files: VTK legacy ASCII unstructured grids (tetrahedra only, cell
// type 10) and the native text format:
//   tetmesh v1
//   <num_nodes> <num_tets>
//   x y z              (num_nodes lines)
//   i j k l            (num_tets lines, 0-based)
// The reader sniffs the format from the file content, the writer picks it
// from the extension (.vtk -> VTK legacy, anything else -> native).
VolumeMesh load_volume_mesh(const std::filesystem::path& path);
void save_volume_mesh(const std::filesystem::path& path, const VolumeMesh& mesh);

// Point clouds: .xyz (whitespace separated), ascii .ply, .csv with an x,y,z
// header. Reader sniffs content; writer picks by extension.
PointCloud load_point_cloud(const std::filesystem::path& path);
void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);

// 4x4 homogeneous matrix, row-major, whitespace separated.
RigidTransform load_rigid_transform(const std::filesystem::path& path);
void save_rigid_transform(const std::filesystem::path& path, const RigidTransform& T);

// Node index sets (force masks, fixed-node lists): one index per line, an
// optional "node" header line is skipped.
std::vector<int> load_node_set(const std::filesystem::path& path, int num_nodes);
void save_node_set(const std::filesystem::path& path, const std::vector<int>& nodes);

// Nodal vector fields as CSV: header "node,<p>x,<p>y,<p>z".
void save_nodal_field_csv(const std::filesystem::path& path, const VecX& field, const std::string& prefix);
VecX load_nodal_field_csv(const std::filesystem::path& path);

}  // namespace elastreg
