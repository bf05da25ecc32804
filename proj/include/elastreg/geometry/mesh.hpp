#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "elastreg/errors.hpp"
#include "elastreg/types.hpp"

namespace elastreg {

// Boundary triangle mesh of a tetrahedral volume. Triangles index into the
// parent volume's node array; node_indices lists the referenced nodes once,
// sorted ascending. Winding is outward after extraction.
struct SurfaceMesh {
    std::vector<int> node_indices;                 // n_s entries
    std::vector<std::array<int, 3>> triangles;     // volume-node ids, outward winding
    std::vector<double> areas;                     // mm^2, at reference positions

    int num_nodes() const { return static_cast<int>(node_indices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
    double total_area() const;
};

// Reference tetrahedral mesh. Construct through create(): tets are reoriented
// to positive signed volume, connectivity is validated and the boundary
// surface extracted. Immutable after construction.
struct VolumeMesh {
    std::vector<Vec3> nodes;
    std::vector<std::array<int, 4>> tets;
    SurfaceMesh surface;

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_tets() const { return static_cast<int>(tets.size()); }

    double bbox_diagonal() const;
    double tet_volume(int t) const;

    // Validates indices, fixes orientation in place (vertex swap), rejects
    // degenerate or duplicate tets, extracts the boundary surface.
    static VolumeMesh create(std::vector<Vec3> nodes, std::vector<std::array<int, 4>> tets);
};

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<std::string> labels;  // empty, or one label per point

    int size() const { return static_cast<int>(points.size()); }
};

// Proper rigid motion p -> R*p + t.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    RigidTransform inverse() const;
    RigidTransform compose(const RigidTransform& inner) const;  // this ∘ inner

    // R orthonormal to 1e-10 and det(R) = +1 to 1e-10.
    void validate() const;

    static RigidTransform identity() { return {}; }
    static RigidTransform from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& translation);
};

// Boundary faces of the tet mesh, outward winding, TopologyError if a face
// appears in more than two tets.
SurfaceMesh extract_surface(const std::vector<Vec3>& nodes, const std::vector<std::array<int, 4>>& tets);

PointCloud apply_rigid(const PointCloud& cloud, const RigidTransform& T);
VolumeMesh apply_rigid(const VolumeMesh& mesh, const RigidTransform& T);

// Positions x + u of every volume node.
std::vector<Vec3> deformed_positions(const VolumeMesh& mesh, const DisplacementField& u);

struct CropResult {
    PointCloud cloud;        // vertices of the selected region, deformed positions
    double achieved_ratio;   // selected area / total area
    std::vector<int> nodes;  // volume-node ids of the selected vertices
};

// Region-grows triangles outward from the triangle nearest seed_point (by
// centroid distance at the deformed positions) until the accumulated area
// fraction reaches target_ratio. Disconnected surfaces are handled by jumping
// to the nearest unvisited triangle.
CropResult crop_surface(const SurfaceMesh& surface, const std::vector<Vec3>& positions,
                        const Vec3& seed_point, double target_ratio);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace elastreg
