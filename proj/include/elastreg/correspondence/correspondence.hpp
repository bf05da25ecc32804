#pragma once

#include <filesystem>

#include "elastreg/correspondence/bvh.hpp"

namespace elastreg {

// One row block of the implicit 3m x 3n correspondence matrix: intraop point
// `point` matched to the barycentric combination of three volume nodes.
struct CorrespondenceEntry {
    int point = -1;
    int triangle = -1;
    std::array<int, 3> nodes{};  // volume-node ids
    Vec3 barycentric;            // >= 0, sums to one
    Vec3 closest_point;          // on the deformed surface
    double distance = 0.0;       // |y_i - closest_point|
};

// Sparse soft correspondence between an intraop cloud (m points) and the
// deformed surface of an n-node mesh. Stored implicitly: each scalar row of
// the 3m x 3n matrix has exactly three structural nonzeros.
struct CorrespondenceSet {
    std::vector<CorrespondenceEntry> entries;  // ordered by point index
    Eigen::Index num_points = 0;               // m
    Eigen::Index num_nodes = 0;                // n

    double mean_distance() const;
};

// Globally nearest surface point for every cloud point, at the given
// deformed node positions. Rebuilt from scratch each call. Queries are
// independent and may run on `threads` workers; the result ordering does not
// depend on the schedule.
CorrespondenceSet build_correspondences(const SurfaceMesh& surface, const std::vector<Vec3>& positions,
                                        const PointCloud& cloud, int threads = 1);

// v is a 3n nodal vector; returns the 3m vector of barycentric interpolants.
VecX apply_C(const CorrespondenceSet& corr, const VecX& v);

// Transpose action: scatters 3m residual blocks back to the nodes.
VecX apply_Ct(const CorrespondenceSet& corr, const VecX& r);

void dump_correspondences_csv(const std::filesystem::path& path, const CorrespondenceSet& corr);

}  // namespace elastreg
