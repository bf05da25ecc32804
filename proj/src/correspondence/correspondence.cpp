#include "elastreg/correspondence/correspondence.hpp"

#include <fstream>

#include "elastreg/parallel.hpp"

namespace elastreg {

double CorrespondenceSet::mean_distance() const {
    if (entries.empty()) return 0.0;
    double s = 0.0;
    for (const auto& e : entries) s += e.distance;
    return s / static_cast<double>(entries.size());
}

CorrespondenceSet build_correspondences(const SurfaceMesh& surface, const std::vector<Vec3>& positions,
                                        const PointCloud& cloud, int threads) {
    if (surface.triangles.empty()) throw EmptySurface("build_correspondences: surface has no triangles");

    TriangleBVH bvh(surface.triangles, positions);

    CorrespondenceSet corr;
    corr.num_points = cloud.size();
    corr.num_nodes = static_cast<Eigen::Index>(positions.size());
    corr.entries.resize(cloud.points.size());

    parallel_for(cloud.size(), threads, [&](int i) {
        TriangleBVH::Hit hit = bvh.closest(cloud.points[i]);
        CorrespondenceEntry& e = corr.entries[i];
        e.point = i;
        e.triangle = hit.triangle;
        e.nodes = surface.triangles[hit.triangle];
        e.barycentric = hit.barycentric;
        e.closest_point = hit.point;
        e.distance = hit.distance;
    });
    return corr;
}

VecX apply_C(const CorrespondenceSet& corr, const VecX& v) {
    if (v.size() != 3 * corr.num_nodes) throw DimensionMismatch("apply_C: nodal vector length != 3n");
    VecX out = VecX::Zero(3 * corr.num_points);
    for (const auto& e : corr.entries) {
        Vec3 acc = Vec3::Zero();
        for (int c = 0; c < 3; ++c) acc += e.barycentric[c] * v.segment<3>(3 * e.nodes[c]);
        out.segment<3>(3 * e.point) = acc;
    }
    return out;
}

VecX apply_Ct(const CorrespondenceSet& corr, const VecX& r) {
    if (r.size() != 3 * corr.num_points) throw DimensionMismatch("apply_Ct: residual length != 3m");
    VecX out = VecX::Zero(3 * corr.num_nodes);
    for (const auto& e : corr.entries) {
        const Vec3 block = r.segment<3>(3 * e.point);
        for (int c = 0; c < 3; ++c) out.segment<3>(3 * e.nodes[c]) += e.barycentric[c] * block;
    }
    return out;
}

void dump_correspondences_csv(const std::filesystem::path& path, const CorrespondenceSet& corr) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(17);
    out << "point_id,triangle_id,lambda1,lambda2,lambda3,distance\n";
    for (const auto& e : corr.entries)
        out << e.point << "," << e.triangle << "," << e.barycentric[0] << "," << e.barycentric[1] << ","
            << e.barycentric[2] << "," << e.distance << "\n";
}

}  // namespace elastreg
