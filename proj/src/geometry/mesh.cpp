#include "elastreg/geometry/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>

namespace elastreg {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

double SurfaceMesh::total_area() const {
    double s = 0.0;
    for (double a : areas) s += a;
    return s;
}

namespace {

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return (b - a).cross(c - a).dot(d - a) / 6.0;
}

double bbox_diag(const std::vector<Vec3>& nodes) {
    if (nodes.empty()) return 0.0;
    Vec3 lo = nodes.front(), hi = nodes.front();
    for (const Vec3& p : nodes) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

}  // namespace

double VolumeMesh::bbox_diagonal() const { return bbox_diag(nodes); }

double VolumeMesh::tet_volume(int t) const {
    const auto& T = tets[t];
    return signed_volume(nodes[T[0]], nodes[T[1]], nodes[T[2]], nodes[T[3]]);
}

VolumeMesh VolumeMesh::create(std::vector<Vec3> nodes, std::vector<std::array<int, 4>> tets) {
    const int n = static_cast<int>(nodes.size());
    if (n == 0) throw TopologyError("mesh has no nodes");
    for (const Vec3& p : nodes)
        if (!p.allFinite()) throw ParseError("mesh node with non-finite coordinate");

    const double diag = bbox_diag(nodes);
    const double vol_eps = 1e-12 * diag * diag * diag;

    std::set<std::array<int, 4>> seen;
    for (std::size_t t = 0; t < tets.size(); ++t) {
        auto& T = tets[t];
        for (int v : T)
            if (v < 0 || v >= n)
                throw TopologyError("tet " + std::to_string(t) + " references node " + std::to_string(v) +
                                    " outside [0," + std::to_string(n) + ")");
        std::array<int, 4> key = T;
        std::sort(key.begin(), key.end());
        if (key[0] == key[1] || key[1] == key[2] || key[2] == key[3])
            throw TopologyError("tet " + std::to_string(t) + " has repeated node indices");
        if (!seen.insert(key).second)
            throw TopologyError("duplicate tet " + std::to_string(t));

        double vol = signed_volume(nodes[T[0]], nodes[T[1]], nodes[T[2]], nodes[T[3]]);
        if (vol < 0.0) {
            std::swap(T[2], T[3]);
            vol = -vol;
        }
        if (vol <= vol_eps)
            throw TopologyError("tet " + std::to_string(t) + " is degenerate (volume " + std::to_string(vol) + ")");
    }

    VolumeMesh mesh;
    mesh.nodes = std::move(nodes);
    mesh.tets = std::move(tets);
    mesh.surface = extract_surface(mesh.nodes, mesh.tets);
    return mesh;
}

SurfaceMesh extract_surface(const std::vector<Vec3>& nodes, const std::vector<std::array<int, 4>>& tets) {
    // Faces of a positively oriented tet (a,b,c,d), wound outward.
    static const int face_of[4][3] = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};

    std::map<std::array<int, 3>, std::pair<int, std::array<int, 3>>> faces;  // sorted key -> (count, oriented)
    for (const auto& T : tets) {
        for (const auto& f : face_of) {
            std::array<int, 3> tri = {T[f[0]], T[f[1]], T[f[2]]};
            std::array<int, 3> key = tri;
            std::sort(key.begin(), key.end());
            auto it = faces.find(key);
            if (it == faces.end())
                faces.emplace(key, std::make_pair(1, tri));
            else if (++it->second.first > 2)
                throw TopologyError("face shared by more than two tets");
        }
    }

    SurfaceMesh surf;
    std::set<int> referenced;
    for (const auto& [key, entry] : faces) {
        if (entry.first != 1) continue;
        surf.triangles.push_back(entry.second);
        for (int v : entry.second) referenced.insert(v);
    }
    surf.node_indices.assign(referenced.begin(), referenced.end());

    const double diag = bbox_diag(nodes);
    surf.areas.reserve(surf.triangles.size());
    for (const auto& tri : surf.triangles) {
        double a = triangle_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
        if (a <= 1e-12 * diag * diag) throw TopologyError("boundary triangle with near-zero area");
        surf.areas.push_back(a);
    }
    return surf;
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& inner) const {
    RigidTransform out;
    out.rotation = rotation * inner.rotation;
    out.translation = rotation * inner.translation + translation;
    return out;
}

void RigidTransform::validate() const {
    if ((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-10)
        throw DegenerateConfiguration("rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-10)
        throw DegenerateConfiguration("rotation determinant is not +1");
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& translation) {
    RigidTransform T;
    if (angle_rad != 0.0) {
        T.rotation = Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
    }
    T.translation = translation;
    return T;
}

PointCloud apply_rigid(const PointCloud& cloud, const RigidTransform& T) {
    T.validate();
    PointCloud out;
    out.labels = cloud.labels;
    out.points.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) out.points.push_back(T.apply(p));
    return out;
}

VolumeMesh apply_rigid(const VolumeMesh& mesh, const RigidTransform& T) {
    T.validate();
    std::vector<Vec3> nodes;
    nodes.reserve(mesh.nodes.size());
    for (const Vec3& p : mesh.nodes) nodes.push_back(T.apply(p));
    return VolumeMesh::create(std::move(nodes), mesh.tets);
}

std::vector<Vec3> deformed_positions(const VolumeMesh& mesh, const DisplacementField& u) {
    if (u.size() != 3 * static_cast<Eigen::Index>(mesh.nodes.size()))
        throw DimensionMismatch("displacement field length != 3n");
    std::vector<Vec3> out(mesh.nodes.size());
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) out[i] = mesh.nodes[i] + u.segment<3>(3 * i);
    return out;
}

CropResult crop_surface(const SurfaceMesh& surface, const std::vector<Vec3>& positions,
                        const Vec3& seed_point, double target_ratio) {
    if (target_ratio <= 0.0) throw EmptySelection("crop target_ratio must be positive");
    if (target_ratio > 1.0) target_ratio = 1.0;
    if (!seed_point.allFinite()) throw InputError("crop seed point is not finite");
    if (surface.triangles.empty()) throw EmptySurface("surface has no triangles");

    const int nt = surface.num_triangles();
    std::vector<Vec3> centroid(nt);
    std::vector<double> area(nt);
    double total = 0.0;
    for (int t = 0; t < nt; ++t) {
        const auto& tri = surface.triangles[t];
        centroid[t] = (positions[tri[0]] + positions[tri[1]] + positions[tri[2]]) / 3.0;
        area[t] = triangle_area(positions[tri[0]], positions[tri[1]], positions[tri[2]]);
        total += area[t];
    }

    // Edge-adjacency between triangles.
    std::map<std::pair<int, int>, std::vector<int>> edge_tris;
    for (int t = 0; t < nt; ++t) {
        const auto& tri = surface.triangles[t];
        for (int e = 0; e < 3; ++e) {
            int a = tri[e], b = tri[(e + 1) % 3];
            edge_tris[{std::min(a, b), std::max(a, b)}].push_back(t);
        }
    }

    std::vector<double> seed_dist(nt);
    for (int t = 0; t < nt; ++t) seed_dist[t] = (centroid[t] - seed_point).norm();

    // Priority growth by distance from the seed gives compact patches and a
    // deterministic ordering (ties broken by triangle id).
    using QE = std::pair<double, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> queue;
    std::vector<char> enqueued(nt, 0), selected(nt, 0);

    auto nearest_unvisited = [&]() {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int t = 0; t < nt; ++t)
            if (!enqueued[t] && seed_dist[t] < best_d) {
                best_d = seed_dist[t];
                best = t;
            }
        return best;
    };

    int start = nearest_unvisited();
    queue.emplace(seed_dist[start], start);
    enqueued[start] = 1;

    double selected_area = 0.0;
    while (selected_area / total < target_ratio - 1e-15) {
        if (queue.empty()) {
            int next = nearest_unvisited();
            if (next < 0) break;  // everything selected
            queue.emplace(seed_dist[next], next);
            enqueued[next] = 1;
        }
        auto [d, t] = queue.top();
        queue.pop();
        selected[t] = 1;
        selected_area += area[t];
        const auto& tri = surface.triangles[t];
        for (int e = 0; e < 3; ++e) {
            int a = tri[e], b = tri[(e + 1) % 3];
            for (int nb : edge_tris[{std::min(a, b), std::max(a, b)}]) {
                if (!enqueued[nb]) {
                    enqueued[nb] = 1;
                    queue.emplace(seed_dist[nb], nb);
                }
            }
        }
    }

    CropResult result;
    std::set<int> verts;
    for (int t = 0; t < nt; ++t)
        if (selected[t])
            for (int v : surface.triangles[t]) verts.insert(v);
    result.nodes.assign(verts.begin(), verts.end());
    result.cloud.points.reserve(result.nodes.size());
    for (int v : result.nodes) result.cloud.points.push_back(positions[v]);
    result.achieved_ratio = selected_area / total;
    return result;
}

}  // namespace elastreg
