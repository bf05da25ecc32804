#include "elastreg/synthesis/phantom.hpp"

#include <cmath>

namespace elastreg {

VolumeMesh make_bar_mesh(int nx, int ny, int nz, const Vec3& size) {
    if (nx < 2 || ny < 2 || nz < 2) throw InputError("bar mesh needs at least 2 nodes per axis");
    std::vector<Vec3> nodes;
    nodes.reserve(static_cast<std::size_t>(nx) * ny * nz);
    const Vec3 d(size.x() / (nx - 1), size.y() / (ny - 1), size.z() / (nz - 1));
    auto id = [&](int i, int j, int k) { return (k * ny + j) * nx + i; };
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) nodes.emplace_back(i * d.x(), j * d.y(), k * d.z());

    // Six tets per cell, all sharing the main diagonal; identical local
    // orientation keeps faces compatible across neighbouring cells.
    static const int corner[8][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
    static const int splits[6][4] = {{0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
                                     {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7}};
    std::vector<std::array<int, 4>> tets;
    tets.reserve(static_cast<std::size_t>(nx - 1) * (ny - 1) * (nz - 1) * 6);
    for (int k = 0; k + 1 < nz; ++k)
        for (int j = 0; j + 1 < ny; ++j)
            for (int i = 0; i + 1 < nx; ++i) {
                int c[8];
                for (int v = 0; v < 8; ++v) c[v] = id(i + corner[v][0], j + corner[v][1], k + corner[v][2]);
                for (const auto& s : splits) tets.push_back({c[s[0]], c[s[1]], c[s[2]], c[s[3]]});
            }
    return VolumeMesh::create(std::move(nodes), std::move(tets));
}

VolumeMesh make_ellipsoid_mesh(const Vec3& semi_axes, double spacing) {
    if (spacing <= 0.0) throw InputError("ellipsoid mesh spacing must be positive");
    const int nx = static_cast<int>(std::ceil(2.0 * semi_axes.x() / spacing)) + 2;
    const int ny = static_cast<int>(std::ceil(2.0 * semi_axes.y() / spacing)) + 2;
    const int nz = static_cast<int>(std::ceil(2.0 * semi_axes.z() / spacing)) + 2;

    std::vector<Vec3> grid_nodes;
    grid_nodes.reserve(static_cast<std::size_t>(nx) * ny * nz);
    const Vec3 origin(-0.5 * (nx - 1) * spacing, -0.5 * (ny - 1) * spacing, -0.5 * (nz - 1) * spacing);
    auto id = [&](int i, int j, int k) { return (k * ny + j) * nx + i; };
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                grid_nodes.emplace_back(origin + Vec3(i * spacing, j * spacing, k * spacing));

    auto inside = [&](const Vec3& p) {
        const Vec3 q = p.cwiseQuotient(semi_axes);
        return q.squaredNorm() <= 1.0;
    };

    static const int corner[8][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
    static const int splits[6][4] = {{0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
                                     {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7}};
    std::vector<std::array<int, 4>> tets;
    for (int k = 0; k + 1 < nz; ++k)
        for (int j = 0; j + 1 < ny; ++j)
            for (int i = 0; i + 1 < nx; ++i) {
                int c[8];
                Vec3 centroid = Vec3::Zero();
                for (int v = 0; v < 8; ++v) {
                    c[v] = id(i + corner[v][0], j + corner[v][1], k + corner[v][2]);
                    centroid += grid_nodes[c[v]];
                }
                if (!inside(centroid / 8.0)) continue;
                for (const auto& s : splits) tets.push_back({c[s[0]], c[s[1]], c[s[2]], c[s[3]]});
            }
    if (tets.empty()) throw InputError("ellipsoid mesh is empty; spacing too coarse");

    // Strip unused nodes.
    std::vector<int> remap(grid_nodes.size(), -1);
    std::vector<Vec3> nodes;
    for (auto& t : tets)
        for (int& v : t) {
            if (remap[v] < 0) {
                remap[v] = static_cast<int>(nodes.size());
                nodes.push_back(grid_nodes[v]);
            }
            v = remap[v];
        }
    return VolumeMesh::create(std::move(nodes), std::move(tets));
}

VolumeMesh make_strip_mesh(int num_nodes, int num_tets) {
    if (num_tets < 1) throw InputError("strip mesh needs at least one tet");
    if (num_nodes < num_tets + 3 || num_nodes > 4 * num_tets)
        throw InputError("strip mesh requires num_tets + 3 <= num_nodes <= 4 * num_tets");

    const int extra = num_nodes - num_tets;  // >= 3
    int strips = extra / 3;
    int jump = extra % 3;  // 0: none, 1: edge share (+1 node), 2: vertex share (+2 nodes)
    if (strips > num_tets) {  // more strips than tets cannot happen given num_nodes <= 4*num_tets
        strips = num_tets;
        jump = 0;
    }

    std::vector<int> length(strips, num_tets / strips);
    for (int i = 0; i < num_tets % strips; ++i) ++length[i];
    // The jump consumes one tet of strip 0, which therefore needs length >= 2.
    if (jump > 0 && length[0] < 2) throw InputError("strip mesh counts are infeasible");

    std::vector<Vec3> nodes;
    std::vector<std::array<int, 4>> tets;
    nodes.reserve(num_nodes);
    tets.reserve(num_tets);

    const double R = 6.0, theta = 0.9, dz = 2.5;
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(strips))));
    for (int s = 0; s < strips; ++s) {
        const Vec3 offset(25.0 * (s % cols), 25.0 * (s / cols), 0.0);
        const int helix_tets = (s == 0 && jump > 0) ? length[s] - 1 : length[s];

        const int base = static_cast<int>(nodes.size());
        for (int j = 0; j < helix_tets + 3; ++j)
            nodes.emplace_back(offset + Vec3(R * std::cos(j * theta), R * std::sin(j * theta), j * dz));
        for (int j = 0; j < helix_tets; ++j)
            tets.push_back({base + j, base + j + 1, base + j + 2, base + j + 3});

        if (s == 0 && jump > 0) {
            const int last = static_cast<int>(nodes.size()) - 1;
            if (jump == 1) {
                // Share the trailing edge, add two fresh nodes.
                const Vec3 q = nodes[last];
                nodes.emplace_back(q + Vec3(7.0, 1.5, 3.0));
                nodes.emplace_back(q + Vec3(2.0, 7.5, 5.0));
                tets.push_back({last - 1, last, last + 1, last + 2});
            } else {
                // Share only the trailing vertex, add three fresh nodes.
                const Vec3 q = nodes[last];
                nodes.emplace_back(q + Vec3(6.0, 0.0, 1.5));
                nodes.emplace_back(q + Vec3(0.0, 6.0, 1.5));
                nodes.emplace_back(q + Vec3(1.8, 1.6, 6.0));
                tets.push_back({last, last + 1, last + 2, last + 3});
            }
        }
    }
    return VolumeMesh::create(std::move(nodes), std::move(tets));
}

}  // namespace elastreg
