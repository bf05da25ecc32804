#include "elastreg/correspondence/bvh.hpp"

#include <algorithm>
#include <limits>

namespace elastreg {

TriangleClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    {
        double max_edge2 = std::max({ab.squaredNorm(), ac.squaredNorm(), (c - b).squaredNorm()});
        if (ab.cross(ac).norm() <= 1e-14 * max_edge2)
            throw DegenerateTriangle("closest_point_on_triangle: degenerate triangle");
    }

    auto make = [&](double la, double lb, double lc) {
        TriangleClosestPoint r;
        r.barycentric = Vec3(la, lb, lc);
        r.point = la * a + lb * b + lc * c;
        r.distance = (p - r.point).norm();
        return r;
    };

    const Vec3 ap = p - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return make(1.0, 0.0, 0.0);  // vertex a

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return make(0.0, 1.0, 0.0);  // vertex b

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {  // edge ab
        const double v = d1 / (d1 - d3);
        return make(1.0 - v, v, 0.0);
    }

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return make(0.0, 0.0, 1.0);  // vertex c

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {  // edge ac
        const double w = d2 / (d2 - d6);
        return make(1.0 - w, 0.0, w);
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {  // edge bc
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return make(0.0, 1.0 - w, w);
    }

    const double denom = 1.0 / (va + vb + vc);  // interior
    const double v = vb * denom;
    const double w = vc * denom;
    return make(1.0 - v - w, v, w);
}

TriangleBVH::TriangleBVH(const std::vector<std::array<int, 3>>& triangles, const std::vector<Vec3>& positions) {
    if (triangles.empty()) throw EmptySurface("BVH over empty triangle set");
    const int nt = static_cast<int>(triangles.size());
    tri_pts_.resize(nt);
    std::vector<Vec3> centroids(nt);
    for (int t = 0; t < nt; ++t) {
        for (int v = 0; v < 3; ++v) {
            const Vec3& p = positions[triangles[t][v]];
            if (!p.allFinite()) throw NumericalError("BVH build: non-finite vertex position");
            tri_pts_[t][v] = p;
        }
        centroids[t] = (tri_pts_[t][0] + tri_pts_[t][1] + tri_pts_[t][2]) / 3.0;
    }
    order_.resize(nt);
    for (int t = 0; t < nt; ++t) order_[t] = t;
    nodes_.reserve(2 * nt);
    build(0, nt, centroids);
}

int TriangleBVH::build(int begin, int end, const std::vector<Vec3>& centroids) {
    const int idx = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    Vec3 clo = lo, chi = hi;
    for (int i = begin; i < end; ++i) {
        for (const Vec3& p : tri_pts_[order_[i]]) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        clo = clo.cwiseMin(centroids[order_[i]]);
        chi = chi.cwiseMax(centroids[order_[i]]);
    }
    nodes_[idx].lo = lo;
    nodes_[idx].hi = hi;

    constexpr int kLeafSize = 4;
    if (end - begin <= kLeafSize) {
        nodes_[idx].begin = begin;
        nodes_[idx].end = end;
        return idx;
    }

    int axis = 0;
    (chi - clo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         double ca = centroids[a][axis], cb = centroids[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });

    const int left = build(begin, mid, centroids);
    const int right = build(mid, end, centroids);
    nodes_[idx].left = left;
    nodes_[idx].right = right;
    return idx;
}

namespace {

double box_sq_distance(const Vec3& lo, const Vec3& hi, const Vec3& p) {
    double d2 = 0.0;
    for (int c = 0; c < 3; ++c) {
        double d = 0.0;
        if (p[c] < lo[c]) d = lo[c] - p[c];
        else if (p[c] > hi[c]) d = p[c] - hi[c];
        d2 += d * d;
    }
    return d2;
}

}  // namespace

void TriangleBVH::search(int node, const Vec3& query, Hit& best) const {
    const Node& nd = nodes_[node];
    if (nd.left < 0) {
        for (int i = nd.begin; i < nd.end; ++i) {
            const int t = order_[i];
            TriangleClosestPoint cp =
                closest_point_on_triangle(query, tri_pts_[t][0], tri_pts_[t][1], tri_pts_[t][2]);
            if (cp.distance < best.distance) {
                best.triangle = t;
                best.point = cp.point;
                best.barycentric = cp.barycentric;
                best.distance = cp.distance;
            }
        }
        return;
    }
    const double dl = box_sq_distance(nodes_[nd.left].lo, nodes_[nd.left].hi, query);
    const double dr = box_sq_distance(nodes_[nd.right].lo, nodes_[nd.right].hi, query);
    const int first = dl <= dr ? nd.left : nd.right;
    const int second = dl <= dr ? nd.right : nd.left;
    const double dfirst = std::min(dl, dr), dsecond = std::max(dl, dr);
    if (dfirst <= best.distance * best.distance) search(first, query, best);
    if (dsecond <= best.distance * best.distance) search(second, query, best);
}

TriangleBVH::Hit TriangleBVH::closest(const Vec3& query) const {
    Hit best;
    best.distance = std::numeric_limits<double>::infinity();
    search(0, query, best);
    // Every candidate distance overflowed; the geometry is out of range.
    if (best.triangle < 0)
        throw NumericalError("closest-point query failed: no finite candidate distance");
    return best;
}

}  // namespace elastreg
