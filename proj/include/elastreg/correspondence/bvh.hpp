#pragma once

#include <array>
#include <vector>

#include "elastreg/geometry/mesh.hpp"

namespace elastreg {

struct TriangleClosestPoint {
    Vec3 point;
    Vec3 barycentric;  // weights for (a, b, c); non-negative, sums to one
    double distance;
};

// Closest point of the closed triangle (a,b,c) to p. The returned point is
// assembled from the barycentric weights, so bary[0]*a + bary[1]*b +
// bary[2]*c reproduces it exactly. Ericson, Real-Time Collision Detection,
// chapter 5.
TriangleClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Static AABB tree over surface triangles at fixed vertex positions.
// Queries are exact: boxes are pruned only when they provably cannot beat
// the current best, and ties resolve to the first candidate in traversal
// order. Immutable after construction.
class TriangleBVH {
  public:
    TriangleBVH(const std::vector<std::array<int, 3>>& triangles, const std::vector<Vec3>& positions);

    struct Hit {
        int triangle = -1;
        Vec3 point = Vec3::Zero();
        Vec3 barycentric = Vec3::Zero();
        double distance = 0.0;
    };

    Hit closest(const Vec3& query) const;

    struct Node {
        Vec3 lo, hi;
        int left = -1, right = -1;  // internal node when left >= 0
        int begin = 0, end = 0;     // leaf range into triangle_order()
    };
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<int>& triangle_order() const { return order_; }
    int num_triangles() const { return static_cast<int>(order_.size()); }

  private:
    int build(int begin, int end, const std::vector<Vec3>& centroids);
    void search(int node, const Vec3& query, Hit& best) const;

    std::vector<Node> nodes_;
    std::vector<int> order_;
    std::vector<std::array<Vec3, 3>> tri_pts_;  // indexed by original triangle id
};

}  // namespace elastreg
