#pragma once

#include "elastreg/geometry/mesh.hpp"

namespace elastreg {

// Least-squares rigid transform mapping source[i] -> target[i], via the
// cross-covariance SVD with determinant correction (proper rotation always).
RigidTransform procrustes(const std::vector<Vec3>& source, const std::vector<Vec3>& target);

struct IcpResult {
    RigidTransform transform;
    double rms = 0.0;
    int iterations = 0;
};

// Classic point-to-point ICP: alternate nearest-neighbour matching against
// the target and a Procrustes solve, until the RMS improvement drops below
// tol. Returns the best transform seen.
IcpResult rigid_icp(const PointCloud& source, const PointCloud& target, int max_iters = 50,
                    double tol = 1e-6);

}  // namespace elastreg
