#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace elastreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Nodal vector fields are 3n-vectors, node-major: component c of node i
// lives at index 3*i + c. Units are millimeters throughout.
using DisplacementField = VecX;
using ForceField = VecX;

inline VecX flatten(const std::vector<Vec3>& pts) {
    VecX v(3 * static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) v.segment<3>(3 * i) = pts[i];
    return v;
}

inline std::vector<Vec3> unflatten(const VecX& v) {
    std::vector<Vec3> pts(static_cast<std::size_t>(v.size() / 3));
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = v.segment<3>(3 * i);
    return pts;
}

inline bool all_finite(const VecX& v) { return v.allFinite(); }

}  // namespace elastreg
