#pragma once

// Independent reference implementations used to generate and check expected
// values. Everything here deliberately avoids the code paths under test:
// shape gradients come from finite differences of barycentric solves, the
// element volume from the Cayley-Menger determinant, the correspondence
// operator from an explicitly assembled sparse matrix, and so on.

#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "elastreg/correspondence/correspondence.hpp"
#include "elastreg/fem/material.hpp"
#include "elastreg/geometry/mesh.hpp"

namespace oracle {

using elastreg::ElasticMaterial;
using elastreg::CorrespondenceSet;
using elastreg::Mat3;
using elastreg::PointCloud;
using elastreg::SurfaceMesh;
using elastreg::Vec3;
using elastreg::VecX;
using elastreg::VolumeMesh;

// 12x12 element stiffness by 4-point quadrature of the elastic bilinear form,
// with finite-difference shape gradients and Cayley-Menger volume.
Eigen::Matrix<double, 12, 12> element_stiffness_quadrature(const std::array<Vec3, 4>& tet,
                                                           const ElasticMaterial& material);

// Minimum distance from p to the triangle via a barycentric sampling grid
// with `samples_per_edge` subdivisions.
double sampled_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                 int samples_per_edge);

// Closest point over all triangles by exhaustive scan (first-found ties).
struct BruteHit {
    int triangle = -1;
    double distance = 0.0;
    Vec3 point;
};
BruteHit brute_force_closest(const std::vector<std::array<int, 3>>& triangles,
                             const std::vector<Vec3>& positions, const Vec3& query);

// Explicit sparse 3m x 3n correspondence matrix.
Eigen::SparseMatrix<double> explicit_C(const CorrespondenceSet& corr);

// Minimizer of a smooth single-minimum function by expanding bracket plus
// golden-section refinement.
double golden_section_argmin(const std::function<double(double)>& f, double abs_tol);

// Deterministic random helpers.
Vec3 random_unit_vector(std::mt19937_64& rng);
elastreg::RigidTransform random_rigid(std::mt19937_64& rng, double max_angle_rad, double max_trans);

// Small fixtures.
VolumeMesh single_tet_mesh();          // unit tetrahedron
VolumeMesh two_tet_mesh();             // two tets sharing one face
VolumeMesh random_blob_mesh(std::uint64_t seed);  // small random-node valid mesh

}  // namespace oracle
