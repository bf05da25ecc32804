#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <filesystem>
#include <memory>
#include <vector>

#include "elastreg/fem/material.hpp"
#include "elastreg/geometry/mesh.hpp"

namespace elastreg {

using SparseMat = Eigen::SparseMatrix<double>;

// 12x12 stiffness of a constant-strain tetrahedron, DOF order
// [u0x u0y u0z u1x ... u3z]. Symmetric PSD of rank 6.
Eigen::Matrix<double, 12, 12> element_stiffness(const std::array<Vec3, 4>& tet_nodes,
                                                const ElasticMaterial& material);

// Global 3n x 3n stiffness, scatter-add of all element matrices. The raw
// matrix is singular (rigid modes); stabilize() or a boundary penalty makes
// it SPD. Exactly symmetric: only the upper triangle is accumulated and then
// mirrored.
SparseMat assemble(const VolumeMesh& mesh, const ElasticMaterial& material);

// K + value * I.
SparseMat add_diagonal(const SparseMat& K, double value);

// Adds `penalty` to the three diagonal entries of each listed node. Used to
// pin nodes (zero-boundary-condition scenario) without eliminating DOFs.
SparseMat add_node_penalty(const SparseMat& K, const std::vector<int>& nodes, double penalty);

// Assembled, stabilized stiffness with its cached sparse Cholesky factor.
// Immutable after construction; concurrent solves are safe.
class StiffnessSystem {
  public:
    const SparseMat& matrix() const { return K_; }
    double soft_spring() const { return k_ss_; }
    const ElasticMaterial& material() const { return material_; }
    Eigen::Index dof() const { return K_.rows(); }

    // Solves K u = f against the cached factor; never refactorizes.
    VecX solve(const VecX& f) const;
    // Transpose solve; identical to solve() because K is symmetric. Named so
    // the gradient code states which operator it means.
    VecX solve_adjoint(const VecX& rhs) const;

    friend StiffnessSystem factorize(SparseMat K, ElasticMaterial material, double k_ss);

  private:
    StiffnessSystem() = default;
    SparseMat K_;
    double k_ss_ = 0.0;
    ElasticMaterial material_;
    std::shared_ptr<Eigen::SimplicialLLT<SparseMat>> llt_;
};

// Factorizes an already-modified matrix (soft springs and/or penalties
// applied). Throws FactorizationError when the Cholesky factorization fails
// or a probe solve shows the factor is unusable (singular input).
StiffnessSystem factorize(SparseMat K, ElasticMaterial material, double k_ss);

// K <- K + k_ss I, then factorize. k_ss = 0 is accepted and fails with
// FactorizationError on any unconstrained mesh.
StiffnessSystem stabilize(const SparseMat& K, double k_ss,
                          const ElasticMaterial& material = ElasticMaterial{});

// Debug dump in Matrix Market coordinate format (symmetric, lower triangle).
void write_matrix_market(const std::filesystem::path& path, const SparseMat& K);

}  // namespace elastreg
