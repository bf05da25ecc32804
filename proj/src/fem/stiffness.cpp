#include "elastreg/fem/stiffness.hpp"

#include <cmath>
#include <fstream>

namespace elastreg {

Eigen::Matrix<double, 12, 12> element_stiffness(const std::array<Vec3, 4>& tet_nodes,
                                                const ElasticMaterial& material) {
    material.validate();

    Vec3 lo = tet_nodes[0], hi = tet_nodes[0];
    for (const Vec3& p : tet_nodes) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double diag = (hi - lo).norm();

    Mat3 J;
    J.col(0) = tet_nodes[1] - tet_nodes[0];
    J.col(1) = tet_nodes[2] - tet_nodes[0];
    J.col(2) = tet_nodes[3] - tet_nodes[0];
    const double volume = J.determinant() / 6.0;
    if (!(volume > 1e-12 * diag * diag * diag))
        throw DegenerateElement("degenerate tetrahedron (volume " + std::to_string(volume) + ")");

    // Constant shape-function gradients: columns of J^-T for nodes 1..3,
    // node 0 closes the partition of unity.
    Mat3 Jinv_t = J.inverse().transpose();
    Eigen::Matrix<double, 3, 4> grad;
    grad.col(1) = Jinv_t.col(0);
    grad.col(2) = Jinv_t.col(1);
    grad.col(3) = Jinv_t.col(2);
    grad.col(0) = -(grad.col(1) + grad.col(2) + grad.col(3));

    // Voigt order [xx yy zz xy yz zx] with engineering shear strains.
    Eigen::Matrix<double, 6, 12> B = Eigen::Matrix<double, 6, 12>::Zero();
    for (int a = 0; a < 4; ++a) {
        const double gx = grad(0, a), gy = grad(1, a), gz = grad(2, a);
        B(0, 3 * a + 0) = gx;
        B(1, 3 * a + 1) = gy;
        B(2, 3 * a + 2) = gz;
        B(3, 3 * a + 0) = gy;
        B(3, 3 * a + 1) = gx;
        B(4, 3 * a + 1) = gz;
        B(4, 3 * a + 2) = gy;
        B(5, 3 * a + 0) = gz;
        B(5, 3 * a + 2) = gx;
    }

    const double lambda = material.lame_lambda();
    const double mu = material.lame_mu();
    Eigen::Matrix<double, 6, 6> D = Eigen::Matrix<double, 6, 6>::Zero();
    D.block<3, 3>(0, 0).setConstant(lambda);
    D.block<3, 3>(0, 0).diagonal().array() += 2.0 * mu;
    D.block<3, 3>(3, 3).diagonal().setConstant(mu);

    return volume * B.transpose() * D * B;
}

SparseMat assemble(const VolumeMesh& mesh, const ElasticMaterial& material) {
    const Eigen::Index dof = 3 * static_cast<Eigen::Index>(mesh.num_nodes());
    std::vector<Eigen::Triplet<double>> upper;
    upper.reserve(mesh.tets.size() * 78);

    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        const auto& T = mesh.tets[t];
        Eigen::Matrix<double, 12, 12> Ke;
        try {
            Ke = element_stiffness({mesh.nodes[T[0]], mesh.nodes[T[1]], mesh.nodes[T[2]], mesh.nodes[T[3]]},
                                   material);
        } catch (const DegenerateElement& e) {
            throw DegenerateElement("tet " + std::to_string(t) + ": " + e.what());
        }
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                for (int i = 0; i < 3; ++i) {
                    for (int j = 0; j < 3; ++j) {
                        const Eigen::Index I = 3 * T[a] + i;
                        const Eigen::Index J = 3 * T[b] + j;
                        if (I <= J) upper.emplace_back(I, J, Ke(3 * a + i, 3 * b + j));
                    }
                }
            }
        }
    }

    SparseMat U(dof, dof);
    U.setFromTriplets(upper.begin(), upper.end());
    SparseMat K = U.selfadjointView<Eigen::Upper>();
    K.makeCompressed();
    return K;
}

SparseMat add_diagonal(const SparseMat& K, double value) {
    SparseMat I(K.rows(), K.cols());
    I.setIdentity();
    SparseMat out = K + value * I;
    out.makeCompressed();
    return out;
}

SparseMat add_node_penalty(const SparseMat& K, const std::vector<int>& nodes, double penalty) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(nodes.size() * 3);
    for (int v : nodes) {
        if (v < 0 || 3 * static_cast<Eigen::Index>(v) + 2 >= K.rows())
            throw DimensionMismatch("penalty node index out of range");
        for (int c = 0; c < 3; ++c) trips.emplace_back(3 * v + c, 3 * v + c, penalty);
    }
    SparseMat P(K.rows(), K.cols());
    P.setFromTriplets(trips.begin(), trips.end());
    SparseMat out = K + P;
    out.makeCompressed();
    return out;
}

StiffnessSystem factorize(SparseMat K, ElasticMaterial material, double k_ss) {
    StiffnessSystem sys;
    sys.K_ = std::move(K);
    sys.k_ss_ = k_ss;
    sys.material_ = material;
    sys.llt_ = std::make_shared<Eigen::SimplicialLLT<SparseMat>>();
    sys.llt_->compute(sys.K_);
    if (sys.llt_->info() != Eigen::Success)
        throw FactorizationError("sparse Cholesky factorization failed (matrix not positive definite)");

    // A singular matrix can slip through with tiny positive pivots; a probe
    // solve exposes the unusable factor.
    VecX probe(sys.K_.rows());
    for (Eigen::Index i = 0; i < probe.size(); ++i) probe[i] = std::cos(0.7 * static_cast<double>(i + 1));
    VecX z = sys.llt_->solve(probe);
    double rel = (sys.K_ * z - probe).norm() / probe.norm();
    if (!std::isfinite(rel) || rel > 1e-8)
        throw FactorizationError("factorization unusable (probe residual " + std::to_string(rel) + ")");
    return sys;
}

StiffnessSystem stabilize(const SparseMat& K, double k_ss, const ElasticMaterial& material) {
    if (k_ss < 0.0) throw InputError("soft spring constant must be non-negative");
    return factorize(k_ss > 0.0 ? add_diagonal(K, k_ss) : K, material, k_ss);
}

VecX StiffnessSystem::solve(const VecX& f) const {
    if (f.size() != K_.rows()) throw DimensionMismatch("force vector length != 3n");
    return llt_->solve(f);
}

VecX StiffnessSystem::solve_adjoint(const VecX& rhs) const { return solve(rhs); }

void write_matrix_market(const std::filesystem::path& path, const SparseMat& K) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    std::size_t nnz_lower = 0;
    for (int k = 0; k < K.outerSize(); ++k)
        for (SparseMat::InnerIterator it(K, k); it; ++it)
            if (it.row() >= it.col()) ++nnz_lower;
    out << K.rows() << " " << K.cols() << " " << nnz_lower << "\n";
    out.precision(17);
    for (int k = 0; k < K.outerSize(); ++k)
        for (SparseMat::InnerIterator it(K, k); it; ++it)
            if (it.row() >= it.col()) out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

}  // namespace elastreg
