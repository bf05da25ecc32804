#include "elastreg/registration/solver.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace elastreg {

double data_term(const CorrespondenceSet& corr, const VecX& x, const VecX& u, const VecX& y) {
    if (x.size() != u.size()) throw DimensionMismatch("data_term: x and u lengths differ");
    if (y.size() != 3 * corr.num_points) throw DimensionMismatch("data_term: cloud length != 3m");
    return 0.5 * (apply_C(corr, x + u) - y).squaredNorm();
}

namespace {

void project_forces(VecX& g, const std::vector<char>& allowed_nodes) {
    if (allowed_nodes.empty()) return;
    for (std::size_t i = 0; i < allowed_nodes.size(); ++i)
        if (!allowed_nodes[i]) g.segment<3>(3 * i).setZero();
}

}  // namespace

VecX gradient(const StiffnessSystem& system, const CorrespondenceSet& corr, const VecX& x,
              const VecX& u_lagged, const VecX& y, const std::vector<char>& allowed_nodes) {
    const VecX residual = apply_C(corr, x + u_lagged) - y;
    VecX g = system.solve_adjoint(apply_Ct(corr, residual));
    project_forces(g, allowed_nodes);
    return g;
}

double optimal_step(const StiffnessSystem& system, const CorrespondenceSet& corr, const VecX& x,
                    const VecX& p, const VecX& y, const VecX& g) {
    const VecX w_g = system.solve(g);
    const VecX w_p = system.solve(p);
    const VecX cg = apply_C(corr, w_g);
    const VecX res_p = apply_C(corr, x + w_p) - y;
    const double denom = cg.squaredNorm();
    if (denom < 1e-30) throw ZeroCurvature("optimal_step: gradient lies in the correspondence nullspace");
    const double alpha = cg.dot(res_p) / denom;
    if (!std::isfinite(alpha)) throw NumericalError("optimal_step: non-finite step size");
    return alpha;
}

VecX nesterov_point(const VecX& f_curr, const VecX& f_prev, int k) {
    if (f_curr.size() != f_prev.size()) throw DimensionMismatch("nesterov_point: force lengths differ");
    if (k < 0) throw InputError("nesterov_point: negative iteration index");
    const double beta = static_cast<double>(k) / static_cast<double>(k + 3);
    return f_curr + beta * (f_curr - f_prev);
}

RegistrationResult register_surface(const VolumeMesh& mesh, const PointCloud& cloud,
                                    const RegistrationConfig& config) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();

    const int n = mesh.num_nodes();
    ElasticMaterial material{config.youngs_modulus, config.poisson_ratio};
    material.validate();

    SparseMat K = assemble(mesh, material);
    double k_ss = config.k_ss;
    if (config.scale_kss_by_diag && K.rows() > 0) {
        double mean_diag = 0.0;
        for (Eigen::Index i = 0; i < K.rows(); ++i) mean_diag += K.coeff(i, i);
        mean_diag /= static_cast<double>(K.rows());
        k_ss *= mean_diag;
    }
    if (!config.fixed_nodes.empty()) K = add_node_penalty(K, config.fixed_nodes, config.fixed_penalty);
    const StiffnessSystem system = k_ss > 0.0 ? stabilize(K, k_ss, material) : factorize(std::move(K), material, 0.0);

    // Feasible force set: explicit mask, or all surface nodes.
    std::vector<char> allowed(n, 0);
    if (config.force_mask.empty()) {
        for (int v : mesh.surface.node_indices) allowed[v] = 1;
    } else {
        for (int v : config.force_mask) {
            if (v < 0 || v >= n) throw InputError("force mask node index out of range");
            allowed[v] = 1;
        }
    }

    const VecX x = flatten(mesh.nodes);
    const VecX y = flatten(cloud.points);

    RegistrationResult result;
    result.trace.reserve(config.max_iters);

    VecX f_curr = VecX::Zero(3 * n);
    VecX f_prev = VecX::Zero(3 * n);
    VecX u = VecX::Zero(3 * n);

    int stall_count = 0;
    double prev_J = std::numeric_limits<double>::infinity();

    // Positions beyond this magnitude overflow the squared distances inside
    // the closest-point queries and are treated as a diverged state.
    constexpr double kPositionLimit = 1e150;

    for (int k = 0; k < config.max_iters; ++k) {
        u = system.solve(f_curr);
        if (!all_finite(u) || !all_finite(f_curr) || u.cwiseAbs().maxCoeff() > kPositionLimit)
            throw NonFiniteState("registration diverged at iteration " + std::to_string(k), result.trace);

        const CorrespondenceSet corr =
            build_correspondences(mesh.surface, deformed_positions(mesh, u), cloud, config.threads);

        const double J = data_term(corr, x, u, y);
        if (!std::isfinite(J))
            throw NonFiniteState("objective overflowed at iteration " + std::to_string(k), result.trace);

        const VecX p = config.momentum == Momentum::Nesterov ? nesterov_point(f_curr, f_prev, k) : f_curr;

        VecX g;
        if (config.gradient_at_momentum) {
            const VecX u_p = system.solve(p);
            g = gradient(system, corr, x, u_p, y, allowed);
        } else {
            g = gradient(system, corr, x, u, y, allowed);
        }
        if (!all_finite(g))
            throw NonFiniteState("gradient overflowed at iteration " + std::to_string(k), result.trace);
        const double grad_norm = g.norm();

        double alpha = 0.0;
        if (grad_norm == 0.0) {
            // Residual already zero on the feasible set; nothing to do.
            result.trace.push_back({k, J, 0.0, 0.0, corr.mean_distance()});
            result.iterations = k + 1;
            break;
        }
        alpha = config.step_mode == StepMode::Optimal ? optimal_step(system, corr, x, p, y, g)
                                                      : config.fixed_alpha;

        f_prev = f_curr;
        f_curr = p - alpha * g;
        if (!all_finite(f_curr))
            throw NonFiniteState("registration diverged at iteration " + std::to_string(k), result.trace);

        result.trace.push_back({k, J, alpha, grad_norm, corr.mean_distance()});
        result.iterations = k + 1;

        if (config.early_stop) {
            const double rel = std::abs(prev_J - J) / std::max(J, 1e-300);
            stall_count = rel < 1e-8 ? stall_count + 1 : 0;
            if (stall_count >= 10) break;
            prev_J = J;
        }
    }

    result.f = f_curr;
    result.u = system.solve(f_curr);
    if (!all_finite(result.u)) throw NonFiniteState("final solve produced non-finite displacements", result.trace);

    result.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

void save_trace_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& trace) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(17);
    out << "iter,J,alpha,grad_norm,mean_residual\n";
    for (const auto& r : trace)
        out << r.iter << "," << r.J << "," << r.alpha << "," << r.grad_norm << "," << r.mean_residual << "\n";
}

}  // namespace elastreg
