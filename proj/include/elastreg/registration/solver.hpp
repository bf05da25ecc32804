#pragma once

#include <filesystem>

#include "elastreg/correspondence/correspondence.hpp"
#include "elastreg/fem/stiffness.hpp"
#include "elastreg/registration/config.hpp"

namespace elastreg {

struct IterationRecord {
    int iter = 0;
    double J = 0.0;
    double alpha = 0.0;
    double grad_norm = 0.0;
    double mean_residual = 0.0;
};

// Raised when an iterate turns non-finite; carries the trace recorded so far.
struct NonFiniteState : NumericalError {
    NonFiniteState(const std::string& msg, std::vector<IterationRecord> tr)
        : NumericalError(msg), trace(std::move(tr)) {}
    std::vector<IterationRecord> trace;
};

struct RegistrationResult {
    DisplacementField u;  // final displacements, u = K^-1 f
    ForceField f;         // final surface forces
    std::vector<IterationRecord> trace;
    int iterations = 0;
    double wall_time_sec = 0.0;
};

// Data term J = 1/2 |C (x + u) - y|^2 with the correspondences held fixed.
double data_term(const CorrespondenceSet& corr, const VecX& x, const VecX& u, const VecX& y);

// Iteration-lagged gradient of J with respect to the forces:
//   g = K^-1 C^T (C (x + u_lagged) - y),
// then projected onto the feasible force set (entries off allowed_nodes are
// zeroed). allowed_nodes is a per-node mask of length n; empty means no mask.
VecX gradient(const StiffnessSystem& system, const CorrespondenceSet& corr, const VecX& x,
              const VecX& u_lagged, const VecX& y, const std::vector<char>& allowed_nodes);

// Closed-form minimizer of alpha -> 1/2 |C (x + K^-1 (p - alpha g)) - y|^2:
//   alpha = (C K^-1 g) . (C (x + K^-1 p) - y) / |C K^-1 g|^2.
// Two cached-factor solves and two applications of C.
double optimal_step(const StiffnessSystem& system, const CorrespondenceSet& corr, const VecX& x,
                    const VecX& p, const VecX& y, const VecX& g);

// Momentum point p^k = f^k + k/(k+3) (f^k - f^{k-1}); k = 0 gives p = f^0.
VecX nesterov_point(const VecX& f_curr, const VecX& f_prev, int k);

// Full force-driven registration loop. The mesh and cloud must already be
// rigidly pre-aligned. The reference configuration x is never mutated;
// deformed positions are always x + u.
RegistrationResult register_surface(const VolumeMesh& mesh, const PointCloud& cloud,
                                    const RegistrationConfig& config);

void save_trace_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& trace);

}  // namespace elastreg
