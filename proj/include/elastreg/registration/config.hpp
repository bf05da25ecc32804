#pragma once

#include <cstdint>
#include <vector>

#include "elastreg/errors.hpp"

namespace elastreg {

enum class StepMode { Optimal, Fixed };
enum class Momentum { Nesterov, None };

// Defaults follow the reference protocol: E = 1, nu = 0.49, k_ss = 0.01,
// 200 iterations, closed-form step, Nesterov momentum.
struct RegistrationConfig {
    double k_ss = 0.01;
    double poisson_ratio = 0.49;
    double youngs_modulus = 1.0;
    int max_iters = 200;

    // Nodes allowed to carry force. Empty means all surface nodes; interior
    // nodes never carry force.
    std::vector<int> force_mask;

    // Penalty-pinned nodes (known zero-boundary-condition scenario).
    std::vector<int> fixed_nodes;
    double fixed_penalty = 1e4;

    StepMode step_mode = StepMode::Optimal;
    double fixed_alpha = 1.0;  // used when step_mode == Fixed
    Momentum momentum = Momentum::Nesterov;

    // Evaluate the gradient residual at u(p^k) instead of the lagged u(f^k).
    bool gradient_at_momentum = false;

    // Optional early stop: relative J change below 1e-8 sustained over 10
    // iterations. Off by default (fixed iteration budget).
    bool early_stop = false;

    // Scale k_ss by mean(diag K) so the default stays meaningful for
    // physical (non-unit) Young's moduli.
    bool scale_kss_by_diag = false;

    int threads = 1;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (max_iters < 1) throw InputError("max_iters must be >= 1");
        if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5))
            throw InputError("Poisson's ratio must lie in [0, 0.5)");
        if (!(youngs_modulus > 0.0)) throw InputError("Young's modulus must be positive");
        if (k_ss < 0.0) throw InputError("soft spring constant must be non-negative");
        if (fixed_penalty <= 0.0) throw InputError("fixed-node penalty must be positive");
    }
};

}  // namespace elastreg
