#pragma once

#include "elastreg/errors.hpp"

namespace elastreg {

// Isotropic linear elastic material. With E = 1 the force scale is
// dimensionless; displacements do not depend on E (only forces do).
struct ElasticMaterial {
    double youngs_modulus = 1.0;
    double poisson_ratio = 0.49;

    double lame_lambda() const {
        return youngs_modulus * poisson_ratio / ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
    }
    double lame_mu() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }

    void validate() const {
        if (!(youngs_modulus > 0.0)) throw InputError("Young's modulus must be positive");
        if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5))
            throw InputError("Poisson's ratio must lie in [0, 0.5)");
    }
};

}  // namespace elastreg
