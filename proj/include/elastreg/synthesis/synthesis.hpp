#pragma once

#include <cstdint>
#include <filesystem>

#include "elastreg/fem/stiffness.hpp"
#include "elastreg/geometry/mesh.hpp"

namespace elastreg {

// Constant per-node force over the surface nodes within `radius` of the
// node nearest seed_point.
struct PatchLoad {
    Vec3 seed_point{0.0, 0.0, 0.0};
    double radius = 25.0;
    Vec3 force{0.0, 0.0, 1.0};
};

// How the ground-truth surface load of a synthetic case is built.
struct ForceSpec {
    enum class Kind { None, Patches, RandomPatches };
    Kind kind = Kind::Patches;

    // Kind::Patches: explicit patch loads, contributions add up on overlap.
    std::vector<PatchLoad> patches;

    // Kind::RandomPatches: seeded random surface patches, each loaded with a
    // constant random-direction force of the given magnitude.
    int num_patches = 3;
    double radius = 25.0;
    double magnitude = 1.0;
};

// Ground-truthed registration problem: known forces, known displacements,
// and the cropped (optionally noisy) intraoperative cloud they produce.
struct SyntheticCase {
    VolumeMesh mesh;
    ForceField true_forces;
    DisplacementField true_u;
    PointCloud cloud;
    double visibility_ratio = 1.0;    // requested area fraction
    double achieved_visibility = 1.0;
    double noise_sigma = 0.0;
    std::uint64_t rng_seed = 0;
    std::vector<int> true_fixed_nodes;
    std::vector<int> true_force_nodes;
    RigidTransform perturbation;  // applied to the cloud; identity unless perturbed
};

// Surface nodes within a Euclidean ball around the surface node nearest to
// seed_point.
std::vector<int> surface_patch(const VolumeMesh& mesh, const Vec3& seed_point, double radius);

// Builds forces from spec, solves the forward problem (ZBC penalty when
// true_fixed_nodes is non-empty, soft springs otherwise), crops the deformed
// surface to the visibility fraction and adds isotropic Gaussian noise.
// Fully deterministic for a given seed.
SyntheticCase generate_case(const VolumeMesh& mesh, const ForceSpec& spec, double visibility,
                            double noise_sigma, std::uint64_t seed,
                            const std::vector<int>& true_fixed_nodes = {}, double fixed_penalty = 1e4,
                            double k_ss = 0.01);

// Applies a random rigid transform (angle and translation uniform within the
// bounds) to the cloud and records it for evaluation.
SyntheticCase perturb_rigid(const SyntheticCase& c, double max_angle_deg, double max_trans_mm,
                            std::uint64_t seed);

// Case directory: mesh.vtk, cloud.xyz, truth.json.
void save_case(const std::filesystem::path& dir, const SyntheticCase& c);
SyntheticCase load_case(const std::filesystem::path& dir);

// Canonical z-load liver phantom (the CLI's `fig2` preset): liver-scale
// ellipsoid pinned at an anterior-lateral attachment cap, pushed up by a
// wedge-like patch under the posterior surface plus a small local anterior
// retraction. All loads act perpendicular to the x-y plane.
struct ZLoadPhantom {
    VolumeMesh mesh;
    ForceSpec forces;
    std::vector<int> attachment_nodes;  // ground-truth ZBC cap
    double visibility = 0.25;
};
ZLoadPhantom zload_liver_phantom();

// Surface nodes on or below the given z plane (the "posterior" side of the
// z-load phantom at its default threshold).
std::vector<int> posterior_surface_nodes(const VolumeMesh& mesh, double z_threshold);

}  // namespace elastreg
