#include "elastreg/synthesis/synthesis.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "elastreg/geometry/io.hpp"
#include "elastreg/synthesis/phantom.hpp"

namespace elastreg {

using nlohmann::json;

std::vector<int> surface_patch(const VolumeMesh& mesh, const Vec3& seed_point, double radius) {
    const auto& surf_nodes = mesh.surface.node_indices;
    if (surf_nodes.empty()) throw EmptySurface("surface_patch: mesh has no surface nodes");
    int seed = surf_nodes.front();
    double best = (mesh.nodes[seed] - seed_point).squaredNorm();
    for (int v : surf_nodes) {
        const double d = (mesh.nodes[v] - seed_point).squaredNorm();
        if (d < best) {
            best = d;
            seed = v;
        }
    }
    std::vector<int> patch;
    const Vec3 center = mesh.nodes[seed];
    for (int v : surf_nodes)
        if ((mesh.nodes[v] - center).norm() <= radius) patch.push_back(v);
    return patch;
}

namespace {

ForceField build_forces(const VolumeMesh& mesh, const ForceSpec& spec, std::mt19937_64& rng,
                        std::vector<int>& force_nodes) {
    const int n = mesh.num_nodes();
    ForceField f = VecX::Zero(3 * n);
    force_nodes.clear();

    switch (spec.kind) {
        case ForceSpec::Kind::None:
            break;
        case ForceSpec::Kind::Patches: {
            std::set<int> used;
            for (const PatchLoad& patch : spec.patches) {
                for (int v : surface_patch(mesh, patch.seed_point, patch.radius)) {
                    f.segment<3>(3 * v) += patch.force;
                    used.insert(v);
                }
            }
            force_nodes.assign(used.begin(), used.end());
            break;
        }
        case ForceSpec::Kind::RandomPatches: {
            const auto& surf = mesh.surface.node_indices;
            std::uniform_int_distribution<std::size_t> pick(0, surf.size() - 1);
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::set<int> used;
            for (int p = 0; p < spec.num_patches; ++p) {
                const int seed_node = surf[pick(rng)];
                Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
                while (dir.norm() < 1e-8) dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
                dir.normalize();
                for (int v : surface_patch(mesh, mesh.nodes[seed_node], spec.radius)) {
                    f.segment<3>(3 * v) += spec.magnitude * dir;
                    used.insert(v);
                }
            }
            force_nodes.assign(used.begin(), used.end());
            break;
        }
    }
    return f;
}

}  // namespace

SyntheticCase generate_case(const VolumeMesh& mesh, const ForceSpec& spec, double visibility,
                            double noise_sigma, std::uint64_t seed,
                            const std::vector<int>& true_fixed_nodes, double fixed_penalty,
                            double k_ss) {
    if (!(visibility > 0.0 && visibility <= 1.0)) throw InputError("visibility must lie in (0, 1]");
    if (noise_sigma < 0.0) throw InputError("noise sigma must be non-negative");

    std::mt19937_64 rng(seed);

    SyntheticCase c;
    c.mesh = mesh;
    c.visibility_ratio = visibility;
    c.noise_sigma = noise_sigma;
    c.rng_seed = seed;
    c.true_fixed_nodes = true_fixed_nodes;
    c.true_forces = build_forces(mesh, spec, rng, c.true_force_nodes);

    ElasticMaterial material;  // E = 1, nu = 0.49
    SparseMat K = assemble(mesh, material);
    StiffnessSystem system = true_fixed_nodes.empty()
                                 ? stabilize(K, k_ss, material)
                                 : factorize(add_node_penalty(K, true_fixed_nodes, fixed_penalty), material, 0.0);
    c.true_u = system.solve(c.true_forces);

    // Crop around the most displaced surface node; ties and the zero-force
    // case fall back to the first surface node.
    const std::vector<Vec3> deformed = deformed_positions(mesh, c.true_u);
    int crop_node = mesh.surface.node_indices.front();
    double best = -1.0;
    for (int v : mesh.surface.node_indices) {
        const double d = c.true_u.segment<3>(3 * v).norm();
        if (d > best) {
            best = d;
            crop_node = v;
        }
    }
    CropResult crop = crop_surface(mesh.surface, deformed, deformed[crop_node], visibility);
    c.cloud = crop.cloud;
    c.achieved_visibility = crop.achieved_ratio;

    if (noise_sigma > 0.0) {
        std::normal_distribution<double> gauss(0.0, noise_sigma);
        for (Vec3& p : c.cloud.points) {
            Vec3 noise;
            do {
                noise = Vec3(gauss(rng), gauss(rng), gauss(rng));
            } while (noise.norm() > 3.5 * noise_sigma);
            p += noise;
        }
    }
    return c;
}

SyntheticCase perturb_rigid(const SyntheticCase& c, double max_angle_deg, double max_trans_mm,
                            std::uint64_t seed) {
    if (max_angle_deg < 0.0 || max_trans_mm < 0.0) throw InputError("perturbation bounds must be non-negative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Vec3 axis(gauss(rng), gauss(rng), gauss(rng));
    while (axis.norm() < 1e-8) axis = Vec3(gauss(rng), gauss(rng), gauss(rng));
    const double angle = unit(rng) * max_angle_deg * M_PI / 180.0;

    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    while (dir.norm() < 1e-8) dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
    dir.normalize();
    const Vec3 translation = std::cbrt(unit(rng)) * max_trans_mm * dir;  // uniform in the ball

    const RigidTransform T = RigidTransform::from_axis_angle(axis, angle, translation);
    SyntheticCase out = c;
    out.cloud = apply_rigid(c.cloud, T);
    out.perturbation = T.compose(c.perturbation);
    return out;
}

void save_case(const std::filesystem::path& dir, const SyntheticCase& c) {
    std::filesystem::create_directories(dir);
    save_volume_mesh(dir / "mesh.vtk", c.mesh);
    save_point_cloud(dir / "cloud.xyz", c.cloud);

    json truth;
    truth["seed"] = c.rng_seed;
    truth["visibility_requested"] = c.visibility_ratio;
    truth["visibility_achieved"] = c.achieved_visibility;
    truth["noise_sigma"] = c.noise_sigma;
    truth["true_forces"] = std::vector<double>(c.true_forces.data(), c.true_forces.data() + c.true_forces.size());
    truth["true_u"] = std::vector<double>(c.true_u.data(), c.true_u.data() + c.true_u.size());
    truth["true_fixed_nodes"] = c.true_fixed_nodes;
    truth["true_force_nodes"] = c.true_force_nodes;
    std::vector<double> pert;
    for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) pert.push_back(c.perturbation.rotation(r, col));
    for (int r = 0; r < 3; ++r) pert.push_back(c.perturbation.translation[r]);
    truth["perturbation"] = pert;

    std::ofstream out(dir / "truth.json");
    if (!out) throw InputError("cannot write " + (dir / "truth.json").string());
    out << truth.dump(2) << "\n";
}

ZLoadPhantom zload_liver_phantom() {
    ZLoadPhantom p;
    p.mesh = make_ellipsoid_mesh(Vec3(80.0, 55.0, 32.0), 7.0);
    p.forces.kind = ForceSpec::Kind::Patches;
    p.forces.patches = {
        {Vec3(15.0, 0.0, -32.0), 26.0, Vec3(0.0, 0.0, 0.7)},    // wedge push from below
        {Vec3(-15.0, 10.0, 32.0), 14.0, Vec3(0.0, 0.0, -0.35)},  // local anterior retraction
    };
    p.attachment_nodes = surface_patch(p.mesh, Vec3(62.0, 0.0, 30.0), 20.0);
    p.visibility = 0.25;
    return p;
}

std::vector<int> posterior_surface_nodes(const VolumeMesh& mesh, double z_threshold) {
    std::vector<int> nodes;
    for (int v : mesh.surface.node_indices)
        if (mesh.nodes[v].z() <= z_threshold) nodes.push_back(v);
    return nodes;
}

SyntheticCase load_case(const std::filesystem::path& dir) {
    SyntheticCase c;
    c.mesh = load_volume_mesh(dir / "mesh.vtk");
    c.cloud = load_point_cloud(dir / "cloud.xyz");

    std::ifstream in(dir / "truth.json");
    if (!in) throw InputError("cannot open " + (dir / "truth.json").string());
    json truth;
    try {
        in >> truth;
    } catch (const json::exception& e) {
        throw ParseError("truth.json: " + std::string(e.what()));
    }
    c.rng_seed = truth.at("seed").get<std::uint64_t>();
    c.visibility_ratio = truth.at("visibility_requested").get<double>();
    c.achieved_visibility = truth.at("visibility_achieved").get<double>();
    c.noise_sigma = truth.at("noise_sigma").get<double>();
    auto tf = truth.at("true_forces").get<std::vector<double>>();
    auto tu = truth.at("true_u").get<std::vector<double>>();
    c.true_forces = Eigen::Map<VecX>(tf.data(), tf.size());
    c.true_u = Eigen::Map<VecX>(tu.data(), tu.size());
    c.true_fixed_nodes = truth.at("true_fixed_nodes").get<std::vector<int>>();
    c.true_force_nodes = truth.at("true_force_nodes").get<std::vector<int>>();
    if (truth.contains("perturbation")) {
        auto p = truth.at("perturbation").get<std::vector<double>>();
        if (p.size() != 12) throw ParseError("truth.json: perturbation must hold 12 numbers");
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col) c.perturbation.rotation(r, col) = p[3 * r + col];
        for (int r = 0; r < 3; ++r) c.perturbation.translation[r] = p[9 + r];
    }
    if (c.true_u.size() != 3 * c.mesh.num_nodes()) throw ParseError("truth.json: true_u length mismatch");
    return c;
}

}  // namespace elastreg
