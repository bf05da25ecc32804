// Command-line front end: registration, synthetic-case generation,
// evaluation, rigid alignment, parameter sweeps and file inspection.
//
// Exit codes: 0 success, 1 usage, 2 input error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "elastreg/evaluation/evaluation.hpp"
#include "elastreg/geometry/io.hpp"
#include "elastreg/registration/rigid.hpp"
#include "elastreg/registration/solver.hpp"
#include "elastreg/synthesis/phantom.hpp"
#include "elastreg/synthesis/synthesis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace elastreg;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 42;
    int threads = 1;
    bool trace = false;
};

struct RegisterOptions {
    std::string mesh_path, cloud_path, out_dir;
    std::string force_mask_path, fixed_nodes_path, init_transform_path;
    double kss = 0.01;
    double nu = 0.49;
    double youngs = 1.0;
    int iters = 200;
    std::string step = "optimal";
    double alpha = 1.0;
    std::string momentum = "nesterov";
    double fixed_penalty = 1e4;
    bool gradient_at_momentum = false;
    bool early_stop = false;
    bool scale_kss = false;
};

struct SimulateOptions {
    std::string mesh_path, preset, out_dir;
    std::vector<double> visibility{0.25};
    std::vector<double> noise{0.0};
    int num_seeds = 1;
    std::string force_kind = "patches";  // patches | random | none
    int random_patches = 3;
    double patch_radius = 25.0;
    double patch_magnitude = 0.5;
};

struct EvaluateOptions {
    std::string case_dir, run_dir, cases_dir, runs_dir;
    std::string fiducials_path, mesh_path, transform_path, out_path;
    bool nearest1 = false;
};

struct IcpOptions {
    std::string source_path, target_path, out_path, apply_path;
    int max_iters = 50;
    double tol = 1e-6;
};

struct SweepOptions {
    std::string case_dir, cases_dir, out_path;
    std::vector<double> kss_grid, nu_grid;
    std::vector<int> iters_grid;
};

struct InfoOptions {
    std::string mesh_path, cloud_path, case_dir;
};

std::string double_str(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

PointCloud load_cloud_or_mesh_vertices(const fs::path& path) {
    std::ifstream probe(path);
    if (!probe) throw InputError("cannot open " + path.string());
    std::string first;
    std::getline(probe, first);
    probe.close();
    if (first.rfind("tetmesh", 0) == 0 || first.rfind("# vtk", 0) == 0) {
        VolumeMesh mesh = load_volume_mesh(path);
        PointCloud cloud;
        for (int v : mesh.surface.node_indices) cloud.points.push_back(mesh.nodes[v]);
        return cloud;
    }
    return load_point_cloud(path);
}

RegistrationConfig build_config(const RegisterOptions& opt, const GlobalOptions& global, int num_nodes) {
    RegistrationConfig cfg;
    cfg.k_ss = opt.kss;
    cfg.poisson_ratio = opt.nu;
    cfg.youngs_modulus = opt.youngs;
    cfg.max_iters = opt.iters;
    cfg.fixed_penalty = opt.fixed_penalty;
    cfg.step_mode = opt.step == "fixed" ? StepMode::Fixed : StepMode::Optimal;
    cfg.fixed_alpha = opt.alpha;
    cfg.momentum = opt.momentum == "none" ? Momentum::None : Momentum::Nesterov;
    cfg.gradient_at_momentum = opt.gradient_at_momentum;
    cfg.early_stop = opt.early_stop;
    cfg.scale_kss_by_diag = opt.scale_kss;
    cfg.threads = global.threads;
    cfg.rng_seed = global.seed;
    if (!opt.force_mask_path.empty()) cfg.force_mask = load_node_set(opt.force_mask_path, num_nodes);
    if (!opt.fixed_nodes_path.empty()) cfg.fixed_nodes = load_node_set(opt.fixed_nodes_path, num_nodes);
    return cfg;
}

int cmd_register(const RegisterOptions& opt, const GlobalOptions& global) {
    VolumeMesh mesh = load_volume_mesh(opt.mesh_path);
    PointCloud cloud = load_point_cloud(opt.cloud_path);

    RigidTransform init = RigidTransform::identity();
    if (!opt.init_transform_path.empty()) {
        init = load_rigid_transform(opt.init_transform_path);
        mesh = apply_rigid(mesh, init);
    }

    RegistrationConfig cfg = build_config(opt, global, mesh.num_nodes());
    RegistrationResult result;
    try {
        result = register_surface(mesh, cloud, cfg);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("registration: ") + e.what());
    }

    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);
    const std::string mesh_name =
        fs::path(opt.mesh_path).extension() == ".vtk" ? "deformed.vtk" : "deformed.tet";
    VolumeMesh deformed = mesh;
    for (int i = 0; i < mesh.num_nodes(); ++i) deformed.nodes[i] = mesh.nodes[i] + result.u.segment<3>(3 * i);
    save_volume_mesh(out / mesh_name, deformed);
    save_nodal_field_csv(out / "u.csv", result.u, "u");
    save_nodal_field_csv(out / "f.csv", result.f, "f");
    save_trace_csv(out / "trace.csv", result.trace);

    if (global.trace) {
        CorrespondenceSet corr = build_correspondences(mesh.surface, deformed_positions(mesh, result.u),
                                                       cloud, cfg.threads);
        dump_correspondences_csv(out / "correspondences.csv", corr);
    }

    json meta;
    meta["command"] = "register";
    meta["mesh"] = opt.mesh_path;
    meta["cloud"] = opt.cloud_path;
    meta["init_transform"] = opt.init_transform_path;
    meta["config"] = {{"k_ss", cfg.k_ss},
                      {"poisson_ratio", cfg.poisson_ratio},
                      {"youngs_modulus", cfg.youngs_modulus},
                      {"max_iters", cfg.max_iters},
                      {"step_mode", opt.step},
                      {"fixed_alpha", cfg.fixed_alpha},
                      {"momentum", opt.momentum},
                      {"fixed_penalty", cfg.fixed_penalty},
                      {"gradient_at_momentum", cfg.gradient_at_momentum},
                      {"early_stop", cfg.early_stop},
                      {"scale_kss_by_diag", cfg.scale_kss_by_diag},
                      {"force_mask_nodes", cfg.force_mask.size()},
                      {"fixed_nodes", cfg.fixed_nodes.size()},
                      {"threads", cfg.threads},
                      {"rng_seed", cfg.rng_seed}};
    meta["iterations"] = result.iterations;
    meta["final_J"] = result.trace.empty() ? 0.0 : result.trace.back().J;
    meta["final_mean_residual"] = result.trace.empty() ? 0.0 : result.trace.back().mean_residual;
    meta["wall_time_sec"] = result.wall_time_sec;
    std::ofstream meta_out(out / "meta.json");
    meta_out << meta.dump(2) << "\n";

    std::cout << "registered " << opt.mesh_path << " to " << opt.cloud_path << ": " << result.iterations
              << " iterations, final J " << (result.trace.empty() ? 0.0 : result.trace.back().J) << "\n";
    return 0;
}

std::string case_dir_name(double visibility, double noise, std::uint64_t seed) {
    std::ostringstream ss;
    ss << "case_v" << visibility << "_n" << noise << "_s" << seed;
    return ss.str();
}

int cmd_simulate(const SimulateOptions& opt, const GlobalOptions& global) {
    VolumeMesh mesh;
    ForceSpec spec;
    std::vector<int> zbc;

    if (!opt.preset.empty()) {
        if (opt.preset != "fig2") throw InputError("unknown preset '" + opt.preset + "'");
        ZLoadPhantom phantom = zload_liver_phantom();
        mesh = std::move(phantom.mesh);
        spec = phantom.forces;
        zbc = phantom.attachment_nodes;
    } else {
        if (opt.mesh_path.empty()) throw InputError("simulate needs --mesh or --preset");
        mesh = load_volume_mesh(opt.mesh_path);
        if (opt.force_kind == "random") {
            spec.kind = ForceSpec::Kind::RandomPatches;
            spec.num_patches = opt.random_patches;
            spec.radius = opt.patch_radius;
            spec.magnitude = opt.patch_magnitude;
        } else if (opt.force_kind == "none") {
            spec.kind = ForceSpec::Kind::None;
        } else {
            // One wedge-style push from below the mesh, axis-aligned.
            Vec3 lo = mesh.nodes.front(), hi = mesh.nodes.front();
            for (const Vec3& p : mesh.nodes) {
                lo = lo.cwiseMin(p);
                hi = hi.cwiseMax(p);
            }
            spec.kind = ForceSpec::Kind::Patches;
            spec.patches = {{Vec3(0.5 * (lo.x() + hi.x()), 0.5 * (lo.y() + hi.y()), lo.z()),
                             opt.patch_radius, Vec3(0, 0, opt.patch_magnitude)}};
        }
    }

    fs::create_directories(opt.out_dir);
    int count = 0;
    for (double vis : opt.visibility) {
        for (double noise : opt.noise) {
            for (int s = 0; s < opt.num_seeds; ++s) {
                const std::uint64_t seed = global.seed + static_cast<std::uint64_t>(s);
                SyntheticCase c = generate_case(mesh, spec, vis, noise, seed, zbc);
                const fs::path dir = fs::path(opt.out_dir) / case_dir_name(vis, noise, seed);
                save_case(dir, c);
                if (!zbc.empty()) save_node_set(dir / "zbc.csv", zbc);
                if (!c.true_force_nodes.empty()) save_node_set(dir / "force_nodes.csv", c.true_force_nodes);
                ++count;
            }
        }
    }
    std::cout << "wrote " << count << " case director" << (count == 1 ? "y" : "ies") << " under "
              << opt.out_dir << "\n";
    return 0;
}

EvalReport evaluate_run_against_case(const fs::path& case_dir, const fs::path& run_dir) {
    SyntheticCase c = load_case(case_dir);
    VecX u = load_nodal_field_csv(run_dir / "u.csv");
    if (u.size() != c.true_u.size())
        throw DimensionMismatch("run displacements do not match the case mesh");
    std::vector<double> errors;
    errors.reserve(c.mesh.num_nodes());
    for (int i = 0; i < c.mesh.num_nodes(); ++i)
        errors.push_back((u.segment<3>(3 * i) - c.true_u.segment<3>(3 * i)).norm());
    EvalReport report = EvalReport::from_errors(std::move(errors));
    report.metadata["case"] = case_dir.filename().string();
    report.metadata["visibility"] = double_str(c.visibility_ratio);
    report.metadata["noise"] = double_str(c.noise_sigma);
    report.metadata["method"] = "nodal-displacement";
    return report;
}

int cmd_evaluate(const EvaluateOptions& opt, const GlobalOptions&) {
    if (!opt.cases_dir.empty() || !opt.runs_dir.empty()) {
        if (opt.cases_dir.empty() || opt.runs_dir.empty())
            throw InputError("batch evaluation needs both --cases and --runs");
        std::vector<EvalReport> reports;
        std::vector<fs::path> case_dirs;
        for (const auto& entry : fs::directory_iterator(opt.cases_dir))
            if (entry.is_directory() && fs::exists(entry.path() / "truth.json"))
                case_dirs.push_back(entry.path());
        std::sort(case_dirs.begin(), case_dirs.end());
        for (const auto& case_dir : case_dirs) {
            const fs::path run_dir = fs::path(opt.runs_dir) / case_dir.filename();
            if (!fs::exists(run_dir / "u.csv")) continue;
            reports.push_back(evaluate_run_against_case(case_dir, run_dir));
        }
        if (reports.empty()) throw InputError("no matching case/run pairs found");
        auto rows = summarize_runs(reports, [](const EvalReport& r) {
            return "v" + r.metadata.at("visibility") + "_n" + r.metadata.at("noise");
        });
        for (const auto& row : rows) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%s: %.2f ± %.2f (%.2f) over %d runs", row.group.c_str(),
                          row.mean_of_means, row.std_of_means, row.median_of_means, row.runs);
            std::cout << buf << "\n";
        }
        if (!opt.out_path.empty()) save_summary_csv(opt.out_path, rows);
        return 0;
    }

    EvalReport report;
    if (!opt.fiducials_path.empty()) {
        if (opt.mesh_path.empty() || opt.run_dir.empty())
            throw InputError("fiducial evaluation needs --mesh and --run");
        TargetSet targets = load_targets_csv(opt.fiducials_path);
        VolumeMesh mesh = load_volume_mesh(opt.mesh_path);
        RigidTransform T = RigidTransform::identity();
        if (!opt.transform_path.empty()) T = load_rigid_transform(opt.transform_path);
        VecX u = load_nodal_field_csv(fs::path(opt.run_dir) / "u.csv");
        if (u.size() != 3 * mesh.num_nodes())
            throw DimensionMismatch("run displacements do not match --mesh");
        const InterpolationMode mode =
            opt.nearest1 ? InterpolationMode::Nearest1 : InterpolationMode::InverseDistance4;
        report = compute_errors(targets, [&](const Vec3& x) -> Vec3 {
            const Vec3 aligned = T.apply(x);
            return aligned + interpolate_displacement(mesh, u, aligned, mode);
        });
        report.metadata["method"] = opt.nearest1 ? "tre-nn1" : "tre-idw4";
        report.metadata["fiducials"] = opt.fiducials_path;
    } else {
        if (opt.case_dir.empty() || opt.run_dir.empty())
            throw InputError("evaluate needs --case and --run (or --fiducials, or --cases/--runs)");
        report = evaluate_run_against_case(opt.case_dir, opt.run_dir);
    }

    std::cout << report.format_line() << "\n";
    if (!opt.out_path.empty()) save_report_json(opt.out_path, report);
    return 0;
}

int cmd_icp(const IcpOptions& opt, const GlobalOptions&) {
    PointCloud source = load_cloud_or_mesh_vertices(opt.source_path);
    PointCloud target = load_cloud_or_mesh_vertices(opt.target_path);
    IcpResult result = rigid_icp(source, target, opt.max_iters, opt.tol);
    if (!opt.out_path.empty()) save_rigid_transform(opt.out_path, result.transform);
    if (!opt.apply_path.empty()) save_point_cloud(opt.apply_path, apply_rigid(source, result.transform));
    std::cout << "icp: rms " << result.rms << " after " << result.iterations << " iterations\n";
    return 0;
}

int cmd_sweep(const SweepOptions& opt, const GlobalOptions& global) {
    std::vector<fs::path> case_dirs;
    if (!opt.case_dir.empty()) case_dirs.push_back(opt.case_dir);
    if (!opt.cases_dir.empty())
        for (const auto& entry : fs::directory_iterator(opt.cases_dir))
            if (entry.is_directory() && fs::exists(entry.path() / "truth.json"))
                case_dirs.push_back(entry.path());
    std::sort(case_dirs.begin(), case_dirs.end());
    if (case_dirs.empty()) throw InputError("sweep needs --case or --cases");
    if (opt.kss_grid.empty() && opt.nu_grid.empty() && opt.iters_grid.empty())
        throw InputError("sweep needs at least one of --kss-grid, --nu-grid, --iters-grid");

    std::ofstream csv;
    if (!opt.out_path.empty()) {
        csv.open(opt.out_path);
        if (!csv) throw InputError("cannot write " + opt.out_path);
        csv << "param,value,case,mean_error,std_error,median_error,max_error,final_J\n";
        csv.precision(17);
    }

    struct Row {
        std::string param;
        double value;
        double mean;
    };
    std::vector<Row> rows;

    auto run_one = [&](const std::string& param, double value, RegistrationConfig cfg) {
        for (const auto& case_dir : case_dirs) {
            SyntheticCase c = load_case(case_dir);
            cfg.threads = global.threads;
            RegistrationResult r = register_surface(c.mesh, c.cloud, cfg);
            std::vector<double> errors;
            for (int i = 0; i < c.mesh.num_nodes(); ++i)
                errors.push_back((r.u.segment<3>(3 * i) - c.true_u.segment<3>(3 * i)).norm());
            EvalReport report = EvalReport::from_errors(std::move(errors));
            if (csv.is_open())
                csv << param << "," << value << "," << case_dir.filename().string() << "," << report.mean
                    << "," << report.stddev << "," << report.median << "," << report.max << ","
                    << r.trace.back().J << "\n";
            rows.push_back({param, value, report.mean});
        }
    };

    for (double kss : opt.kss_grid) {
        RegistrationConfig cfg;
        cfg.k_ss = kss;
        run_one("k_ss", kss, cfg);
    }
    for (double nu : opt.nu_grid) {
        RegistrationConfig cfg;
        cfg.poisson_ratio = nu;
        run_one("nu", nu, cfg);
    }
    for (int iters : opt.iters_grid) {
        RegistrationConfig cfg;
        cfg.max_iters = iters;
        run_one("iters", iters, cfg);
    }

    // Grouped summary, one line per (param, value).
    std::map<std::pair<std::string, double>, std::vector<double>> groups;
    for (const auto& row : rows) groups[{row.param, row.value}].push_back(row.mean);
    for (const auto& [key, means] : groups) {
        double sum = 0.0;
        for (double m : means) sum += m;
        std::cout << key.first << "=" << key.second << ": mean of mean errors "
                  << sum / static_cast<double>(means.size()) << " mm over " << means.size() << " case"
                  << (means.size() == 1 ? "" : "s") << "\n";
    }
    return 0;
}

int cmd_info(const InfoOptions& opt, const GlobalOptions&) {
    if (!opt.mesh_path.empty()) {
        VolumeMesh mesh = load_volume_mesh(opt.mesh_path);
        Vec3 lo = mesh.nodes.front(), hi = mesh.nodes.front();
        for (const Vec3& p : mesh.nodes) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        double volume = 0.0;
        for (int t = 0; t < mesh.num_tets(); ++t) volume += mesh.tet_volume(t);
        std::cout << "mesh: " << mesh.num_nodes() << " nodes, " << mesh.num_tets() << " tets\n"
                  << "surface: " << mesh.surface.num_nodes() << " nodes, "
                  << mesh.surface.num_triangles() << " triangles, area " << mesh.surface.total_area()
                  << " mm^2\n"
                  << "volume: " << volume << " mm^3\n"
                  << "bbox: [" << lo.transpose() << "] to [" << hi.transpose() << "]\n";
    } else if (!opt.cloud_path.empty()) {
        PointCloud cloud = load_point_cloud(opt.cloud_path);
        Vec3 lo = cloud.points.front(), hi = cloud.points.front();
        for (const Vec3& p : cloud.points) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        std::cout << "cloud: " << cloud.size() << " points\n"
                  << "bbox: [" << lo.transpose() << "] to [" << hi.transpose() << "]\n";
    } else if (!opt.case_dir.empty()) {
        SyntheticCase c = load_case(opt.case_dir);
        std::cout << "case: seed " << c.rng_seed << ", visibility " << c.visibility_ratio << " (achieved "
                  << c.achieved_visibility << "), noise sigma " << c.noise_sigma << " mm\n"
                  << "mesh: " << c.mesh.num_nodes() << " nodes, " << c.mesh.num_tets() << " tets\n"
                  << "cloud: " << c.cloud.size() << " points\n"
                  << "fixed nodes: " << c.true_fixed_nodes.size() << ", force nodes: "
                  << c.true_force_nodes.size() << "\n";
    } else {
        throw InputError("info needs --mesh, --cloud or --case");
    }
    return 0;
}

// Accepts JSON config files alongside CLI11's native TOML-style format by
// translating the JSON object into config lines.
std::optional<std::string> translate_json_config(int argc, char** argv) {
    std::string path;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") path = argv[i + 1];
    if (path.empty() || fs::path(path).extension() != ".json") return std::nullopt;

    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("config " + path + ": " + e.what());
    }
    std::ostringstream ini;
    std::function<void(const json&, const std::string&)> emit = [&](const json& obj,
                                                                    const std::string& section) {
        if (!section.empty()) ini << "[" << section << "]\n";
        for (const auto& [key, value] : obj.items()) {
            if (value.is_object()) continue;
            ini << key << "=" << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
        }
        for (const auto& [key, value] : obj.items())
            if (value.is_object()) emit(value, section.empty() ? key : section + "." + key);
    };
    emit(j, "");
    return ini.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Force-driven elastic surface registration toolkit"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "Base RNG seed")->capture_default_str();
    app.add_option("--threads", global.threads, "Worker threads for correspondence queries")
        ->capture_default_str();
    app.add_flag("--trace", global.trace, "Emit extra per-run debug dumps");
    app.set_config("--config", "", "Config file (TOML-style key=value, or JSON)");
    app.allow_config_extras(false);

    RegisterOptions reg;
    CLI::App* reg_cmd = app.add_subcommand("register", "Register a mesh to an intraoperative cloud");
    reg_cmd->add_option("--mesh", reg.mesh_path, "Preoperative tetrahedral mesh")->required();
    reg_cmd->add_option("--cloud", reg.cloud_path, "Intraoperative point cloud")->required();
    reg_cmd->add_option("--out", reg.out_dir, "Output directory")->required();
    reg_cmd->add_option("--kss", reg.kss, "Soft spring constant")->capture_default_str();
    reg_cmd->add_option("--nu", reg.nu, "Poisson's ratio")->capture_default_str();
    reg_cmd->add_option("--youngs", reg.youngs, "Young's modulus")->capture_default_str();
    reg_cmd->add_option("--iters", reg.iters, "Iteration budget")->capture_default_str();
    reg_cmd->add_option("--step", reg.step, "Step size mode: optimal or fixed")
        ->check(CLI::IsMember({"optimal", "fixed"}))
        ->capture_default_str();
    reg_cmd->add_option("--alpha", reg.alpha, "Step size for --step fixed")->capture_default_str();
    reg_cmd->add_option("--momentum", reg.momentum, "Momentum mode: nesterov or none")
        ->check(CLI::IsMember({"nesterov", "none"}))
        ->capture_default_str();
    reg_cmd->add_option("--force-mask", reg.force_mask_path, "Node set allowed to carry force");
    reg_cmd->add_option("--fixed-nodes", reg.fixed_nodes_path, "Penalty-pinned node set");
    reg_cmd->add_option("--fixed-penalty", reg.fixed_penalty, "Penalty stiffness for --fixed-nodes")
        ->capture_default_str();
    reg_cmd->add_option("--init-transform", reg.init_transform_path,
                        "Rigid pre-alignment applied to the mesh (4x4 row-major)");
    reg_cmd->add_flag("--gradient-at-momentum", reg.gradient_at_momentum,
                      "Evaluate the gradient residual at the momentum point");
    reg_cmd->add_flag("--early-stop", reg.early_stop, "Stop when J stalls for 10 iterations");
    reg_cmd->add_flag("--scale-kss", reg.scale_kss, "Scale k_ss by mean(diag K)");

    SimulateOptions sim;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Generate ground-truthed synthetic cases");
    sim_cmd->add_option("--mesh", sim.mesh_path, "Mesh to deform");
    sim_cmd->add_option("--preset", sim.preset, "Built-in scenario (fig2: z-load liver phantom)");
    sim_cmd->add_option("--out", sim.out_dir, "Output directory")->required();
    sim_cmd->add_option("--visibility", sim.visibility, "Visibility ratios")->delimiter(',');
    sim_cmd->add_option("--noise", sim.noise, "Noise sigmas (mm)")->delimiter(',');
    sim_cmd->add_option("--seeds", sim.num_seeds, "Number of consecutive seeds")->capture_default_str();
    sim_cmd->add_option("--force-kind", sim.force_kind, "patches, random or none")
        ->check(CLI::IsMember({"patches", "random", "none"}))
        ->capture_default_str();
    sim_cmd->add_option("--patches", sim.random_patches, "Random patch count")->capture_default_str();
    sim_cmd->add_option("--patch-radius", sim.patch_radius, "Patch radius (mm)")->capture_default_str();
    sim_cmd->add_option("--patch-magnitude", sim.patch_magnitude, "Per-node force magnitude")
        ->capture_default_str();

    EvaluateOptions eval;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "Error metrics for a run");
    eval_cmd->add_option("--case", eval.case_dir, "Synthetic case directory");
    eval_cmd->add_option("--run", eval.run_dir, "Registration output directory");
    eval_cmd->add_option("--cases", eval.cases_dir, "Batch: directory of case directories");
    eval_cmd->add_option("--runs", eval.runs_dir, "Batch: directory of run directories");
    eval_cmd->add_option("--fiducials", eval.fiducials_path, "Fiducial CSV for TRE");
    eval_cmd->add_option("--mesh", eval.mesh_path, "Mesh used for the run (fiducial mode)");
    eval_cmd->add_option("--transform", eval.transform_path, "Rigid pre-alignment used for the run");
    eval_cmd->add_option("--out", eval.out_path, "Report output path (JSON or CSV for batch)");
    eval_cmd->add_flag("--nearest1", eval.nearest1, "Strict 1-NN displacement propagation");

    IcpOptions icp;
    CLI::App* icp_cmd = app.add_subcommand("icp", "Rigid pre-alignment between clouds or meshes");
    icp_cmd->add_option("--source", icp.source_path, "Source cloud (or mesh, surface vertices)")
        ->required();
    icp_cmd->add_option("--target", icp.target_path, "Target cloud (or mesh, surface vertices)")
        ->required();
    icp_cmd->add_option("--out", icp.out_path, "Write the 4x4 transform here");
    icp_cmd->add_option("--apply", icp.apply_path, "Write the aligned source cloud here");
    icp_cmd->add_option("--max-iters", icp.max_iters, "Iteration cap")->capture_default_str();
    icp_cmd->add_option("--tol", icp.tol, "RMS change tolerance")->capture_default_str();

    SweepOptions sweep;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "One-at-a-time parameter sensitivity runs");
    sweep_cmd->add_option("--case", sweep.case_dir, "Single case directory");
    sweep_cmd->add_option("--cases", sweep.cases_dir, "Directory of case directories");
    sweep_cmd->add_option("--out", sweep.out_path, "Per-run CSV output");
    sweep_cmd->add_option("--kss-grid", sweep.kss_grid, "Soft-spring values")->delimiter(',');
    sweep_cmd->add_option("--nu-grid", sweep.nu_grid, "Poisson ratio values")->delimiter(',');
    sweep_cmd->add_option("--iters-grid", sweep.iters_grid, "Iteration budgets")->delimiter(',');

    InfoOptions info;
    CLI::App* info_cmd = app.add_subcommand("info", "Inspect a mesh, cloud or case");
    info_cmd->add_option("--mesh", info.mesh_path, "Mesh file");
    info_cmd->add_option("--cloud", info.cloud_path, "Point cloud file");
    info_cmd->add_option("--case", info.case_dir, "Case directory");

    try {
        if (auto ini = translate_json_config(argc, argv)) {
            // Swap the JSON config for its translated form on disk.
            const fs::path tmp = fs::temp_directory_path() /
                                 ("elastreg_cfg_" + std::to_string(::getpid()) + ".ini");
            std::ofstream out(tmp);
            out << *ini;
            out.close();
            std::vector<std::string> args;
            for (int i = 0; i < argc; ++i) args.emplace_back(argv[i]);
            for (std::size_t i = 1; i + 1 < args.size(); ++i)
                if (args[i] == "--config") args[i + 1] = tmp.string();
            std::vector<char*> raw;
            raw.reserve(args.size());
            for (auto& a : args) raw.push_back(a.data());
            app.parse(static_cast<int>(raw.size()), raw.data());
        } else {
            app.parse(argc, argv);
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (reg_cmd->parsed()) return cmd_register(reg, global);
        if (sim_cmd->parsed()) return cmd_simulate(sim, global);
        if (eval_cmd->parsed()) return cmd_evaluate(eval, global);
        if (icp_cmd->parsed()) return cmd_icp(icp, global);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep, global);
        if (info_cmd->parsed()) return cmd_info(info, global);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
