#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include "elastreg/geometry/mesh.hpp"

namespace elastreg {

// Matched target pairs: X in the undeformed data, Y in the deformed data.
struct TargetSet {
    std::vector<Vec3> undeformed;  // X_i
    std::vector<Vec3> deformed;    // Y_i
    std::vector<std::string> labels;

    int size() const { return static_cast<int>(undeformed.size()); }
};

// CSV with header label,x_pre,y_pre,z_pre,x_post,y_post,z_post.
TargetSet load_targets_csv(const std::filesystem::path& path);
void save_targets_csv(const std::filesystem::path& path, const TargetSet& targets);

// Per-target Euclidean errors with summary statistics (population std).
struct EvalReport {
    std::vector<double> errors;  // mm
    double mean = 0.0;
    double stddev = 0.0;
    double max = 0.0;
    double median = 0.0;
    int count = 0;
    std::map<std::string, std::string> metadata;  // case id, method, visibility, ...

    static EvalReport from_errors(std::vector<double> errors);
    // "mean ± std (max)" with two decimals, e.g. "2.00 ± 0.00 (2.00)".
    std::string format_line() const;
};

void save_report_json(const std::filesystem::path& path, const EvalReport& report);
EvalReport load_report_json(const std::filesystem::path& path);

enum class InterpolationMode { InverseDistance4, Nearest1 };

// Displacement at an arbitrary query point, propagated from the mesh nodes.
// Default: inverse-distance weighting over the 4 nearest nodes; a query
// within 1e-9 of a node returns that node's displacement exactly.
Vec3 interpolate_displacement(const VolumeMesh& mesh, const DisplacementField& u, const Vec3& query,
                              InterpolationMode mode = InterpolationMode::InverseDistance4);

// error_i = |Y_i - W(X_i)|.
EvalReport compute_errors(const TargetSet& targets, const std::function<Vec3(const Vec3&)>& W);

// Aggregation across runs, Table-style: mean/std/median of the per-run mean
// errors, one row per group key.
struct RunGroupRow {
    std::string group;
    int runs = 0;
    double mean_of_means = 0.0;
    double std_of_means = 0.0;
    double median_of_means = 0.0;
};

std::vector<RunGroupRow> summarize_runs(const std::vector<EvalReport>& reports,
                                        const std::function<std::string(const EvalReport&)>& group_key);

void save_summary_csv(const std::filesystem::path& path, const std::vector<RunGroupRow>& rows);

}  // namespace elastreg
