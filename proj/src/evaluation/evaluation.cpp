#include "elastreg/evaluation/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace elastreg {

using nlohmann::json;

TargetSet load_targets_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    TargetSet ts;
    std::string line;
    if (!std::getline(in, line)) throw EmptyTargets(path.filename().string() + ": empty file");
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (cols.size() != 7) throw ParseError(path.filename().string() + ": row must have 7 columns");
        auto num = [&](const std::string& s) {
            try {
                double v = std::stod(s);
                if (!std::isfinite(v)) throw ParseError(path.filename().string() + ": non-finite target");
                return v;
            } catch (const std::logic_error&) {
                throw ParseError(path.filename().string() + ": bad number '" + s + "'");
            }
        };
        ts.labels.push_back(cols[0]);
        ts.undeformed.emplace_back(num(cols[1]), num(cols[2]), num(cols[3]));
        ts.deformed.emplace_back(num(cols[4]), num(cols[5]), num(cols[6]));
    }
    if (ts.size() == 0) throw EmptyTargets(path.filename().string() + ": no targets");
    return ts;
}

void save_targets_csv(const std::filesystem::path& path, const TargetSet& targets) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(17);
    out << "label,x_pre,y_pre,z_pre,x_post,y_post,z_post\n";
    for (int i = 0; i < targets.size(); ++i) {
        const std::string label = i < static_cast<int>(targets.labels.size()) ? targets.labels[i]
                                                                              : std::to_string(i);
        const Vec3& a = targets.undeformed[i];
        const Vec3& b = targets.deformed[i];
        out << label << "," << a.x() << "," << a.y() << "," << a.z() << "," << b.x() << "," << b.y() << ","
            << b.z() << "\n";
    }
}

EvalReport EvalReport::from_errors(std::vector<double> errors) {
    EvalReport r;
    r.errors = std::move(errors);
    r.count = static_cast<int>(r.errors.size());
    if (r.count == 0) throw EmptyTargets("report over zero targets");
    double sum = 0.0, sq = 0.0;
    r.max = 0.0;
    for (double e : r.errors) {
        sum += e;
        sq += e * e;
        r.max = std::max(r.max, e);
    }
    r.mean = sum / r.count;
    r.stddev = std::sqrt(std::max(0.0, sq / r.count - r.mean * r.mean));
    std::vector<double> sorted = r.errors;
    std::sort(sorted.begin(), sorted.end());
    r.median = r.count % 2 ? sorted[r.count / 2] : 0.5 * (sorted[r.count / 2 - 1] + sorted[r.count / 2]);
    return r;
}

std::string EvalReport::format_line() const {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.2f ± %.2f (%.2f)", mean, stddev, max);
    return buf;
}

void save_report_json(const std::filesystem::path& path, const EvalReport& report) {
    json j;
    j["errors"] = report.errors;
    j["mean"] = report.mean;
    j["std"] = report.stddev;
    j["max"] = report.max;
    j["median"] = report.median;
    j["count"] = report.count;
    j["metadata"] = report.metadata;
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

EvalReport load_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path.filename().string() + ": " + e.what());
    }
    EvalReport r = EvalReport::from_errors(j.at("errors").get<std::vector<double>>());
    if (j.contains("metadata")) r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    return r;
}

Vec3 interpolate_displacement(const VolumeMesh& mesh, const DisplacementField& u, const Vec3& query,
                              InterpolationMode mode) {
    if (u.size() != 3 * mesh.num_nodes()) throw DimensionMismatch("displacement field length != 3n");
    const int k = mode == InterpolationMode::Nearest1 ? 1 : 4;

    // Partial selection of the k nearest nodes.
    std::vector<std::pair<double, int>> dist;
    dist.reserve(mesh.num_nodes());
    for (int i = 0; i < mesh.num_nodes(); ++i) dist.emplace_back((mesh.nodes[i] - query).norm(), i);
    std::partial_sort(dist.begin(), dist.begin() + std::min<std::size_t>(k, dist.size()), dist.end());

    if (dist.front().first < 1e-9) return u.segment<3>(3 * dist.front().second);

    Vec3 acc = Vec3::Zero();
    double wsum = 0.0;
    for (int i = 0; i < std::min<int>(k, static_cast<int>(dist.size())); ++i) {
        const double w = 1.0 / dist[i].first;
        acc += w * u.segment<3>(3 * dist[i].second);
        wsum += w;
    }
    return acc / wsum;
}

EvalReport compute_errors(const TargetSet& targets, const std::function<Vec3(const Vec3&)>& W) {
    if (targets.size() == 0) throw EmptyTargets("compute_errors: no targets");
    std::vector<double> errors;
    errors.reserve(targets.size());
    for (int i = 0; i < targets.size(); ++i)
        errors.push_back((targets.deformed[i] - W(targets.undeformed[i])).norm());
    return EvalReport::from_errors(std::move(errors));
}

std::vector<RunGroupRow> summarize_runs(const std::vector<EvalReport>& reports,
                                        const std::function<std::string(const EvalReport&)>& group_key) {
    if (reports.empty()) throw EmptyTargets("summarize_runs: no reports");
    std::map<std::string, std::vector<double>> means;
    for (const auto& r : reports) means[group_key(r)].push_back(r.mean);

    std::vector<RunGroupRow> rows;
    for (auto& [key, vals] : means) {
        RunGroupRow row;
        row.group = key;
        row.runs = static_cast<int>(vals.size());
        double sum = 0.0, sq = 0.0;
        for (double v : vals) {
            sum += v;
            sq += v * v;
        }
        row.mean_of_means = sum / vals.size();
        row.std_of_means = std::sqrt(std::max(0.0, sq / vals.size() - row.mean_of_means * row.mean_of_means));
        std::sort(vals.begin(), vals.end());
        row.median_of_means = vals.size() % 2 ? vals[vals.size() / 2]
                                              : 0.5 * (vals[vals.size() / 2 - 1] + vals[vals.size() / 2]);
        rows.push_back(std::move(row));
    }
    return rows;
}

void save_summary_csv(const std::filesystem::path& path, const std::vector<RunGroupRow>& rows) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "group,runs,mean_of_means,std_of_means,median_of_means\n";
    out.precision(17);
    for (const auto& r : rows)
        out << r.group << "," << r.runs << "," << r.mean_of_means << "," << r.std_of_means << ","
            << r.median_of_means << "\n";
}

}  // namespace elastreg
