#include "elastreg/geometry/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace elastreg {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

std::vector<std::string> split_char(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_finite_double(const std::string& tok, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw ParseError(what + ": bad number '" + tok + "'");
        if (!std::isfinite(v)) throw ParseError(what + ": non-finite value '" + tok + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw ParseError(what + ": bad number '" + tok + "'");
    } catch (const std::out_of_range&) {
        throw ParseError(what + ": number out of range '" + tok + "'");
    }
}

long parse_long(const std::string& tok, const std::string& what) {
    try {
        std::size_t pos = 0;
        long v = std::stol(tok, &pos);
        if (pos != tok.size()) throw ParseError(what + ": bad integer '" + tok + "'");
        return v;
    } catch (const std::exception&) {
        throw ParseError(what + ": bad integer '" + tok + "'");
    }
}

// Pulls non-empty lines out of a text blob.
struct LineReader {
    std::istringstream in;
    explicit LineReader(const std::string& text) : in(text) {}
    bool next(std::string& line) {
        while (std::getline(in, line)) {
            line = strip(line);
            if (!line.empty()) return true;
        }
        return false;
    }
};

VolumeMesh parse_native_mesh(const std::string& text, const std::string& name) {
    LineReader lr(text);
    std::string line;
    if (!lr.next(line) || strip(line) != "tetmesh v1") throw ParseError(name + ": expected 'tetmesh v1' header");
    if (!lr.next(line)) throw ParseError(name + ": missing counts line");
    auto counts = split_ws(line);
    if (counts.size() != 2) throw ParseError(name + ": counts line must be '<n> <num_tets>'");
    long n = parse_long(counts[0], name), nt = parse_long(counts[1], name);
    if (n <= 0 || nt < 0) throw ParseError(name + ": bad counts");

    std::vector<Vec3> nodes(n);
    for (long i = 0; i < n; ++i) {
        if (!lr.next(line)) throw ParseError(name + ": truncated node list");
        auto toks = split_ws(line);
        if (toks.size() != 3) throw ParseError(name + ": node line must have 3 coordinates");
        for (int c = 0; c < 3; ++c) nodes[i][c] = parse_finite_double(toks[c], name);
    }
    std::vector<std::array<int, 4>> tets(nt);
    for (long t = 0; t < nt; ++t) {
        if (!lr.next(line)) throw ParseError(name + ": truncated tet list");
        auto toks = split_ws(line);
        if (toks.size() != 4) throw ParseError(name + ": tet line must have 4 indices");
        for (int c = 0; c < 4; ++c) tets[t][c] = static_cast<int>(parse_long(toks[c], name));
    }
    return VolumeMesh::create(std::move(nodes), std::move(tets));
}

VolumeMesh parse_vtk_mesh(const std::string& text, const std::string& name) {
    LineReader lr(text);
    std::string line;
    if (!lr.next(line) || line.rfind("# vtk DataFile", 0) != 0)
        throw ParseError(name + ": not a VTK legacy file");
    if (!lr.next(line)) throw ParseError(name + ": truncated VTK header");  // title
    if (!lr.next(line)) throw ParseError(name + ": truncated VTK header");
    if (lower(line) != "ascii") throw ParseError(name + ": only ASCII VTK files are supported");
    if (!lr.next(line)) throw ParseError(name + ": missing DATASET line");
    {
        auto toks = split_ws(line);
        if (toks.size() < 2 || toks[0] != "DATASET" || toks[1] != "UNSTRUCTURED_GRID")
            throw ParseError(name + ": DATASET must be UNSTRUCTURED_GRID");
    }

    std::vector<Vec3> nodes;
    std::vector<std::array<int, 4>> tets;
    std::vector<std::vector<int>> cells;

    while (lr.next(line)) {
        auto toks = split_ws(line);
        if (toks[0] == "POINTS") {
            if (toks.size() < 3) throw ParseError(name + ": malformed POINTS line");
            long n = parse_long(toks[1], name);
            nodes.resize(n);
            // Coordinates may wrap lines arbitrarily.
            long needed = 3 * n;
            std::vector<double> vals;
            vals.reserve(needed);
            while (static_cast<long>(vals.size()) < needed) {
                if (!lr.next(line)) throw ParseError(name + ": truncated POINTS section");
                for (const auto& t : split_ws(line)) vals.push_back(parse_finite_double(t, name));
            }
            if (static_cast<long>(vals.size()) != needed) throw ParseError(name + ": extra data in POINTS section");
            for (long i = 0; i < n; ++i) nodes[i] = Vec3(vals[3 * i], vals[3 * i + 1], vals[3 * i + 2]);
        } else if (toks[0] == "CELLS") {
            if (toks.size() < 3) throw ParseError(name + ": malformed CELLS line");
            long m = parse_long(toks[1], name);
            long total = parse_long(toks[2], name);
            std::vector<long> vals;
            vals.reserve(total);
            while (static_cast<long>(vals.size()) < total) {
                if (!lr.next(line)) throw ParseError(name + ": truncated CELLS section");
                for (const auto& t : split_ws(line)) vals.push_back(parse_long(t, name));
            }
            std::size_t pos = 0;
            for (long c = 0; c < m; ++c) {
                if (pos >= vals.size()) throw ParseError(name + ": truncated CELLS section");
                long cnt = vals[pos++];
                if (cnt < 0 || pos + cnt > vals.size()) throw ParseError(name + ": malformed cell entry");
                cells.emplace_back(vals.begin() + pos, vals.begin() + pos + cnt);
                pos += cnt;
            }
        } else if (toks[0] == "CELL_TYPES") {
            long m = parse_long(toks[1], name);
            std::vector<long> types;
            while (static_cast<long>(types.size()) < m) {
                if (!lr.next(line)) throw ParseError(name + ": truncated CELL_TYPES section");
                for (const auto& t : split_ws(line)) types.push_back(parse_long(t, name));
            }
            if (static_cast<long>(cells.size()) != m) throw ParseError(name + ": CELL_TYPES count mismatch");
            for (long c = 0; c < m; ++c) {
                if (types[c] != 10)
                    throw UnsupportedCellType(name + ": cell " + std::to_string(c) + " has type " +
                                              std::to_string(types[c]) + " (only tetrahedra, type 10)");
                if (cells[c].size() != 4) throw ParseError(name + ": tetrahedron cell without 4 indices");
                tets.push_back({cells[c][0], cells[c][1], cells[c][2], cells[c][3]});
            }
        } else if (toks[0] == "POINT_DATA" || toks[0] == "CELL_DATA") {
            break;  // trailing attribute data is ignored
        } else {
            throw ParseError(name + ": unexpected VTK section '" + toks[0] + "'");
        }
    }
    if (nodes.empty()) throw ParseError(name + ": VTK file without POINTS");
    if (tets.empty()) throw ParseError(name + ": VTK file without tetrahedral CELLS");
    return VolumeMesh::create(std::move(nodes), std::move(tets));
}

}  // namespace

VolumeMesh load_volume_mesh(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const std::string name = path.filename().string();
    std::istringstream probe(text);
    std::string first;
    std::getline(probe, first);
    first = strip(first);
    if (first.rfind("tetmesh", 0) == 0) return parse_native_mesh(text, name);
    if (first.rfind("# vtk", 0) == 0) return parse_vtk_mesh(text, name);
    throw ParseError(name + ": unrecognized mesh format (expected 'tetmesh v1' or VTK legacy ASCII)");
}

void save_volume_mesh(const std::filesystem::path& path, const VolumeMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(17);
    if (lower(path.extension().string()) == ".vtk") {
        out << "# vtk DataFile Version 3.0\n";
        out << "tetrahedral mesh\n";
        out << "ASCII\n";
        out << "DATASET UNSTRUCTURED_GRID\n";
        out << "POINTS " << mesh.num_nodes() << " double\n";
        for (const Vec3& p : mesh.nodes) out << p.x() << " " << p.y() << " " << p.z() << "\n";
        out << "CELLS " << mesh.num_tets() << " " << 5 * mesh.num_tets() << "\n";
        for (const auto& t : mesh.tets) out << "4 " << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
        out << "CELL_TYPES " << mesh.num_tets() << "\n";
        for (int i = 0; i < mesh.num_tets(); ++i) out << "10\n";
    } else {
        out << "tetmesh v1\n";
        out << mesh.num_nodes() << " " << mesh.num_tets() << "\n";
        for (const Vec3& p : mesh.nodes) out << p.x() << " " << p.y() << " " << p.z() << "\n";
        for (const auto& t : mesh.tets) out << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
    }
    if (!out) throw InputError("write failed for " + path.string());
}

namespace {

PointCloud parse_xyz(const std::string& text, const std::string& name) {
    PointCloud cloud;
    LineReader lr(text);
    std::string line;
    while (lr.next(line)) {
        if (line[0] == '#') continue;
        auto toks = split_ws(line);
        if (toks.size() < 3) throw ParseError(name + ": xyz line with fewer than 3 values");
        Vec3 p;
        for (int c = 0; c < 3; ++c) p[c] = parse_finite_double(toks[c], name);
        cloud.points.push_back(p);
    }
    return cloud;
}

PointCloud parse_ply(const std::string& text, const std::string& name) {
    LineReader lr(text);
    std::string line;
    if (!lr.next(line) || line != "ply") throw ParseError(name + ": missing ply magic");

    struct Element {
        std::string name;
        long count = 0;
        std::vector<std::string> properties;
    };
    std::vector<Element> elements;
    bool ascii = false;
    while (lr.next(line)) {
        auto toks = split_ws(line);
        if (toks[0] == "format") {
            if (toks.size() < 2 || toks[1] != "ascii") throw ParseError(name + ": only ascii PLY is supported");
            ascii = true;
        } else if (toks[0] == "element") {
            if (toks.size() < 3) throw ParseError(name + ": malformed element line");
            elements.push_back({toks[1], parse_long(toks[2], name), {}});
        } else if (toks[0] == "property") {
            if (elements.empty()) throw ParseError(name + ": property before element");
            if (toks.size() >= 2 && toks[1] == "list")
                elements.back().properties.push_back("__list__");
            else
                elements.back().properties.push_back(toks.back());
        } else if (toks[0] == "end_header") {
            break;
        } else if (toks[0] == "comment" || toks[0] == "obj_info") {
            continue;
        } else {
            throw ParseError(name + ": unexpected header line '" + line + "'");
        }
    }
    if (!ascii) throw ParseError(name + ": missing format line");

    PointCloud cloud;
    for (const auto& elem : elements) {
        if (elem.name == "vertex") {
            int ix = -1, iy = -1, iz = -1;
            for (std::size_t i = 0; i < elem.properties.size(); ++i) {
                if (elem.properties[i] == "x") ix = static_cast<int>(i);
                if (elem.properties[i] == "y") iy = static_cast<int>(i);
                if (elem.properties[i] == "z") iz = static_cast<int>(i);
            }
            if (ix < 0 || iy < 0 || iz < 0) throw ParseError(name + ": vertex element without x y z properties");
            for (long i = 0; i < elem.count; ++i) {
                if (!lr.next(line)) throw ParseError(name + ": truncated vertex data");
                auto toks = split_ws(line);
                if (static_cast<int>(toks.size()) < static_cast<int>(elem.properties.size()))
                    throw ParseError(name + ": short vertex row");
                cloud.points.emplace_back(parse_finite_double(toks[ix], name), parse_finite_double(toks[iy], name),
                                          parse_finite_double(toks[iz], name));
            }
        } else {
            for (long i = 0; i < elem.count; ++i)
                if (!lr.next(line)) throw ParseError(name + ": truncated element data");
        }
    }
    return cloud;
}

PointCloud parse_cloud_csv(const std::string& text, const std::string& name) {
    LineReader lr(text);
    std::string line;
    if (!lr.next(line)) throw EmptyCloud(name + ": empty file");
    auto header = split_char(line, ',');
    int ix = -1, iy = -1, iz = -1, ilabel = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string h = lower(strip(header[i]));
        if (h == "x") ix = static_cast<int>(i);
        if (h == "y") iy = static_cast<int>(i);
        if (h == "z") iz = static_cast<int>(i);
        if (h == "label") ilabel = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0) throw ParseError(name + ": csv header must contain x,y,z columns");
    PointCloud cloud;
    while (lr.next(line)) {
        auto toks = split_char(line, ',');
        if (static_cast<int>(toks.size()) <= std::max({ix, iy, iz})) throw ParseError(name + ": short csv row");
        cloud.points.emplace_back(parse_finite_double(strip(toks[ix]), name),
                                  parse_finite_double(strip(toks[iy]), name),
                                  parse_finite_double(strip(toks[iz]), name));
        if (ilabel >= 0 && ilabel < static_cast<int>(toks.size())) cloud.labels.push_back(strip(toks[ilabel]));
    }
    return cloud;
}

}  // namespace

PointCloud load_point_cloud(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const std::string name = path.filename().string();

    std::istringstream probe(text);
    std::string first;
    while (std::getline(probe, first)) {
        first = strip(first);
        if (!first.empty()) break;
    }
    PointCloud cloud;
    if (first == "ply") {
        cloud = parse_ply(text, name);
    } else if (first.find(',') != std::string::npos) {
        cloud = parse_cloud_csv(text, name);
    } else {
        cloud = parse_xyz(text, name);
    }
    if (cloud.points.empty()) throw EmptyCloud(name + ": no points");
    return cloud;
}

void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(17);
    const std::string ext = lower(path.extension().string());
    if (ext == ".ply") {
        out << "ply\nformat ascii 1.0\n";
        out << "element vertex " << cloud.size() << "\n";
        out << "property double x\nproperty double y\nproperty double z\n";
        out << "end_header\n";
        for (const Vec3& p : cloud.points) out << p.x() << " " << p.y() << " " << p.z() << "\n";
    } else if (ext == ".csv") {
        out << "x,y,z\n";
        for (const Vec3& p : cloud.points) out << p.x() << "," << p.y() << "," << p.z() << "\n";
    } else {
        for (const Vec3& p : cloud.points) out << p.x() << " " << p.y() << " " << p.z() << "\n";
    }
    if (!out) throw InputError("write failed for " + path.string());
}

RigidTransform load_rigid_transform(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    auto toks = split_ws(text);
    if (toks.size() != 16) throw ParseError(path.filename().string() + ": transform file must hold 16 numbers");
    Eigen::Matrix4d M;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) M(r, c) = parse_finite_double(toks[4 * r + c], path.filename().string());
    RigidTransform T;
    T.rotation = M.block<3, 3>(0, 0);
    T.translation = M.block<3, 1>(0, 3);
    T.validate();
    return T;
}

void save_rigid_transform(const std::filesystem::path& path, const RigidTransform& T) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(17);
    Eigen::Matrix4d M = Eigen::Matrix4d::Identity();
    M.block<3, 3>(0, 0) = T.rotation;
    M.block<3, 1>(0, 3) = T.translation;
    for (int r = 0; r < 4; ++r) out << M(r, 0) << " " << M(r, 1) << " " << M(r, 2) << " " << M(r, 3) << "\n";
}

std::vector<int> load_node_set(const std::filesystem::path& path, int num_nodes) {
    const std::string text = read_file(path);
    const std::string name = path.filename().string();
    LineReader lr(text);
    std::string line;
    std::vector<int> nodes;
    bool first = true;
    while (lr.next(line)) {
        std::string tok = strip(split_char(line, ',')[0]);
        if (first && !tok.empty() && !std::isdigit(static_cast<unsigned char>(tok[0])) && tok[0] != '-') {
            first = false;
            continue;  // header
        }
        first = false;
        long v = parse_long(tok, name);
        if (v < 0 || v >= num_nodes)
            throw InputError(name + ": node index " + std::to_string(v) + " outside [0," +
                             std::to_string(num_nodes) + ")");
        nodes.push_back(static_cast<int>(v));
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

void save_node_set(const std::filesystem::path& path, const std::vector<int>& nodes) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "node\n";
    for (int v : nodes) out << v << "\n";
}

void save_nodal_field_csv(const std::filesystem::path& path, const VecX& field, const std::string& prefix) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out.precision(17);
    out << "node," << prefix << "x," << prefix << "y," << prefix << "z\n";
    for (Eigen::Index i = 0; 3 * i < field.size(); ++i)
        out << i << "," << field[3 * i] << "," << field[3 * i + 1] << "," << field[3 * i + 2] << "\n";
}

VecX load_nodal_field_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const std::string name = path.filename().string();
    LineReader lr(text);
    std::string line;
    if (!lr.next(line)) throw ParseError(name + ": empty field file");
    std::vector<double> vals;
    while (lr.next(line)) {
        auto toks = split_char(line, ',');
        if (toks.size() != 4) throw ParseError(name + ": field row must be node,x,y,z");
        for (int c = 1; c < 4; ++c) vals.push_back(parse_finite_double(strip(toks[c]), name));
    }
    VecX out(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) out[i] = vals[i];
    return out;
}

}  // namespace elastreg
