// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/mesh.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "matforge/error.hpp"

namespace matforge {

bool TriMesh::has_uvs() const {
    if (uvs.empty()) return false;
    for (const auto& tri : triangles)
        for (const auto& c : tri)
            if (c.uv < 0) return false;
    return true;
}

void TriMesh::validate() const {
    const auto in_range = [](int idx, std::size_t n) { return idx >= 0 && static_cast<std::size_t>(idx) < n; };
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        for (const auto& c : triangles[t]) {
            require(in_range(c.position, positions.size()), ErrorCode::InvalidArgument,
                    "triangle " + std::to_string(t) + ": position index out of range");
            require(in_range(c.normal, normals.size()), ErrorCode::InvalidArgument,
                    "triangle " + std::to_string(t) + ": normal index out of range");
            require(c.uv < 0 || in_range(c.uv, uvs.size()), ErrorCode::InvalidArgument,
                    "triangle " + std::to_string(t) + ": uv index out of range");
        }
    }
}

BoundingSphere bounding_sphere(const TriMesh& mesh) {
    if (mesh.positions.empty()) return {};
    Vec3 lo = mesh.positions.front(), hi = lo;
    for (const auto& p : mesh.positions) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    BoundingSphere s{(lo + hi) * 0.5, 0.0};
    for (const auto& p : mesh.positions) s.radius = std::max(s.radius, length(p - s.center));
    return s;
}

void compute_vertex_normals(TriMesh& mesh) {
    std::vector<Vec3> accum(mesh.positions.size());
    for (const auto& tri : mesh.triangles) {
        const Vec3& a = mesh.positions[tri[0].position];
        const Vec3& b = mesh.positions[tri[1].position];
        const Vec3& c = mesh.positions[tri[2].position];
        // Unnormalized cross product: length is twice the area.
        const Vec3 face = cross(b - a, c - a);
        for (const auto& corner : tri) accum[corner.position] += face;
    }
    mesh.normals.resize(accum.size());
    for (std::size_t i = 0; i < accum.size(); ++i) {
        const Vec3 n = normalize(accum[i]);
        mesh.normals[i] = length(n) > 0.0 ? n : Vec3{0, 0, 1};
    }
    for (auto& tri : mesh.triangles)
        for (auto& corner : tri) corner.normal = corner.position;
}

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::Parse, "OBJ line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view tok, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) parse_fail(line, "bad number '" + std::string(tok) + "'");
    return v;
}

int resolve_index(std::string_view tok, std::size_t count, std::size_t line) {
    long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v == 0)
        parse_fail(line, "bad index '" + std::string(tok) + "'");
    const long idx = v > 0 ? v - 1 : static_cast<long>(count) + v;
    if (idx < 0 || static_cast<std::size_t>(idx) >= count) parse_fail(line, "index " + std::to_string(v) + " out of range");
    return static_cast<int>(idx);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

TriMesh parse_obj(std::string_view text) {
    TriMesh mesh;
    bool missing_normals = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = split_ws(line);
        if (tok.empty()) {
            if (eol == text.size()) break;
            continue;
        }

        if (tok[0] == "v") {
            if (tok.size() < 4) parse_fail(line_no, "vertex needs 3 coordinates");
            mesh.positions.push_back({parse_double(tok[1], line_no), parse_double(tok[2], line_no), parse_double(tok[3], line_no)});
        } else if (tok[0] == "vt") {
            if (tok.size() < 3) parse_fail(line_no, "texture coordinate needs 2 components");
            mesh.uvs.push_back({parse_double(tok[1], line_no), parse_double(tok[2], line_no)});
        } else if (tok[0] == "vn") {
            if (tok.size() < 4) parse_fail(line_no, "normal needs 3 components");
            Vec3 n{parse_double(tok[1], line_no), parse_double(tok[2], line_no), parse_double(tok[3], line_no)};
            const double len = length(n);
            if (!(len > 0.0)) parse_fail(line_no, "zero-length normal");
            if (std::abs(len - 1.0) > 1e-12) n = n / len;
            mesh.normals.push_back(n);
        } else if (tok[0] == "f") {
            if (tok.size() < 4) parse_fail(line_no, "face needs at least 3 vertices");
            std::vector<Corner> poly;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                std::string_view spec = tok[k];
                Corner c;
                const auto s1 = spec.find('/');
                c.position = resolve_index(spec.substr(0, s1), mesh.positions.size(), line_no);
                if (s1 != std::string_view::npos) {
                    const auto rest = spec.substr(s1 + 1);
                    const auto s2 = rest.find('/');
                    const auto vt = rest.substr(0, s2);
                    if (!vt.empty()) c.uv = resolve_index(vt, mesh.uvs.size(), line_no);
                    if (s2 != std::string_view::npos) {
                        const auto vn = rest.substr(s2 + 1);
                        if (!vn.empty()) c.normal = resolve_index(vn, mesh.normals.size(), line_no);
                    }
                }
                if (c.normal < 0) missing_normals = true;
                poly.push_back(c);
            }
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
        }
        if (eol == text.size()) break;
    }

    if (mesh.triangles.empty()) throw Error(ErrorCode::Parse, "OBJ contains no faces");

    if (missing_normals) {
        // Area-weighted vertex normals for corners that did not name one.
        TriMesh scratch;
        scratch.positions = mesh.positions;
        scratch.triangles = mesh.triangles;
        compute_vertex_normals(scratch);
        const int base = static_cast<int>(mesh.normals.size());
        mesh.normals.insert(mesh.normals.end(), scratch.normals.begin(), scratch.normals.end());
        for (auto& tri : mesh.triangles)
            for (auto& c : tri)
                if (c.normal < 0) c.normal = base + c.position;
    }
    return mesh;
}

TriMesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    TriMesh mesh;
    try {
        mesh = parse_obj(ss.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
    if (!mesh.has_uvs())
        throw Error(ErrorCode::MissingUVs, path.string() + ": mesh has faces without texture coordinates");
    return mesh;
}

void save_mesh(const std::filesystem::path& path, const TriMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    char buf[128];
    for (const auto& p : mesh.positions) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.x, p.y, p.z);
        out << buf;
    }
    for (const auto& t : mesh.uvs) {
        std::snprintf(buf, sizeof buf, "vt %.17g %.17g\n", t.x, t.y);
        out << buf;
    }
    for (const auto& n : mesh.normals) {
        std::snprintf(buf, sizeof buf, "vn %.17g %.17g %.17g\n", n.x, n.y, n.z);
        out << buf;
    }
    for (const auto& tri : mesh.triangles) {
        out << 'f';
        for (const auto& c : tri) {
            out << ' ' << c.position + 1 << '/';
            if (c.uv >= 0) out << c.uv + 1;
            out << '/' << c.normal + 1;
        }
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

TriMesh make_quad(double size) {
    const double h = size * 0.5;
    TriMesh m;
    m.positions = {{-h, -h, 0}, {h, -h, 0}, {h, h, 0}, {-h, h, 0}};
    m.uvs = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    m.normals = {{0, 0, 1}};
    auto c = [](int i) { return Corner{i, i, 0}; };
    m.triangles = {{c(0), c(1), c(2)}, {c(0), c(2), c(3)}};
    return m;
}

TriMesh make_uv_sphere(int segments, int rings, double radius) {
    require(segments >= 3 && rings >= 2, ErrorCode::InvalidArgument, "sphere needs >=3 segments and >=2 rings");
    TriMesh m;
    const int cols = segments + 1;
    for (int i = 0; i <= rings; ++i) {
        const double theta = kPi * i / rings;
        for (int j = 0; j <= segments; ++j) {
            const double phi = 2.0 * kPi * j / segments;
            const Vec3 n{std::sin(theta) * std::sin(phi), std::cos(theta), std::sin(theta) * std::cos(phi)};
            m.positions.push_back(n * radius);
            m.normals.push_back(n);
            m.uvs.push_back({static_cast<double>(j) / segments, 1.0 - static_cast<double>(i) / rings});
        }
    }
    auto c = [](int i) { return Corner{i, i, i}; };
    for (int i = 0; i < rings; ++i) {
        for (int j = 0; j < segments; ++j) {
            const int a = i * cols + j, b = a + 1, d = a + cols, e = d + 1;
            // Counter-clockwise seen from outside.
            if (i != 0) m.triangles.push_back({c(a), c(d), c(b)});
            if (i != rings - 1) m.triangles.push_back({c(b), c(d), c(e)});
        }
    }
    return m;
}

TriMesh make_torus(int major_segments, int minor_segments, double major_radius, double minor_radius) {
    require(major_segments >= 3 && minor_segments >= 3, ErrorCode::InvalidArgument, "torus needs >=3 segments");
    TriMesh m;
    const int cols = major_segments + 1;
    for (int i = 0; i <= minor_segments; ++i) {
        const double theta = 2.0 * kPi * i / minor_segments;
        for (int j = 0; j <= major_segments; ++j) {
            const double phi = 2.0 * kPi * j / major_segments;
            const Vec3 n{std::cos(theta) * std::cos(phi), std::sin(theta), std::cos(theta) * std::sin(phi)};
            const Vec3 ring{std::cos(phi) * major_radius, 0.0, std::sin(phi) * major_radius};
            m.positions.push_back(ring + n * minor_radius);
            m.normals.push_back(n);
            m.uvs.push_back({static_cast<double>(j) / major_segments, static_cast<double>(i) / minor_segments});
        }
    }
    auto c = [](int i) { return Corner{i, i, i}; };
    for (int i = 0; i < minor_segments; ++i) {
        for (int j = 0; j < major_segments; ++j) {
            const int a = i * cols + j, b = a + 1, d = a + cols, e = d + 1;
            m.triangles.push_back({c(a), c(d), c(b)});
            m.triangles.push_back({c(b), c(d), c(e)});
        }
    }
    return m;
}

TriMesh make_icosphere(int subdivisions, double radius) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                               {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts) v = normalize(v);
    std::vector<std::array<int, 3>> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
            verts.push_back(normalize((verts[a] + verts[b]) * 0.5));
            const int idx = static_cast<int>(verts.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    TriMesh m;
    for (const auto& v : verts) m.positions.push_back(v * radius);
    for (const auto& f : faces) m.triangles.push_back({Corner{f[0]}, Corner{f[1]}, Corner{f[2]}});
    return m;
}

}  // namespace matforge
