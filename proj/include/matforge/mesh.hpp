// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "matforge/vec.hpp"

namespace matforge {

// Indexed triangle mesh with per-corner attribute indices, mirroring OBJ's
// separate v/vt/vn index streams.
struct Corner {
    int position = -1;
    int uv = -1;
    int normal = -1;
    friend bool operator==(const Corner&, const Corner&) = default;
};

struct TriMesh {
    std::vector<Vec3> positions;
    std::vector<Vec2> uvs;
    std::vector<Vec3> normals;  // unit length
    std::vector<std::array<Corner, 3>> triangles;

    bool has_uvs() const;
    std::size_t triangle_count() const { return triangles.size(); }

    Vec3 position(int tri, int k) const { return positions[triangles[tri][k].position]; }
    Vec3 normal(int tri, int k) const { return normals[triangles[tri][k].normal]; }
    Vec2 uv(int tri, int k) const { return uvs[triangles[tri][k].uv]; }

    // Throws InvalidArgument on out-of-range indices or missing normals.
    void validate() const;
};

struct BoundingSphere {
    Vec3 center;
    double radius = 0.0;
};

// Center of the axis-aligned box, radius to the farthest vertex.
BoundingSphere bounding_sphere(const TriMesh& mesh);

// Wavefront OBJ subset: v, vt, vn, f (polygons fan-triangulated). Other
// records are ignored. Faces without vn get area-weighted vertex normals.
// Throws Parse (with line number) on malformed records and MissingUVs when any
// face lacks texture coordinates.
TriMesh load_mesh(const std::filesystem::path& path);
TriMesh parse_obj(std::string_view text);
void save_mesh(const std::filesystem::path& path, const TriMesh& mesh);

// Replaces normals with area-weighted per-vertex normals shared by position.
void compute_vertex_normals(TriMesh& mesh);

// Procedural meshes used by the tools and tests.
TriMesh make_quad(double size = 1.0);                       // z = 0 plane, centered, UV [0,1]^2
TriMesh make_uv_sphere(int segments, int rings, double radius = 1.0);  // equirect UVs
TriMesh make_torus(int major_segments, int minor_segments, double major_radius, double minor_radius);
TriMesh make_icosphere(int subdivisions, double radius = 1.0);         // no UVs, no normals

}  // namespace matforge
