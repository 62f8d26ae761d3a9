// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

#include "matforge/camera.hpp"
#include "matforge/image.hpp"
#include "matforge/mesh.hpp"

namespace matforge {

struct GBuffer {
    ImageF position;  // 3ch world units
    ImageF normal;    // 3ch, unit where mask is set
    ImageF uv;        // 2ch mesh texture coordinates
    ImageF mask;      // 1ch {0,1}
    ImageF depth;     // 1ch view depth
    int width() const { return mask.width(); }
    int height() const { return mask.height(); }
    bool covered(int x, int y) const { return mask.at(x, y) > 0.5f; }
    double coverage() const;
};

struct RasterStats {
    std::size_t triangles = 0;
    std::size_t degenerate = 0;      // zero screen area, skipped
    std::size_t behind_camera = 0;   // a vertex behind the near plane (perspective), skipped
    std::size_t covered_pixels = 0;
};

struct RasterOptions {
    bool cull_backfaces = false;
};

// Z-buffered rasterization with a top-left fill rule on a 1/64 pixel fixed
// point grid. Attributes are interpolated perspective-correctly (affinely for
// orthographic cameras) and normals renormalized.
GBuffer rasterize_gbuffer(const TriMesh& mesh, const Camera& camera, RasterStats* stats = nullptr,
                          const RasterOptions& options = {});

// Subpixel precision of the coverage test.
inline constexpr int kSubpixelBits = 6;

// Coverage kernel shared by the G-buffer and UV rasterizers. Visits every
// pixel center inside the 2D triangle (pixel coordinates, row 0 at top) with
// screen-space barycentrics w.r.t. (v0, v1, v2). Rows are limited to
// [row_begin, row_end). Returns false for zero-area triangles.
using CoverageVisitor = std::function<void(int x, int y, double b0, double b1, double b2)>;
bool rasterize_triangle(const Vec2& v0, const Vec2& v1, const Vec2& v2, int width, int height,
                        int row_begin, int row_end, const CoverageVisitor& visit);

// Signed doubled area in fixed point, as seen by the coverage test.
std::int64_t fixed_point_area2(const Vec2& v0, const Vec2& v1, const Vec2& v2);

}  // namespace matforge
