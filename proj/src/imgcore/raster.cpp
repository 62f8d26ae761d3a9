// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "matforge/error.hpp"
#include "matforge/parallel.hpp"

namespace matforge {

namespace {

struct FixedPoint {
    std::int64_t x, y;
};

FixedPoint to_fixed(const Vec2& v) {
    constexpr double scale = 1 << kSubpixelBits;
    return {std::llround(v.x * scale), std::llround(v.y * scale)};
}

std::int64_t edge(const FixedPoint& a, const FixedPoint& b, const FixedPoint& p) {
    return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

double edge(const Vec2& a, const Vec2& b, const Vec2& p) {
    return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

// With positive edge(v0, v1, v2) and y pointing down, a top edge runs in +x
// and a left edge runs in -y.
bool is_top_left(const FixedPoint& a, const FixedPoint& b) {
    const std::int64_t dx = b.x - a.x, dy = b.y - a.y;
    return (dy == 0 && dx > 0) || dy < 0;
}

constexpr int kBandRows = 16;

}  // namespace

std::int64_t fixed_point_area2(const Vec2& v0, const Vec2& v1, const Vec2& v2) {
    return edge(to_fixed(v0), to_fixed(v1), to_fixed(v2));
}

bool rasterize_triangle(const Vec2& v0, const Vec2& v1, const Vec2& v2, int width, int height, int row_begin,
                        int row_end, const CoverageVisitor& visit) {
    FixedPoint p[3] = {to_fixed(v0), to_fixed(v1), to_fixed(v2)};
    const std::int64_t area = edge(p[0], p[1], p[2]);
    if (area == 0) return false;
    // Canonical winding for the coverage test; barycentrics stay in input order.
    int order[3] = {0, 1, 2};
    if (area < 0) std::swap(order[1], order[2]);
    const FixedPoint a = p[order[0]], b = p[order[1]], c = p[order[2]];

    const std::int64_t bias0 = is_top_left(b, c) ? 0 : -1;
    const std::int64_t bias1 = is_top_left(c, a) ? 0 : -1;
    const std::int64_t bias2 = is_top_left(a, b) ? 0 : -1;

    constexpr std::int64_t one = 1 << kSubpixelBits;
    constexpr std::int64_t half = one / 2;
    const std::int64_t min_x = std::min({a.x, b.x, c.x}), max_x = std::max({a.x, b.x, c.x});
    const std::int64_t min_y = std::min({a.y, b.y, c.y}), max_y = std::max({a.y, b.y, c.y});
    // Pixel i has center i*one + half; first/last pixel whose center can be inside.
    const auto first_px = [&](std::int64_t lo) { return static_cast<int>((lo - half + one - 1) >> kSubpixelBits); };
    const auto last_px = [&](std::int64_t hi) { return static_cast<int>((hi - half) >> kSubpixelBits); };
    const int x0 = std::max(0, first_px(min_x));
    const int x1 = std::min(width - 1, last_px(max_x));
    const int y0 = std::max(row_begin, first_px(min_y));
    const int y1 = std::min({row_end - 1, height - 1, last_px(max_y)});

    const Vec2 fv[3] = {v0, v1, v2};
    const double farea = edge(fv[0], fv[1], fv[2]);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const FixedPoint s{x * one + half, y * one + half};
            if (edge(b, c, s) + bias0 < 0 || edge(c, a, s) + bias1 < 0 || edge(a, b, s) + bias2 < 0) continue;
            const Vec2 ps{x + 0.5, y + 0.5};
            double w0 = edge(fv[1], fv[2], ps) / farea;
            double w1 = edge(fv[2], fv[0], ps) / farea;
            double w2 = 1.0 - w0 - w1;
            visit(x, y, w0, w1, w2);
        }
    }
    return true;
}

double GBuffer::coverage() const {
    if (mask.empty()) return 0.0;
    std::size_t n = 0;
    for (float v : mask.data()) n += v > 0.5f;
    return static_cast<double>(n) / mask.pixel_count();
}

GBuffer rasterize_gbuffer(const TriMesh& mesh, const Camera& camera, RasterStats* stats,
                          const RasterOptions& options) {
    require(!mesh.triangles.empty(), ErrorCode::InvalidArgument, "rasterize_gbuffer: empty mesh");
    mesh.validate();
    const int W = camera.width(), H = camera.height();
    const bool persp = camera.mode() == Projection::Perspective;

    struct Setup {
        Vec2 screen[3];
        double depth[3];
        int row_lo, row_hi;
        bool active;
    };
    std::vector<Setup> setup(mesh.triangles.size());
    RasterStats local;
    local.triangles = mesh.triangles.size();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        Setup& s = setup[t];
        s.active = false;
        bool behind = false;
        for (int k = 0; k < 3; ++k) {
            const ScreenPoint sp = camera.project(mesh.position(static_cast<int>(t), k));
            s.screen[k] = {sp.x, sp.y};
            s.depth[k] = sp.depth;
            if (sp.depth <= 1e-9) behind = true;
        }
        if (behind) {
            ++local.behind_camera;
            continue;
        }
        if (fixed_point_area2(s.screen[0], s.screen[1], s.screen[2]) == 0) {
            ++local.degenerate;
            continue;
        }
        if (options.cull_backfaces) {
            const Vec3 a = mesh.position(static_cast<int>(t), 0);
            const Vec3 fn = cross(mesh.position(static_cast<int>(t), 1) - a, mesh.position(static_cast<int>(t), 2) - a);
            if (dot(fn, camera.to_eye(a)) <= 0.0) continue;
        }
        const double lo = std::min({s.screen[0].y, s.screen[1].y, s.screen[2].y});
        const double hi = std::max({s.screen[0].y, s.screen[1].y, s.screen[2].y});
        s.row_lo = static_cast<int>(std::floor(lo)) - 1;
        s.row_hi = static_cast<int>(std::ceil(hi)) + 1;
        s.active = true;
    }

    GBuffer g;
    g.position = ImageF(W, H, 3);
    g.normal = ImageF(W, H, 3);
    g.uv = ImageF(W, H, 2);
    g.mask = ImageF(W, H, 1);
    g.depth = ImageF(W, H, 1);
    std::vector<double> zbuf(static_cast<std::size_t>(W) * H, std::numeric_limits<double>::infinity());
    const bool has_uv = mesh.has_uvs();

    const int bands = (H + kBandRows - 1) / kBandRows;
    parallel_for(0, bands, [&](std::size_t band) {
        const int row_begin = static_cast<int>(band) * kBandRows;
        const int row_end = std::min(H, row_begin + kBandRows);
        for (std::size_t t = 0; t < setup.size(); ++t) {
            const Setup& s = setup[t];
            if (!s.active || s.row_hi < row_begin || s.row_lo >= row_end) continue;
            const int ti = static_cast<int>(t);
            rasterize_triangle(s.screen[0], s.screen[1], s.screen[2], W, H, row_begin, row_end,
                               [&](int x, int y, double b0, double b1, double b2) {
                                   double w[3] = {b0, b1, b2};
                                   double depth;
                                   if (persp) {
                                       for (int k = 0; k < 3; ++k) w[k] /= s.depth[k];
                                       const double inv = w[0] + w[1] + w[2];
                                       depth = 1.0 / inv;
                                       for (double& wk : w) wk *= depth;
                                   } else {
                                       depth = w[0] * s.depth[0] + w[1] * s.depth[1] + w[2] * s.depth[2];
                                   }
                                   double& z = zbuf[static_cast<std::size_t>(y) * W + x];
                                   if (!(depth < z)) return;
                                   z = depth;
                                   Vec3 p, n;
                                   Vec2 uv;
                                   for (int k = 0; k < 3; ++k) {
                                       p += mesh.position(ti, k) * w[k];
                                       n += mesh.normal(ti, k) * w[k];
                                       if (has_uv) uv = uv + mesh.uv(ti, k) * w[k];
                                   }
                                   if (length(n) < 1e-12) {
                                       const Vec3 a = mesh.position(ti, 0);
                                       n = cross(mesh.position(ti, 1) - a, mesh.position(ti, 2) - a);
                                   }
                                   n = normalize(n);
                                   g.position.set_rgb(x, y, p);
                                   g.normal.set_rgb(x, y, n);
                                   g.uv.at(x, y, 0) = static_cast<float>(uv.x);
                                   g.uv.at(x, y, 1) = static_cast<float>(uv.y);
                                   g.depth.at(x, y) = static_cast<float>(depth);
                                   g.mask.at(x, y) = 1.0f;
                               });
        }
    });

    if (stats) {
        local.covered_pixels = 0;
        for (float v : g.mask.data()) local.covered_pixels += v > 0.5f;
        *stats = local;
    }
    return g;
}

}  // namespace matforge
