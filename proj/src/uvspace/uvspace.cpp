// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/uvspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "matforge/error.hpp"
#include "matforge/image_io.hpp"
#include "matforge/parallel.hpp"

namespace matforge {

double UvAtlas::valid_fraction() const {
    if (valid.empty()) return 0.0;
    std::size_t n = 0;
    for (float v : valid.data()) n += v > 0.5f;
    return static_cast<double>(n) / valid.pixel_count();
}

namespace {

constexpr int kBandRows = 16;

}  // namespace

UvAtlas bake_uv_geometry(const TriMesh& mesh, int resolution) {
    require(resolution >= 1 && resolution <= 65536, ErrorCode::DimensionOverflow, "atlas resolution out of range");
    if (!mesh.has_uvs()) throw Error(ErrorCode::MissingUVs, "mesh has no texture coordinates");
    mesh.validate();
    const int R = resolution;
    UvAtlas atlas;
    atlas.resolution = R;
    atlas.position = ImageF(R, R, 3);
    atlas.normal = ImageF(R, R, 3);
    atlas.valid = ImageF(R, R, 1);
    std::vector<std::uint32_t> writes(static_cast<std::size_t>(R) * R, 0);

    const std::size_t n_tri = mesh.triangle_count();
    std::vector<std::array<Vec2, 3>> screen(n_tri);
    for (std::size_t t = 0; t < n_tri; ++t)
        for (int k = 0; k < 3; ++k) {
            const Vec2 uv = mesh.uv(static_cast<int>(t), k);
            screen[t][k] = {uv.x * R, (1.0 - uv.y) * R};
        }

    const int bands = (R + kBandRows - 1) / kBandRows;
    parallel_for(0, static_cast<std::size_t>(bands), [&](std::size_t band) {
        const int row_begin = static_cast<int>(band) * kBandRows;
        const int row_end = std::min(R, row_begin + kBandRows);
        for (std::size_t t = 0; t < n_tri; ++t) {
            const auto& s = screen[t];
            const double lo = std::min({s[0].y, s[1].y, s[2].y}), hi = std::max({s[0].y, s[1].y, s[2].y});
            if (hi < row_begin - 1 || lo > row_end + 1) continue;
            const int ti = static_cast<int>(t);
            rasterize_triangle(s[0], s[1], s[2], R, R, row_begin, row_end,
                               [&](int x, int y, double b0, double b1, double b2) {
                                   const double w[3] = {b0, b1, b2};
                                   Vec3 p, n;
                                   for (int k = 0; k < 3; ++k) {
                                       p = p + mesh.position(ti, k) * w[k];
                                       n = n + mesh.normal(ti, k) * w[k];
                                   }
                                   const double len = length(n);
                                   if (len > 0.0) n = n / len;
                                   atlas.position.set_rgb(x, y, p);
                                   atlas.normal.set_rgb(x, y, n);
                                   atlas.valid.at(x, y) = 1.0f;
                                   ++writes[static_cast<std::size_t>(y) * R + x];
                               });
        }
    });
    for (std::uint32_t w : writes) atlas.overlap_texels += w > 1;
    return atlas;
}

ViewPartial backproject_view(const UvAtlas& atlas, const GBuffer& gbuf, const Camera& camera,
                             const MaterialMaps& view_materials, const BackprojectOptions& options) {
    require(gbuf.width() == camera.width() && gbuf.height() == camera.height(), ErrorCode::ShapeMismatch,
            "backproject_view: G-buffer does not match the camera resolution");
    require(view_materials.width() == gbuf.width() && view_materials.height() == gbuf.height(),
            ErrorCode::ShapeMismatch, "backproject_view: view materials do not match the G-buffer resolution");
    require(atlas.resolution > 0, ErrorCode::InvalidArgument, "backproject_view: empty atlas");
    const int R = atlas.resolution;
    const int W = gbuf.width(), H = gbuf.height();
    ViewPartial out{{ImageF(R, R, 3), ImageF(R, R, 3)}, ImageF(R, R, 1)};

    parallel_for(0, static_cast<std::size_t>(R), [&](std::size_t row) {
        const int ty = static_cast<int>(row);
        for (int tx = 0; tx < R; ++tx) {
            if (!atlas.is_valid(tx, ty)) continue;
            const Vec3 p = atlas.position.rgb(tx, ty);
            const ScreenPoint sp = camera.project(p);
            if (!(sp.depth > 0.0) || sp.x < 0.0 || sp.y < 0.0 || sp.x >= W || sp.y >= H) continue;
            if (options.min_cos > -1.0 && dot(atlas.normal.rgb(tx, ty), camera.to_eye(p)) < options.min_cos) continue;

            const double fx = sp.x - 0.5, fy = sp.y - 0.5;
            const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
            const double ax = fx - x0, ay = fy - y0;
            const int tap_x[4] = {x0, x0 + 1, x0, x0 + 1};
            const int tap_y[4] = {y0, y0, y0 + 1, y0 + 1};
            const double tap_w[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
            bool covered[4];
            int n_covered = 0;
            double min_depth = std::numeric_limits<double>::infinity(), bilinear = 0.0;
            for (int k = 0; k < 4; ++k) {
                const int x = tap_x[k], y = tap_y[k];
                covered[k] = x >= 0 && y >= 0 && x < W && y < H && gbuf.covered(x, y);
                if (!covered[k]) continue;
                ++n_covered;
                const double d = gbuf.depth.at(x, y);
                min_depth = std::min(min_depth, d);
                bilinear += tap_w[k] * d;
            }
            if (n_covered == 0) continue;
            const double reference = n_covered == 4 ? bilinear : min_depth;
            if (sp.depth > reference + options.depth_bias) continue;

            double wsum = 0.0;
            Vec3 albedo, rm;
            for (int k = 0; k < 4; ++k) {
                if (!covered[k] || tap_w[k] == 0.0) continue;
                wsum += tap_w[k];
                albedo = albedo + view_materials.albedo.rgb(tap_x[k], tap_y[k]) * tap_w[k];
                rm = rm + view_materials.rm.rgb(tap_x[k], tap_y[k]) * tap_w[k];
            }
            if (wsum <= 0.0) continue;
            out.materials.albedo.set_rgb(tx, ty, albedo / wsum);
            out.materials.rm.set_rgb(tx, ty, rm / wsum);
            out.count.at(tx, ty) = 1.0f;
        }
    });
    return out;
}

BlendResult blend_views(std::span<const ViewPartial> partials, BlendMode mode, double eps) {
    require(!partials.empty(), ErrorCode::EmptyInput, "blend_views: no partials");
    require(eps >= 0.0, ErrorCode::InvalidArgument, "blend_views: eps must be non-negative");
    const int R = partials.front().count.width();
    const int Rh = partials.front().count.height();
    for (const ViewPartial& p : partials)
        require(p.count.width() == R && p.count.height() == Rh && p.materials.width() == R &&
                    p.materials.height() == Rh && p.materials.albedo.channels() == 3 && p.materials.rm.channels() == 3,
                ErrorCode::ShapeMismatch, "blend_views: partial resolutions differ");
    BlendResult out{{ImageF(R, Rh, 3), ImageF(R, Rh, 3)}, ImageF(R, Rh, 1)};
    parallel_for(0, static_cast<std::size_t>(Rh), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < R; ++x) {
            double count = 0.0;
            double sum[6] = {0, 0, 0, 0, 0, 0};
            for (const ViewPartial& p : partials) {
                count += p.count.at(x, y);
                for (int c = 0; c < 3; ++c) {
                    sum[c] += p.materials.albedo.at(x, y, c);
                    sum[3 + c] += p.materials.rm.at(x, y, c);
                }
            }
            const double denom = mode == BlendMode::Literal ? count + eps : std::max(count, 1.0);
            for (int c = 0; c < 3; ++c) {
                out.materials.albedo.at(x, y, c) = static_cast<float>(sum[c] / denom);
                out.materials.rm.at(x, y, c) = static_cast<float>(sum[3 + c] / denom);
            }
            out.count.at(x, y) = static_cast<float>(count);
        }
    });
    return out;
}

namespace {

struct Level {
    int w = 0, h = 0, c = 0;
    std::vector<double> value;   // normalized (weighted average) values
    std::vector<double> weight;  // in [0, 1]
};

double bilinear(const Level& L, double fx, double fy, int ch) {
    fx = std::clamp(fx, 0.0, static_cast<double>(L.w - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(L.h - 1));
    const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
    const int x1 = std::min(x0 + 1, L.w - 1), y1 = std::min(y0 + 1, L.h - 1);
    const double ax = fx - x0, ay = fy - y0;
    const auto v = [&](int x, int y) { return L.value[(static_cast<std::size_t>(y) * L.w + x) * L.c + ch]; };
    return (1 - ay) * ((1 - ax) * v(x0, y0) + ax * v(x1, y0)) + ay * ((1 - ax) * v(x0, y1) + ax * v(x1, y1));
}

}  // namespace

ImageF refine_pullpush(const RefineRequest& req) {
    const ImageF& m = req.material;
    require(!m.empty(), ErrorCode::EmptyInput, "refine: empty material map");
    require(req.mask.width() == m.width() && req.mask.height() == m.height() && req.mask.channels() == 1,
            ErrorCode::ShapeMismatch, "refine: mask does not match the material map");
    const int C = m.channels();

    std::vector<Level> pyr(1);
    Level& base = pyr[0];
    base.w = m.width();
    base.h = m.height();
    base.c = C;
    base.value.assign(m.data().begin(), m.data().end());
    base.weight.resize(m.pixel_count());
    bool any = false;
    for (std::size_t i = 0; i < base.weight.size(); ++i) {
        base.weight[i] = req.mask.data()[i] > 0.5f ? 1.0 : 0.0;
        any = any || base.weight[i] > 0.0;
    }
    if (!any) throw Error(ErrorCode::EmptyInput, "refine: mask has no set texels");

    // Pull: weighted 2x2 averages down to a single texel.
    while (pyr.back().w > 1 || pyr.back().h > 1) {
        const Level& fine = pyr.back();
        Level coarse;
        coarse.w = (fine.w + 1) / 2;
        coarse.h = (fine.h + 1) / 2;
        coarse.c = C;
        coarse.value.assign(static_cast<std::size_t>(coarse.w) * coarse.h * C, 0.0);
        coarse.weight.assign(static_cast<std::size_t>(coarse.w) * coarse.h, 0.0);
        for (int y = 0; y < coarse.h; ++y)
            for (int x = 0; x < coarse.w; ++x) {
                double wsum = 0.0;
                std::vector<double> acc(C, 0.0);
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int fx = 2 * x + dx, fy = 2 * y + dy;
                        if (fx >= fine.w || fy >= fine.h) continue;
                        const std::size_t fi = static_cast<std::size_t>(fy) * fine.w + fx;
                        const double w = fine.weight[fi];
                        if (w <= 0.0) continue;
                        wsum += w;
                        for (int c = 0; c < C; ++c) acc[c] += w * fine.value[fi * C + c];
                    }
                const std::size_t ci = static_cast<std::size_t>(y) * coarse.w + x;
                if (wsum > 0.0)
                    for (int c = 0; c < C; ++c) coarse.value[ci * C + c] = acc[c] / wsum;
                coarse.weight[ci] = std::min(1.0, wsum);
            }
        pyr.push_back(std::move(coarse));
    }

    // Push: blend each level with the upsampled coarser level by its weight.
    for (int l = static_cast<int>(pyr.size()) - 2; l >= 0; --l) {
        Level& fine = pyr[l];
        const Level& coarse = pyr[l + 1];
        for (int y = 0; y < fine.h; ++y)
            for (int x = 0; x < fine.w; ++x) {
                const std::size_t fi = static_cast<std::size_t>(y) * fine.w + x;
                const double w = fine.weight[fi];
                if (w >= 1.0) continue;
                const double cx = (x + 0.5) / 2.0 - 0.5, cy = (y + 0.5) / 2.0 - 0.5;
                for (int c = 0; c < C; ++c)
                    fine.value[fi * C + c] = w * fine.value[fi * C + c] + (1.0 - w) * bilinear(coarse, cx, cy, c);
            }
    }

    ImageF out(m.width(), m.height(), C);
    out.set_color_space(m.color_space());
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(pyr[0].value[i]);
    // Masked texels come back bit-exact.
    for (std::size_t i = 0; i < m.pixel_count(); ++i)
        if (pyr[0].weight[i] >= 1.0)
            for (int c = 0; c < C; ++c) dst[i * C + c] = m.data()[i * C + c];
    return out;
}

void write_refine_request(const RefineRequest& req, const std::filesystem::path& stem_path) {
    const std::string stem = stem_path.string();
    write_pfm(stem + ".material.pfm", req.material);
    write_png(stem + ".mask.png", req.mask, 8, true);
    write_pfm(stem + ".position.pfm", req.position);
}

RefineRequest read_refine_request(const std::filesystem::path& stem_path) {
    const std::string stem = stem_path.string();
    RefineRequest req;
    req.material = read_pfm(stem + ".material.pfm");
    req.mask = extract_channels(read_png(stem + ".mask.png", true), 0, 1);
    for (float& v : req.mask.data()) v = v > 0.5f ? 1.0f : 0.0f;
    req.position = read_pfm(stem + ".position.pfm");
    return req;
}

ImageF refine_external(const RefineRequest& req, const std::string& command, const std::filesystem::path& workdir,
                       const std::string& stem) {
    require(!command.empty(), ErrorCode::InvalidArgument, "refine: empty external command");
    std::filesystem::create_directories(workdir);
    const std::filesystem::path stem_path = workdir / stem;
    write_refine_request(req, stem_path);
    const std::filesystem::path result = stem_path.string() + ".refined.pfm";
    std::filesystem::remove(result);
    const std::string cmd = command + " '" + stem_path.string() + "'";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) throw Error(ErrorCode::ExternalTool, "refine command failed (status " + std::to_string(rc) + "): " + cmd);
    if (!std::filesystem::exists(result))
        throw Error(ErrorCode::ExternalTool, "refine command produced no " + result.string());
    ImageF out = read_pfm(result);
    if (out.width() != req.material.width() || out.height() != req.material.height())
        throw Error(ErrorCode::ExternalTool, "refined map has the wrong resolution");
    if (out.channels() != req.material.channels()) out = extract_channels(out, 0, req.material.channels());
    return out;
}

}  // namespace matforge
