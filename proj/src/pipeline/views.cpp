// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "matforge/error.hpp"
#include "matforge/parallel.hpp"
#include "matforge/pipeline.hpp"

namespace matforge {

std::vector<Camera> six_view_cameras(const TriMesh& mesh, Projection mode, int resolution) {
    require(!mesh.positions.empty(), ErrorCode::InvalidArgument, "six_view_cameras: empty mesh");
    const BoundingSphere bs = bounding_sphere(mesh);
    require(bs.radius > 1e-12, ErrorCode::InvalidArgument, "six_view_cameras: degenerate bounds");
    const double r = bs.radius;
    const double distance = 3.0 * r;
    const Vec3 axes[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    std::vector<Camera> cams;
    for (int i = 0; i < 6; ++i) {
        CameraDesc d;
        d.mode = mode;
        d.position = bs.center + axes[i] * distance;
        d.target = bs.center;
        d.up = (i == 2 || i == 3) ? Vec3{0, 0, 1} : Vec3{0, 1, 0};
        d.extent = 1.05 * r;
        // Angular radius of the sphere, widened by the same 5%.
        const double half = std::asin(r / distance);
        d.fov_y_degrees = 2.0 * std::atan(1.05 * std::tan(half)) * 180.0 / kPi;
        d.width = d.height = resolution;
        cams.emplace_back(d);
    }
    return cams;
}

Vec3 sample_texture(const ImageF& tex, const Vec2& uv) {
    const double px = uv.x * tex.width(), py = (1.0 - uv.y) * tex.height();
    Vec3 out;
    for (int c = 0; c < std::min(3, tex.channels()); ++c) out[c] = tex.sample_bilinear(px, py, c);
    return out;
}

MaterialMaps view_materials_from_uv(const UvMaterials& tex, const GBuffer& gbuf) {
    const int W = gbuf.width(), H = gbuf.height();
    MaterialMaps out{ImageF(W, H, 3), ImageF(W, H, 3)};
    parallel_for(0, static_cast<std::size_t>(H), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < W; ++x) {
            if (!gbuf.covered(x, y)) continue;
            const Vec2 uv{gbuf.uv.at(x, y, 0), gbuf.uv.at(x, y, 1)};
            out.albedo.set_rgb(x, y, sample_texture(tex.albedo, uv));
            out.rm.set_rgb(x, y, sample_texture(tex.rm, uv));
        }
    });
    return out;
}

OracleDecomposer::OracleDecomposer(UvMaterials truth) : truth_(std::move(truth)) {
    require(truth_.albedo.channels() >= 3 && truth_.rm.channels() >= 2, ErrorCode::InvalidArgument,
            "oracle decomposer needs 3-channel albedo and RM textures");
}

std::vector<MaterialMaps> OracleDecomposer::decompose(std::span<const ViewInput> views) {
    std::vector<MaterialMaps> out;
    for (const ViewInput& v : views) out.push_back(view_materials_from_uv(truth_, *v.gbuf));
    return out;
}

std::vector<MaterialMaps> ConstantDecomposer::decompose(std::span<const ViewInput> views) {
    std::vector<MaterialMaps> out;
    for (const ViewInput& v : views) {
        const GBuffer& g = *v.gbuf;
        MaterialMaps m{ImageF(g.width(), g.height(), 3), ImageF(g.width(), g.height(), 3)};
        for (int y = 0; y < g.height(); ++y)
            for (int x = 0; x < g.width(); ++x)
                if (g.covered(x, y)) m.set(x, y, value_);
        out.push_back(std::move(m));
    }
    return out;
}

Appearance textured_appearance(UvMaterials tex) {
    return [tex = std::move(tex)](const GBuffer& gbuf, const Camera&) {
        return std::vector<ImageF>{view_materials_from_uv(tex, gbuf).albedo};
    };
}

Appearance pbr_appearance(UvMaterials tex, std::vector<const PrefilteredEnv*> lights) {
    require(!lights.empty(), ErrorCode::EmptyInput, "pbr_appearance: no lights");
    return [tex = std::move(tex), lights = std::move(lights)](const GBuffer& gbuf, const Camera& cam) {
        const MaterialMaps m = view_materials_from_uv(tex, gbuf);
        std::vector<ImageF> out;
        for (const PrefilteredEnv* pre : lights) out.push_back(render_view(gbuf, m, *pre, cam));
        return out;
    };
}

}  // namespace matforge
