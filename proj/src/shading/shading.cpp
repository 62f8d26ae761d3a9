// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/shading.hpp"

#include <algorithm>

#include "matforge/error.hpp"
#include "matforge/microfacet.hpp"
#include "matforge/parallel.hpp"

namespace matforge {

MaterialSample MaterialSample::clamped() const {
    return {clamp01(albedo), std::clamp(metallic, 0.0, 1.0), std::clamp(roughness, 0.0, 1.0)};
}

MaterialMaps MaterialMaps::filled(int width, int height, const MaterialSample& s) {
    MaterialMaps m{ImageF(width, height, 3), ImageF(width, height, 3)};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) m.set(x, y, s);
    return m;
}

MaterialSample MaterialMaps::sample(int x, int y) const {
    return {albedo.rgb(x, y), rm.at(x, y, 1), rm.at(x, y, 0)};
}

void MaterialMaps::set(int x, int y, const MaterialSample& s) {
    albedo.set_rgb(x, y, s.albedo);
    rm.at(x, y, 0) = static_cast<float>(s.roughness);
    rm.at(x, y, 1) = static_cast<float>(s.metallic);
    rm.at(x, y, 2) = 0.0f;
}

namespace {

struct SplitSumTerms {
    Vec3 irradiance;
    Vec3 prefiltered;
    Vec3 d_prefiltered;
    Vec2 ab;
    Vec2 d_ab;
};

SplitSumTerms lookup_terms(const MaterialSample& s, const Vec3& n, const Vec3& to_eye, const PrefilteredEnv& pre,
                           bool with_slopes) {
    SplitSumTerms t;
    const double cos_v = std::max(dot(n, to_eye), kMinCosView);
    const Vec3 reflected = reflect(-to_eye, n);
    t.irradiance = pre.irradiance_at(n);
    t.prefiltered = pre.specular_at(reflected, s.roughness, with_slopes ? &t.d_prefiltered : nullptr);
    t.ab = pre.brdf_at(cos_v, s.roughness, with_slopes ? &t.d_ab : nullptr);
    return t;
}

Vec3 dielectric_f0(const MaterialSample& s) {
    return Vec3::splat(microfacet::kDielectricF0 * (1.0 - s.metallic)) + s.albedo * s.metallic;
}

Vec3 combine(const MaterialSample& s, const SplitSumTerms& t) {
    const Vec3 f0 = dielectric_f0(s);
    const Vec3 diffuse = s.albedo * (1.0 - s.metallic) * t.irradiance;
    const Vec3 specular = t.prefiltered * (f0 * t.ab.x + Vec3::splat(t.ab.y));
    return diffuse + specular;
}

}  // namespace

Vec3 shade_dir(const MaterialSample& sample, const Vec3& n, const Vec3& to_eye, const PrefilteredEnv& pre) {
    const MaterialSample s = sample.clamped();
    return combine(s, lookup_terms(s, n, to_eye, pre, false));
}

Vec3 shade(const MaterialSample& sample, const Vec3& n, const Vec3& p, const Vec3& c, const PrefilteredEnv& pre) {
    return shade_dir(sample, n, normalize(c - p), pre);
}

ShadeGrad shade_grad_dir(const MaterialSample& sample, const Vec3& n, const Vec3& to_eye, const PrefilteredEnv& pre,
                         Vec3* radiance) {
    const MaterialSample s = sample.clamped();
    const SplitSumTerms t = lookup_terms(s, n, to_eye, pre, true);
    if (radiance) *radiance = combine(s, t);

    const double A = t.ab.x, B = t.ab.y;
    const Vec3 f0 = dielectric_f0(s);
    ShadeGrad g;
    g.d_albedo = t.irradiance * (1.0 - s.metallic) + t.prefiltered * (s.metallic * A);
    g.d_metallic = -(s.albedo * t.irradiance) + (s.albedo - Vec3::splat(microfacet::kDielectricF0)) * t.prefiltered * A;
    g.d_roughness = t.d_prefiltered * (f0 * A + Vec3::splat(B)) + t.prefiltered * (f0 * t.d_ab.x + Vec3::splat(t.d_ab.y));
    return g;
}

ShadeGrad shade_grad(const MaterialSample& sample, const Vec3& n, const Vec3& p, const Vec3& c,
                     const PrefilteredEnv& pre, Vec3* radiance) {
    return shade_grad_dir(sample, n, normalize(c - p), pre, radiance);
}

namespace {

void check_material_shape(const GBuffer& gbuf, const MaterialMaps& m) {
    if (m.albedo.width() != gbuf.width() || m.albedo.height() != gbuf.height() || m.rm.width() != gbuf.width() ||
        m.rm.height() != gbuf.height() || m.albedo.channels() < 3 || m.rm.channels() < 2)
        throw Error(ErrorCode::ShapeMismatch, "material maps do not match the G-buffer resolution");
}

}  // namespace

ImageF render_view(const GBuffer& gbuf, const MaterialMaps& materials, const PrefilteredEnv& pre, const Camera& camera) {
    check_material_shape(gbuf, materials);
    const int W = gbuf.width(), H = gbuf.height();
    ImageF out(W, H, 3);
    parallel_for(0, static_cast<std::size_t>(H), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < W; ++x) {
            if (!gbuf.covered(x, y)) continue;
            const Vec3 p = gbuf.position.rgb(x, y);
            out.set_rgb(x, y, shade_dir(materials.sample(x, y), gbuf.normal.rgb(x, y), camera.to_eye(p), pre));
        }
    });
    return out;
}

MaterialMaps render_view_vjp(const GBuffer& gbuf, const MaterialMaps& materials, const PrefilteredEnv& pre,
                             const Camera& camera, const ImageF& upstream) {
    check_material_shape(gbuf, materials);
    require(upstream.width() == gbuf.width() && upstream.height() == gbuf.height() && upstream.channels() == 3,
            ErrorCode::ShapeMismatch, "upstream gradient does not match the G-buffer resolution");
    const int W = gbuf.width(), H = gbuf.height();
    MaterialMaps grad{ImageF(W, H, 3), ImageF(W, H, 3)};
    parallel_for(0, static_cast<std::size_t>(H), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < W; ++x) {
            if (!gbuf.covered(x, y)) continue;
            const Vec3 p = gbuf.position.rgb(x, y);
            const ShadeGrad g = shade_grad_dir(materials.sample(x, y), gbuf.normal.rgb(x, y), camera.to_eye(p), pre);
            const Vec3 up = upstream.rgb(x, y);
            grad.albedo.set_rgb(x, y, g.d_albedo * up);
            grad.rm.at(x, y, 0) = static_cast<float>(dot(g.d_roughness, up));
            grad.rm.at(x, y, 1) = static_cast<float>(dot(g.d_metallic, up));
        }
    });
    return grad;
}

}  // namespace matforge
