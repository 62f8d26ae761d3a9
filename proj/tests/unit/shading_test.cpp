// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "matforge/envlight.hpp"
#include "matforge/error.hpp"
#include "matforge/pipeline.hpp"
#include "matforge/raster.hpp"
#include "matforge/shading.hpp"
#include "matforge/synthetic.hpp"
#include "test_util.hpp"

namespace matforge {
namespace {

PrefilterSettings quick_settings() {
    PrefilterSettings s;
    s.samples_per_texel = 64;
    s.lut_size = 32;
    s.lut_samples = 256;
    return s;
}

const PrefilteredEnv& sky() {
    static const PrefilteredEnv pre = prefilter(ProceduralEnv::from_seed(21).bake(32), quick_settings());
    return pre;
}

const PrefilteredEnv& unit_constant() {
    static const PrefilteredEnv pre = prefilter(EnvMap::constant({1, 1, 1}, 32), quick_settings());
    return pre;
}

struct Geometry {
    Vec3 n, v;
};

Geometry random_geometry(std::mt19937_64& rng) {
    for (;;) {
        const Vec3 n = testing::random_unit_vector(rng), v = testing::random_unit_vector(rng);
        if (dot(n, v) > 0.05) return {n, v};
    }
}

MaterialSample random_material(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    return {{U(rng), U(rng), U(rng)}, U(rng), U(rng)};
}

// The specular factors read back from the environment for one geometry.
struct Factors {
    Vec3 E, Lpref;
    Vec2 ab;
};

Factors factors(const PrefilteredEnv& pre, const MaterialSample& s, const Geometry& g) {
    return {pre.irradiance_at(g.n), pre.specular_at(reflect(-g.v, g.n), s.roughness),
            pre.brdf_at(std::max(dot(g.n, g.v), kMinCosView), s.roughness)};
}

TEST(Shade, FullyMetallicHasNoDiffuse) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const Geometry g = random_geometry(rng);
        MaterialSample s = random_material(rng);
        s.metallic = 1.0;
        const Factors f = factors(sky(), s, g);
        const Vec3 want = f.Lpref * (s.albedo * f.ab.x + Vec3::splat(f.ab.y));
        EXPECT_LT(length(shade_dir(s, g.n, g.v, sky()) - want), 1e-12);
        // No dependence on the dielectric constant: the same expression
        // holds with F0 taken as albedo directly.
        const ShadeGrad grad = shade_grad_dir(s, g.n, g.v, sky());
        EXPECT_LT(length(grad.d_albedo - f.Lpref * f.ab.x), 1e-12);
    }
}

TEST(Shade, ConstantEnvDielectric) {
    const MaterialSample s{{0.5, 0.5, 0.5}, 0.0, 1.0};
    const Vec3 n{0, 1, 0}, v = normalize(Vec3{0.3, 1.0, 0.2});
    const Factors f = factors(unit_constant(), s, {n, v});
    const Vec3 L = shade_dir(s, n, v, unit_constant());
    const double specular = 1.0 * (0.04 * f.ab.x + f.ab.y);
    EXPECT_NEAR(f.Lpref.x, 1.0, 1e-3);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(L[c] - f.Lpref[c] * (0.04 * f.ab.x + f.ab.y), 0.5 * kPi, 0.01 * 0.5 * kPi);
    EXPECT_NEAR(L.x, 0.5 * kPi + specular, 0.02);
}

TEST(Shade, BlackMetalIsBiasOnly) {
    const MaterialSample s{{0, 0, 0}, 1.0, 0.4};
    const Geometry g{{0, 0, 1}, normalize(Vec3{0.5, 0, 1})};
    const Factors f = factors(sky(), s, g);
    EXPECT_LT(length(shade_dir(s, g.n, g.v, sky()) - f.Lpref * f.ab.y), 1e-12);
}

TEST(Shade, PositionFormMatchesDirectionForm) {
    const MaterialSample s{{0.2, 0.6, 0.9}, 0.3, 0.7};
    const Vec3 n = normalize(Vec3{1, 2, 3}), p{0.1, 0.2, 0.3}, c{2, 3, 5};
    EXPECT_EQ(shade(s, n, p, c, sky()), shade_dir(s, n, normalize(c - p), sky()));
}

TEST(Shade, ClampsInputs) {
    const MaterialSample wild{{-1, 2, 0.5}, 3.0, -2.0};
    const MaterialSample tame = wild.clamped();
    EXPECT_EQ(tame.albedo, (Vec3{0, 1, 0.5}));
    EXPECT_EQ(tame.metallic, 1.0);
    EXPECT_EQ(tame.roughness, 0.0);
    const Geometry g{{0, 1, 0}, normalize(Vec3{0.2, 1, 0})};
    EXPECT_EQ(shade_dir(wild, g.n, g.v, sky()), shade_dir(tame, g.n, g.v, sky()));
}

TEST(Shade, MonotoneInAlbedo) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 300; ++i) {
        const Geometry g = random_geometry(rng);
        MaterialSample s = random_material(rng);
        const Vec3 base = shade_dir(s, g.n, g.v, sky());
        const int c = i % 3;
        s.albedo[c] = std::min(1.0, s.albedo[c] + 0.1);
        EXPECT_GE(shade_dir(s, g.n, g.v, sky())[c], base[c]);
    }
}

TEST(Shade, LinearInLight) {
    const EnvMap env = ProceduralEnv::from_seed(22).bake(32);
    ImageF doubled = env.radiance();
    for (float& v : doubled.data()) v *= 2.0f;
    const PrefilteredEnv a = prefilter(env, quick_settings());
    const PrefilteredEnv b = prefilter(EnvMap(doubled), quick_settings());
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const Geometry g = random_geometry(rng);
        const MaterialSample s = random_material(rng);
        const Vec3 la = shade_dir(s, g.n, g.v, a), lb = shade_dir(s, g.n, g.v, b);
        EXPECT_LT(length(lb - la * 2.0), 1e-12 * std::max(1.0, length(lb)));
    }
}

TEST(ShadeGradTest, MatchesClosedForm) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i) {
        const Geometry g = random_geometry(rng);
        const MaterialSample s = random_material(rng);
        const Factors f = factors(sky(), s, g);
        const ShadeGrad grad = shade_grad_dir(s, g.n, g.v, sky());
        const Vec3 da = f.E * (1 - s.metallic) + f.Lpref * (s.metallic * f.ab.x);
        const Vec3 dm = -1.0 * (s.albedo * f.E) + (s.albedo - Vec3::splat(0.04)) * f.Lpref * f.ab.x;
        EXPECT_LT(length(grad.d_albedo - da), 1e-12);
        EXPECT_LT(length(grad.d_metallic - dm), 1e-12);
    }
}

TEST(ShadeGradTest, CentralDifferencesAwayFromKnots) {
    constexpr double h = 1e-3;
    const auto knots = sky().roughness_knots();
    std::mt19937_64 rng(5);
    int checked = 0;
    while (checked < 200) {
        const Geometry g = random_geometry(rng);
        MaterialSample s = random_material(rng);
        s.albedo = s.albedo * 0.98 + Vec3::splat(0.01);
        s.metallic = 0.01 + 0.98 * s.metallic;
        s.roughness = 0.01 + 0.98 * s.roughness;
        bool near = false;
        for (double k : knots) near = near || std::abs(k - s.roughness) < 2 * h;
        if (near) continue;
        ++checked;
        Vec3 radiance;
        const ShadeGrad grad = shade_grad_dir(s, g.n, g.v, sky(), &radiance);
        EXPECT_EQ(radiance, shade_dir(s, g.n, g.v, sky()));
        for (int k = 0; k < 5; ++k) {
            MaterialSample p = s, m = s;
            Vec3 analytic;
            if (k < 3) {
                p.albedo[k] += h;
                m.albedo[k] -= h;
                analytic[k] = grad.d_albedo[k];
            } else if (k == 3) {
                p.metallic += h;
                m.metallic -= h;
                analytic = grad.d_metallic;
            } else {
                p.roughness += h;
                m.roughness -= h;
                analytic = grad.d_roughness;
            }
            const Vec3 fd = (shade_dir(p, g.n, g.v, sky()) - shade_dir(m, g.n, g.v, sky())) / (2 * h);
            EXPECT_LT(length(fd - analytic), 1e-3 * std::max(length(fd), 1e-6)) << "param " << k;
        }
    }
}

TEST(ShadeGradTest, ConstantEnvPrefilteredSlopeVanishes) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 100; ++i) {
        const Geometry g = random_geometry(rng);
        const MaterialSample s = random_material(rng);
        Vec3 slope;
        const Vec3 lp = unit_constant().specular_at(reflect(-g.v, g.n), s.roughness, &slope);
        EXPECT_LT(length(slope), 1e-6);
        // What remains of dL/dr is the environment-BRDF slope alone.
        Vec2 ab_slope;
        unit_constant().brdf_at(std::max(dot(g.n, g.v), kMinCosView), s.roughness, &ab_slope);
        const Vec3 f0 = Vec3::splat(0.04 * (1 - s.metallic)) + s.albedo * s.metallic;
        const Vec3 want = lp * (f0 * ab_slope.x + Vec3::splat(ab_slope.y));
        EXPECT_LT(length(shade_grad_dir(s, g.n, g.v, unit_constant()).d_roughness - want), 1e-6);
    }
}

struct Scene {
    GBuffer gbuf;
    Camera cam;
    MaterialMaps mats;
};

Scene random_scene(int res, std::uint64_t seed) {
    const TriMesh mesh = make_uv_sphere(24, 12);
    CameraDesc d;
    d.position = {0.5, 0.8, 3.0};
    d.mode = Projection::Perspective;
    d.fov_y_degrees = 50;
    d.width = d.height = res;
    Camera cam(d);
    GBuffer g = rasterize_gbuffer(mesh, cam);
    MaterialMaps m{testing::random_image(res, res, 3, seed), testing::random_image(res, res, 3, seed + 1)};
    return {std::move(g), cam, std::move(m)};
}

TEST(RenderView, MatchesPerPixelShade) {
    const Scene sc = random_scene(8, 7);
    const ImageF img = render_view(sc.gbuf, sc.mats, sky(), sc.cam);
    int covered = 0;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            if (!sc.gbuf.covered(x, y)) {
                EXPECT_EQ(img.rgb(x, y), Vec3{});
                continue;
            }
            ++covered;
            const Vec3 want =
                shade(sc.mats.sample(x, y), sc.gbuf.normal.rgb(x, y), sc.gbuf.position.rgb(x, y), sc.cam.position(), sky());
            for (int c = 0; c < 3; ++c) EXPECT_EQ(img.at(x, y, c), static_cast<float>(want[c]));
        }
    EXPECT_GT(covered, 10);
}

TEST(RenderView, BlackDielectricShowsSheen) {
    Scene sc = random_scene(16, 8);
    sc.mats = MaterialMaps::filled(16, 16, {{0, 0, 0}, 0.0, 0.6});
    const ImageF img = render_view(sc.gbuf, sc.mats, sky(), sc.cam);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            if (!sc.gbuf.covered(x, y)) continue;
            const Vec3 v = sc.cam.to_eye(sc.gbuf.position.rgb(x, y));
            const Geometry g{sc.gbuf.normal.rgb(x, y), v};
            const Factors f = factors(sky(), sc.mats.sample(x, y), g);
            const Vec3 want = f.Lpref * (0.04 * f.ab.x + f.ab.y);
            for (int c = 0; c < 3; ++c) EXPECT_NEAR(img.at(x, y, c), want[c], 1e-6 * std::max(1.0, want[c]));
            EXPECT_GT(img.at(x, y, 0), 0.0f);
        }
}

TEST(RenderView, EmptyMaskAndShapeErrors) {
    Scene sc = random_scene(8, 9);
    for (float& v : sc.gbuf.mask.data()) v = 0.0f;
    const ImageF img = render_view(sc.gbuf, sc.mats, sky(), sc.cam);
    for (float v : img.data()) EXPECT_EQ(v, 0.0f);
    const MaterialMaps wrong = MaterialMaps::filled(4, 4, {});
    EXPECT_THROW(render_view(sc.gbuf, wrong, sky(), sc.cam), Error);
}

TEST(RenderView, VjpMatchesPerPixelGradients) {
    const Scene sc = random_scene(12, 10);
    const ImageF up = testing::random_image(12, 12, 3, 11, -1.0f, 1.0f);
    const MaterialMaps g = render_view_vjp(sc.gbuf, sc.mats, sky(), sc.cam, up);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) {
            if (!sc.gbuf.covered(x, y)) {
                EXPECT_EQ(g.albedo.rgb(x, y), Vec3{});
                EXPECT_EQ(g.rm.rgb(x, y), Vec3{});
                continue;
            }
            const ShadeGrad sg = shade_grad(sc.mats.sample(x, y), sc.gbuf.normal.rgb(x, y), sc.gbuf.position.rgb(x, y),
                                            sc.cam.position(), sky());
            const Vec3 u = up.rgb(x, y);
            for (int c = 0; c < 3; ++c) EXPECT_NEAR(g.albedo.at(x, y, c), sg.d_albedo[c] * u[c], 1e-5);
            EXPECT_NEAR(g.rm.at(x, y, 0), dot(sg.d_roughness, u), 1e-5);
            EXPECT_NEAR(g.rm.at(x, y, 1), dot(sg.d_metallic, u), 1e-5);
        }
}

}  // namespace
}  // namespace matforge
