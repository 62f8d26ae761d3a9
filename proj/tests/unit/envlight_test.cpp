// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "matforge/envlight.hpp"
#include "matforge/error.hpp"
#include "matforge/microfacet.hpp"
#include "matforge/parallel.hpp"
#include "matforge/synthetic.hpp"
#include "test_util.hpp"

namespace matforge {
namespace {

// Midpoint solid angle sin(theta) dtheta dphi of texel row y.
double texel_solid_angle(int y, int W, int H) {
    return std::sin(kPi * (y + 0.5) / H) * (kPi / H) * (2.0 * kPi / W);
}

TEST(Equirect, ConventionAndInverse) {
    const Vec3 up = equirect_direction(0.5, 0.0);
    EXPECT_NEAR(up.y, 1.0, 1e-12);
    const Vec3 x = equirect_direction(0.5, 0.5);  // phi = 0, theta = pi/2
    EXPECT_NEAR(x.x, 1.0, 1e-12);
    const Vec3 z = equirect_direction(0.75, 0.5);  // phi = pi/2
    EXPECT_NEAR(z.z, 1.0, 1e-12);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        const Vec3 d = testing::random_unit_vector(rng);
        double u, v;
        equirect_uv(d, u, v);
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(length(equirect_direction(u, v) - d), 1e-12);
    }
}

TEST(EnvMapTest, ValidatesInput) {
    EXPECT_THROW(EnvMap(ImageF(10, 10, 3)), Error);
    EXPECT_THROW(EnvMap(ImageF(8, 4, 1)), Error);
    ImageF neg(8, 4, 3, 1.0f);
    neg.at(2, 2, 1) = -0.1f;
    EXPECT_THROW(EnvMap{neg}, Error);
    ImageF inf(8, 4, 3, 1.0f);
    inf.at(0, 0, 0) = INFINITY;
    EXPECT_THROW(EnvMap{inf}, Error);
}

TEST(Irradiance, ConstantEnvGivesPi) {
    const ImageF irr = compute_irradiance(EnvMap::constant({1, 1, 1}, 64), 16);
    ASSERT_EQ(irr.height(), 16);
    // Monte Carlo estimate of the cosine integral over the hemisphere.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double mc = 0.0;
    constexpr int kN = 1000000;
    for (int i = 0; i < kN; ++i) mc += U(rng);  // cos theta is uniform under uniform hemisphere sampling
    mc *= 2.0 * kPi / kN;
    EXPECT_NEAR(mc, kPi, 0.01 * kPi);
    for (int y = 0; y < irr.height(); ++y)
        for (int x = 0; x < irr.width(); ++x)
            for (int c = 0; c < 3; ++c) EXPECT_NEAR(irr.at(x, y, c), mc, 0.01 * kPi);
}

TEST(Irradiance, MatchesMonteCarloOnSky) {
    const ProceduralEnv sky = ProceduralEnv::from_seed(9);
    const ImageF irr = compute_irradiance(sky.bake(64), 16);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int probe = 0; probe < 8; ++probe) {
        const int x = static_cast<int>(rng() % irr.width()), y = static_cast<int>(rng() % irr.height());
        const Vec3 n = equirect_texel_direction(x, y, irr.width(), irr.height());
        const Frame f = Frame::from_normal(n);
        Vec3 mc;
        constexpr int kN = 200000;
        for (int i = 0; i < kN; ++i) {
            const double u1 = U(rng), u2 = U(rng), r = std::sqrt(u1), phi = 2 * kPi * u2;
            mc += sky.radiance(f.to_world({r * std::cos(phi), r * std::sin(phi), std::sqrt(1 - u1)}));
        }
        mc = mc * (kPi / kN);
        EXPECT_LT(length(irr.rgb(x, y) - mc) / length(mc), 0.02) << "texel " << x << "," << y;
    }
}

TEST(Irradiance, SingleTexelIsClampedCosine) {
    constexpr int H = 16, W = 32;
    ImageF img(W, H, 3);
    const int tx = 5, ty = 6;
    img.set_rgb(tx, ty, {10, 10, 10});
    const ImageF irr = compute_irradiance(EnvMap(img), 8);
    const Vec3 w = equirect_texel_direction(tx, ty, W, H);
    const double scale = 10.0 * texel_solid_angle(ty, W, H);
    for (int y = 0; y < irr.height(); ++y)
        for (int x = 0; x < irr.width(); ++x) {
            const Vec3 n = equirect_texel_direction(x, y, irr.width(), irr.height());
            const double want = scale * std::max(0.0, dot(w, n));
            EXPECT_NEAR(irr.at(x, y, 0), want, 1e-5 * scale);
            if (dot(w, n) < 0.0) {
                EXPECT_EQ(irr.at(x, y, 0), 0.0f);
            }
        }
}

TEST(Irradiance, QuarterTurnEquivariance) {
    const EnvMap env = ProceduralEnv::from_seed(2).bake(32);
    const ImageF irr = compute_irradiance(env, 16);
    const ImageF rotated = compute_irradiance(EnvMap(rotate_equirect_quarter(env.radiance())), 16);
    const ImageF expect = rotate_equirect_quarter(irr);
    for (std::size_t i = 0; i < irr.size(); ++i)
        EXPECT_NEAR(rotated.data()[i], expect.data()[i], 1e-4 * std::max(1.0f, expect.data()[i]));
}

TEST(Specular, ConstantEnvIsIdentityOnEveryLevel) {
    const auto chain = prefilter_specular(EnvMap::constant({0.3, 1.0, 2.5}, 64), 6, 128);
    ASSERT_EQ(chain.size(), 6u);
    for (const ImageF& level : chain)
        for (int y = 0; y < level.height(); ++y)
            for (int x = 0; x < level.width(); ++x) {
                EXPECT_NEAR(level.at(x, y, 0), 0.3, 1e-3);
                EXPECT_NEAR(level.at(x, y, 2), 2.5, 1e-3);
            }
}

TEST(Specular, LevelZeroResamplesSource) {
    const EnvMap env = ProceduralEnv::from_seed(5).bake(64);
    const auto chain = prefilter_specular(env, 4, 64, 32);
    const ImageF& l0 = chain[0];
    ASSERT_EQ(l0.height(), 32);
    for (int y = 0; y < l0.height(); ++y)
        for (int x = 0; x < l0.width(); ++x) {
            const Vec3 d = equirect_texel_direction(x, y, l0.width(), l0.height());
            double u, v;
            equirect_uv(d, u, v);
            const ImageF& src = env.radiance();
            for (int c = 0; c < 3; ++c)
                EXPECT_NEAR(l0.at(x, y, c), src.sample_bilinear(u * src.width(), v * src.height(), c), 1e-3);
        }
}

TEST(Specular, BrightTexelLobeMatchesBruteForce) {
    constexpr int H = 64, W = 128;
    ImageF img(W, H, 3, 0.0f);
    const int tx = 40, ty = 24;
    img.set_rgb(tx, ty, {1000, 1000, 1000});
    const EnvMap env(img);
    constexpr int kLevels = 5;
    const auto chain = prefilter_specular(env, kLevels, 1024, 64);
    const int level = 2;
    const double alpha = microfacet::alpha_from_roughness(0.5);
    const ImageF& lv = chain[level];
    const Vec3 bright = equirect_texel_direction(tx, ty, W, H);

    // GGX-weighted hemisphere sum over all source texels with N = V = R.
    const auto oracle = [&](const Vec3& R) {
        double num = 0.0, den = 0.0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const Vec3 l = equirect_texel_direction(x, y, W, H);
                const double nl = dot(R, l);
                if (nl <= 0.0) continue;
                const Vec3 h = normalize(R + l);
                const double w = texel_solid_angle(y, W, H) * microfacet::ggx_d(dot(R, h), alpha) * nl;
                num += w * img.at(x, y, 0);
                den += w;
            }
        return num / den;
    };
    // Probe the 20 level texels closest to the bright direction.
    std::vector<std::pair<double, std::pair<int, int>>> probes;
    for (int y = 0; y < lv.height(); ++y)
        for (int x = 0; x < lv.width(); ++x)
            probes.push_back({std::acos(std::clamp(dot(equirect_texel_direction(x, y, lv.width(), lv.height()), bright),
                                                   -1.0, 1.0)),
                              {x, y}});
    std::sort(probes.begin(), probes.end());
    probes.resize(20);
    const double peak = oracle(bright);
    double prev = INFINITY;
    for (const auto& [angle, xy] : probes) {
        const Vec3 R = equirect_texel_direction(xy.first, xy.second, lv.width(), lv.height());
        const double got = lv.at(xy.first, xy.second, 0);
        const double want = oracle(R);
        EXPECT_NEAR(got, want, 0.05 * peak) << "angle " << angle;
        // Decay away from the bright direction, allowing for sampling noise.
        EXPECT_LE(got, prev + 0.02 * peak) << "angle " << angle;
        prev = got;
    }
}

TEST(Specular, WhiteFurnaceBoundAndLinearity) {
    const EnvMap env = ProceduralEnv::from_seed(6).bake(32);
    PrefilterSettings s;
    s.samples_per_texel = 64;
    s.lut_size = 16;
    s.lut_samples = 64;
    const PrefilteredEnv pre = prefilter(env, s);
    const double lmax = env.max_radiance();
    for (const ImageF& level : pre.specular())
        for (float v : level.data()) EXPECT_LE(v, lmax * (1 + 1e-3));

    for (float c : {0.0f, 0.5f, 4.0f}) {
        ImageF scaled = env.radiance();
        for (float& v : scaled.data()) v *= c;
        const PrefilteredEnv pc = prefilter(EnvMap(scaled), s);
        for (std::size_t i = 0; i < pre.irradiance().size(); ++i)
            EXPECT_EQ(pc.irradiance().data()[i], c * pre.irradiance().data()[i]);
        for (int l = 0; l < pre.mip_count(); ++l)
            for (std::size_t i = 0; i < pre.specular()[l].size(); ++i)
                EXPECT_EQ(pc.specular()[l].data()[i], c * pre.specular()[l].data()[i]);
    }
}

TEST(BrdfLut, MirrorLimitAndBounds) {
    const ImageF lut = integrate_brdf_lut(32, 1024);
    const int N = lut.width();
    // Row j is roughness j/(N-1), column i is cos_v i/(N-1).
    EXPECT_NEAR(lut.at(N - 1, 0, 0), 1.0, 0.02);
    EXPECT_NEAR(lut.at(N - 1, 0, 1), 0.0, 0.02);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
            const double A = lut.at(i, j, 0), B = lut.at(i, j, 1);
            ASSERT_TRUE(std::isfinite(A) && std::isfinite(B));
            EXPECT_GE(A, 0.0);
            EXPECT_GE(B, 0.0);
            EXPECT_LE(A, 1.5);
            EXPECT_LE(B, 1.5);
            EXPECT_LE(A + B, 1.05) << i << "," << j;
        }
    for (int j = 1; j < N; ++j) EXPECT_LE(lut.at(N - 1, j, 0), lut.at(N - 1, j - 1, 0)) << "row " << j;
}

// Independent pseudo-random estimate of (A, B).
Vec2 mc_brdf(double cos_v, double r, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double a = r * r, a2 = a * a;
    const Vec3 v{std::sqrt(1 - cos_v * cos_v), 0, cos_v};
    double A = 0, B = 0;
    for (int i = 0; i < n; ++i) {
        const double u1 = U(rng), u2 = U(rng);
        const double ch = std::sqrt((1 - u1) / (1 + (a2 - 1) * u1)), sh = std::sqrt(1 - ch * ch);
        const Vec3 h{sh * std::cos(2 * kPi * u2), sh * std::sin(2 * kPi * u2), ch};
        const double vh = dot(v, h);
        const Vec3 l = h * (2 * vh) - v;
        if (l.z <= 0 || vh <= 0) continue;
        const auto lam = [&](double c) { return 0.5 * (-1 + std::sqrt(1 + a2 * (1 - c * c) / (c * c))); };
        const double g = 1.0 / (1 + lam(cos_v) + lam(l.z));
        const double w = g * vh / (ch * cos_v);
        const double fc = std::pow(1 - vh, 5);
        A += (1 - fc) * w;
        B += fc * w;
    }
    return {A / n, B / n};
}

TEST(BrdfLut, MatchesRandomSamplingOracle) {
    constexpr int N = 32;
    const ImageF lut = integrate_brdf_lut(N, 4096);
    for (int j : {2, 10, 20, 31})
        for (int i : {4, 16, 31}) {
            const double cos_v = static_cast<double>(i) / (N - 1), r = static_cast<double>(j) / (N - 1);
            const Vec2 ab = mc_brdf(cos_v, r, 100000, 17 + i * 100 + j);
            EXPECT_NEAR(lut.at(i, j, 0), ab.x, 0.01) << "cos " << cos_v << " r " << r;
            EXPECT_NEAR(lut.at(i, j, 1), ab.y, 0.01) << "cos " << cos_v << " r " << r;
        }
}

TEST(BrdfLut, BitIdenticalAcrossRunsAndThreads) {
    const unsigned before = thread_count();
    set_thread_count(1);
    const ImageF a = integrate_brdf_lut(24, 256);
    set_thread_count(3);
    const ImageF b = integrate_brdf_lut(24, 256);
    set_thread_count(before);
    EXPECT_TRUE(a == b);
}

TEST(PrefilteredEnvTest, PiecewiseLinearInRoughness) {
    PrefilterSettings s;
    s.samples_per_texel = 64;
    s.lut_size = 16;
    s.lut_samples = 128;
    const PrefilteredEnv pre = prefilter(ProceduralEnv::from_seed(8).bake(32), s);
    const Vec3 R = normalize(Vec3{0.3, 0.5, -0.8});
    const auto knots = pre.roughness_knots();
    ASSERT_FALSE(knots.empty());
    for (double r = 0.013; r < 0.99; r += 0.071) {
        Vec3 slope;
        Vec2 lut_slope;
        pre.specular_at(R, r, &slope);
        pre.brdf_at(0.6, r, &lut_slope);
        const double h = 1e-4;
        bool near = false;
        for (double k : knots) near = near || std::abs(k - r) < 2 * h;
        if (near) continue;
        const Vec3 fd = (pre.specular_at(R, r + h) - pre.specular_at(R, r - h)) / (2 * h);
        EXPECT_LT(length(fd - slope), 1e-6 * std::max(1.0, length(fd)));
        const Vec2 hi = pre.brdf_at(0.6, r + h), lo = pre.brdf_at(0.6, r - h);
        EXPECT_NEAR((hi.x - lo.x) / (2 * h), lut_slope.x, 1e-6);
        EXPECT_NEAR((hi.y - lo.y) / (2 * h), lut_slope.y, 1e-6);
    }
    // Knot values reproduce the stored levels.
    for (int l = 0; l < pre.mip_count(); ++l) {
        const ImageF& lv = pre.specular()[l];
        double u, v;
        equirect_uv(R, u, v);
        EXPECT_NEAR(pre.specular_at(R, pre.mip_roughness(l)).x, lv.sample_bilinear(u * lv.width(), v * lv.height(), 0),
                    1e-6);
    }
}

TEST(PrefilteredEnvTest, SaveLoadRoundTrip) {
    testing::TempDir dir;
    PrefilterSettings s;
    s.samples_per_texel = 32;
    s.lut_size = 16;
    s.lut_samples = 64;
    const PrefilteredEnv pre = prefilter(ProceduralEnv::from_seed(1).bake(16), s);
    save_prefiltered(dir.path(), pre);
    const PrefilteredEnv back = load_prefiltered(dir.path());
    EXPECT_TRUE(back.irradiance() == pre.irradiance());
    ASSERT_EQ(back.mip_count(), pre.mip_count());
    for (int l = 0; l < pre.mip_count(); ++l) EXPECT_TRUE(back.specular()[l] == pre.specular()[l]);
    EXPECT_TRUE(back.brdf_lut() == pre.brdf_lut());
}

}  // namespace
}  // namespace matforge
