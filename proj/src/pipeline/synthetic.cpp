// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "matforge/parallel.hpp"

namespace matforge {

namespace {

Vec3 random_color(std::mt19937_64& rng, double lo, double hi) {
    return {uniform_in(rng, lo, hi), uniform_in(rng, lo, hi), uniform_in(rng, lo, hi)};
}

Vec3 random_direction(std::mt19937_64& rng) {
    const double z = uniform_in(rng, -1.0, 1.0), phi = uniform_in(rng, 0.0, 2.0 * kPi);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), z, s * std::sin(phi)};
}

}  // namespace

ProceduralEnv ProceduralEnv::from_seed(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ProceduralEnv e;
    e.zenith = random_color(rng, 0.2, 0.9);
    e.horizon = random_color(rng, 0.3, 1.0);
    e.nadir = random_color(rng, 0.05, 0.4);
    for (int k = 0; k < 2; ++k) {
        e.lobe_dir[k] = random_direction(rng);
        e.lobe_color[k] = random_color(rng, 0.5, 2.5);
        e.lobe_exponent[k] = uniform_in(rng, 2.0, 10.0);
    }
    return e;
}

Vec3 ProceduralEnv::radiance(const Vec3& dir) const {
    const double y = std::clamp(dir.y, -1.0, 1.0);
    Vec3 out = y >= 0.0 ? lerp(horizon, zenith, y) : lerp(horizon, nadir, -y);
    for (int k = 0; k < 2; ++k) {
        const double c = std::max(0.0, dot(dir, lobe_dir[k]));
        out += lobe_color[k] * std::pow(c, lobe_exponent[k]);
    }
    return out;
}

EnvMap ProceduralEnv::bake(int height) const {
    const int W = 2 * height;
    ImageF img(W, height, 3);
    parallel_for(0, static_cast<std::size_t>(height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < W; ++x) img.set_rgb(x, y, radiance(equirect_texel_direction(x, y, W, height)));
    });
    return EnvMap(std::move(img));
}

UvMaterials procedural_materials(std::uint64_t seed, int resolution) {
    std::mt19937_64 rng(seed);
    // Each field is a sum of two low-frequency sinusoids in (u, v).
    struct Wave {
        double fu, fv, phase, amp;
    };
    auto waves = [&] {
        std::array<Wave, 2> w;
        for (Wave& x : w) x = {uniform_in(rng, 0.5, 2.0), uniform_in(rng, 0.5, 2.0), uniform_in(rng, 0.0, 2 * kPi),
                               uniform_in(rng, 0.3, 0.5)};
        return w;
    };
    std::array<std::array<Wave, 2>, 5> fields;
    for (auto& f : fields) f = waves();
    const auto eval = [&](const std::array<Wave, 2>& f, double u, double v) {
        double s = 0.0;
        for (const Wave& w : f) s += w.amp * std::sin(2 * kPi * (w.fu * u + w.fv * v) + w.phase);
        return 0.5 + 0.5 * s;  // within [0.1, 0.9]
    };
    const int R = resolution;
    UvMaterials m{ImageF(R, R, 3), ImageF(R, R, 3)};
    parallel_for(0, static_cast<std::size_t>(R), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < R; ++x) {
            const double u = (x + 0.5) / R, v = 1.0 - (y + 0.5) / R;
            for (int c = 0; c < 3; ++c) m.albedo.at(x, y, c) = static_cast<float>(eval(fields[c], u, v));
            const double rough = 0.25 + 0.65 * (eval(fields[3], u, v) - 0.1) / 0.8;
            const double metal = std::clamp((eval(fields[4], u, v) - 0.1) / 0.8, 0.0, 1.0);
            m.rm.at(x, y, 0) = static_cast<float>(std::clamp(rough, 0.25, 0.9));
            m.rm.at(x, y, 1) = static_cast<float>(metal);
        }
    });
    return m;
}

}  // namespace matforge
