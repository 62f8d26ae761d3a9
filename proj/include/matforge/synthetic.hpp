// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "matforge/envlight.hpp"
#include "matforge/pipeline.hpp"

namespace matforge {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform_in(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }

// Smooth analytic sky: vertical gradient plus two broad colored lobes.
struct ProceduralEnv {
    Vec3 zenith, horizon, nadir;
    Vec3 lobe_dir[2];
    Vec3 lobe_color[2];
    double lobe_exponent[2] = {8.0, 4.0};

    static ProceduralEnv from_seed(std::uint64_t seed);
    Vec3 radiance(const Vec3& dir) const;
    // Equirect map sampled at texel centers.
    EnvMap bake(int height) const;
};

// Smooth low-frequency atlas textures: albedo in [0.1, 0.9], roughness in
// [0.25, 0.9], metallic in [0, 1].
UvMaterials procedural_materials(std::uint64_t seed, int resolution);

}  // namespace matforge
