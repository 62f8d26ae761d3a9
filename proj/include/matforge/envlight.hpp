// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "matforge/image.hpp"
#include "matforge/vec.hpp"

namespace matforge {

// Equirectangular direction convention shared by every lat-long image in the
// project: u in [0,1) maps to azimuth phi in [-pi, pi), v in [0,1] to polar
// angle theta in [0, pi] measured from +Y, and
//   dir = (sin(theta) cos(phi), cos(theta), sin(theta) sin(phi)).
Vec3 equirect_direction(double u, double v);
void equirect_uv(const Vec3& dir, double& u, double& v);
// Direction through the center of texel (x, y) of a width x height map.
Vec3 equirect_texel_direction(int x, int y, int width, int height);
// Bilinear lookup, wrapping in u and clamping in v.
Vec3 sample_equirect(const ImageF& img, const Vec3& dir);

class EnvMap {
public:
    // Throws InvalidArgument unless the image is 3-channel, width = 2*height,
    // and every sample is finite and non-negative.
    explicit EnvMap(ImageF radiance);
    static EnvMap constant(const Vec3& radiance, int height);

    const ImageF& radiance() const noexcept { return radiance_; }
    int width() const noexcept { return radiance_.width(); }
    int height() const noexcept { return radiance_.height(); }
    Vec3 lookup(const Vec3& dir) const { return sample_equirect(radiance_, dir); }
    float max_radiance() const;

private:
    ImageF radiance_;
};

EnvMap load_env(const std::filesystem::path& pfm_path);

struct PrefilterSettings {
    int irradiance_height = 16;
    int n_mips = 6;
    int specular_base_height = 128;  // capped at the source height
    int specular_min_height = 8;
    int samples_per_texel = 256;
    int lut_size = 64;
    int lut_samples = 1024;
};

// Cosine-weighted hemisphere integral of incident radiance for every output
// texel direction n, summed over all source texels with solid-angle weights
// sin(theta) dtheta dphi. No 1/pi: the diffuse term uses it as-is.
ImageF compute_irradiance(const EnvMap& env, int out_height);

// Roughness r_l = l / (n_mips - 1). Level 0 is the bilinear resample of the
// source; higher levels average GGX importance samples around R with N = V = R
// and weight (l . n).
std::vector<ImageF> prefilter_specular(const EnvMap& env, int n_mips, int samples_per_texel,
                                       int base_height = 128, int min_height = 8);

// Environment BRDF table over (cos theta_v, roughness), both on endpoint grids
// i / (N - 1). Channel 0 is the F0 scale A, channel 1 the bias B.
ImageF integrate_brdf_lut(int resolution, int samples);

// Split-sum factors with piecewise-linear interpolation in roughness.
class PrefilteredEnv {
public:
    PrefilteredEnv(ImageF irradiance, std::vector<ImageF> specular, ImageF brdf_lut);

    const ImageF& irradiance() const noexcept { return irradiance_; }
    const std::vector<ImageF>& specular() const noexcept { return specular_; }
    const ImageF& brdf_lut() const noexcept { return lut_; }
    int mip_count() const noexcept { return static_cast<int>(specular_.size()); }
    double mip_roughness(int level) const { return static_cast<double>(level) / (mip_count() - 1); }

    Vec3 irradiance_at(const Vec3& n) const { return sample_equirect(irradiance_, n); }

    // Radiance of the roughness-r lobe around R; d_dr receives the right-sided
    // slope in r when non-null.
    Vec3 specular_at(const Vec3& reflected, double roughness, Vec3* d_dr = nullptr) const;

    // (A, B) at (cos theta_v, r); d_dr receives (dA/dr, dB/dr) when non-null.
    Vec2 brdf_at(double cos_v, double roughness, Vec2* d_dr = nullptr) const;

    // Roughness values where specular_at / brdf_at change slope.
    std::vector<double> roughness_knots() const;

private:
    ImageF irradiance_;
    std::vector<ImageF> specular_;
    ImageF lut_;
};

PrefilteredEnv prefilter(const EnvMap& env, const PrefilterSettings& settings = {});

// Precomputed BRDF tables can be shared across environments.
PrefilteredEnv prefilter(const EnvMap& env, const PrefilterSettings& settings, const ImageF& brdf_lut);

// Directory of PFMs plus manifest.json. The 2-channel LUT is stored as a
// 3-channel PFM with a zero third channel.
void save_prefiltered(const std::filesystem::path& dir, const PrefilteredEnv& pre);
PrefilteredEnv load_prefiltered(const std::filesystem::path& dir);

// Shifts an equirect map by a quarter turn about the pole axis, i.e. rotates
// the environment by +90 degrees of azimuth.
ImageF rotate_equirect_quarter(const ImageF& img, int quarter_turns = 1);

}  // namespace matforge
