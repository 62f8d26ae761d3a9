// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "matforge/camera.hpp"
#include "matforge/envlight.hpp"
#include "matforge/image.hpp"
#include "matforge/raster.hpp"

namespace matforge {

struct MaterialSample {
    Vec3 albedo{0.5, 0.5, 0.5};
    double metallic = 0.0;
    double roughness = 0.5;

    MaterialSample clamped() const;
};

// Per-pixel material maps. `rm` packs (roughness, metallic, 0) so both maps go
// through the same 3-channel image machinery.
struct MaterialMaps {
    ImageF albedo;
    ImageF rm;

    static MaterialMaps filled(int width, int height, const MaterialSample& s);
    int width() const { return albedo.width(); }
    int height() const { return albedo.height(); }
    MaterialSample sample(int x, int y) const;
    void set(int x, int y, const MaterialSample& s);
    ImageF metallic() const { return extract_channels(rm, 1, 1); }
    ImageF roughness() const { return extract_channels(rm, 0, 1); }
};

inline constexpr double kMinCosView = 1e-4;

// Radiance toward the viewer, with view direction `to_eye` (unit, surface to
// eye) and unit normal n:
//   L = a (1 - m) E(n) + Lpref(R, r) (F0 A(cos_v, r) + B(cos_v, r))
// with F0 = 0.04 (1 - m) + a m, R = reflect(-to_eye, n), cos_v = max(n . to_eye, 1e-4).
// E carries no 1/pi; the albedo absorbs that convention.
Vec3 shade_dir(const MaterialSample& sample, const Vec3& n, const Vec3& to_eye, const PrefilteredEnv& pre);

// Same with eye position c and surface position p.
Vec3 shade(const MaterialSample& sample, const Vec3& n, const Vec3& p, const Vec3& c, const PrefilteredEnv& pre);

// Derivatives of the RGB output. d_albedo is diagonal (output channel k
// depends only on albedo channel k, including through F0).
struct ShadeGrad {
    Vec3 d_albedo;     // dL_k / da_k
    Vec3 d_metallic;   // dL / dm
    Vec3 d_roughness;  // dL / dr, right-sided at interpolation knots

    std::array<std::array<double, 3>, 3> albedo_jacobian() const {
        return {{{d_albedo.x, 0, 0}, {0, d_albedo.y, 0}, {0, 0, d_albedo.z}}};
    }
};

ShadeGrad shade_grad_dir(const MaterialSample& sample, const Vec3& n, const Vec3& to_eye, const PrefilteredEnv& pre,
                         Vec3* radiance = nullptr);
ShadeGrad shade_grad(const MaterialSample& sample, const Vec3& n, const Vec3& p, const Vec3& c,
                     const PrefilteredEnv& pre, Vec3* radiance = nullptr);

// Shades every covered pixel; background is 0. Output is linear HDR, 3ch.
// Throws ShapeMismatch when material maps differ from the G-buffer size.
ImageF render_view(const GBuffer& gbuf, const MaterialMaps& materials, const PrefilteredEnv& pre, const Camera& camera);

// Per-pixel gradients of the rendered image (same layout as MaterialMaps:
// rm gradient holds d/droughness in channel 0 and d/dmetallic in channel 1),
// each channel summed against `upstream` (dLoss/dImage, 3ch).
MaterialMaps render_view_vjp(const GBuffer& gbuf, const MaterialMaps& materials, const PrefilteredEnv& pre,
                             const Camera& camera, const ImageF& upstream);

}  // namespace matforge
