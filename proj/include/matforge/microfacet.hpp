// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "matforge/vec.hpp"

// GGX / Smith height-correlated / Schlick building blocks. Roughness r maps to
// the GGX width alpha = r^2.
namespace matforge::microfacet {

inline constexpr double kDielectricF0 = 0.04;

inline double alpha_from_roughness(double r) { return r * r; }

inline double radical_inverse(std::uint32_t bits) {
    bits = (bits << 16u) | (bits >> 16u);
    bits = ((bits & 0x55555555u) << 1u) | ((bits & 0xAAAAAAAAu) >> 1u);
    bits = ((bits & 0x33333333u) << 2u) | ((bits & 0xCCCCCCCCu) >> 2u);
    bits = ((bits & 0x0F0F0F0Fu) << 4u) | ((bits & 0xF0F0F0F0u) >> 4u);
    bits = ((bits & 0x00FF00FFu) << 8u) | ((bits & 0xFF00FF00u) >> 8u);
    return static_cast<double>(bits) * 2.3283064365386963e-10;
}

inline Vec2 hammersley(std::uint32_t i, std::uint32_t n) {
    return {static_cast<double>(i) / n, radical_inverse(i)};
}

inline double ggx_d(double n_dot_h, double alpha) {
    const double a2 = alpha * alpha;
    const double f = (n_dot_h * a2 - n_dot_h) * n_dot_h + 1.0;
    return a2 / (kPi * f * f);
}

// Smith height-correlated visibility V = G / (4 (n.v)(n.l)).
inline double smith_visibility(double n_dot_v, double n_dot_l, double alpha) {
    const double a2 = alpha * alpha;
    const double gv = n_dot_l * std::sqrt(n_dot_v * n_dot_v * (1.0 - a2) + a2);
    const double gl = n_dot_v * std::sqrt(n_dot_l * n_dot_l * (1.0 - a2) + a2);
    return 0.5 / (gv + gl);
}

inline double schlick_weight(double v_dot_h) {
    const double m = std::clamp(1.0 - v_dot_h, 0.0, 1.0);
    const double m2 = m * m;
    return m2 * m2 * m;
}

// GGX-distributed half vector in the local frame (z = normal), pdf D(h) (n.h).
inline Vec3 sample_ggx_half(const Vec2& u, double alpha) {
    const double a2 = alpha * alpha;
    const double phi = 2.0 * kPi * u.y;
    const double cos_t = std::sqrt((1.0 - u.x) / (1.0 + (a2 - 1.0) * u.x));
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    return {sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t};
}

}  // namespace matforge::microfacet
