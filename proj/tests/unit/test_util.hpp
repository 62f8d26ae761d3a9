// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "matforge/camera.hpp"
#include "matforge/image.hpp"
#include "matforge/mesh.hpp"
#include "matforge/vec.hpp"

namespace matforge::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        std::string name = info ? std::string(info->test_suite_name()) + "." + info->name() : "matforge";
        path_ = std::filesystem::temp_directory_path() /
                ("matforge-test-" + name + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline ImageF random_image(int w, int h, int c, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> U(lo, hi);
    ImageF img(w, h, c);
    for (float& v : img.data()) v = U(rng);
    return img;
}

inline Vec3 random_unit_vector(std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    for (;;) {
        const Vec3 v{N(rng), N(rng), N(rng)};
        if (length(v) > 1e-6) return normalize(v);
    }
}

// Moller-Trumbore; returns the ray parameter of the nearest hit.
inline std::optional<double> ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 p = cross(d, e2);
    const double det = dot(e1, p);
    if (std::abs(det) < 1e-14) return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 s = o - a;
    const double u = dot(s, p) * inv;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vec3 q = cross(s, e1);
    const double v = dot(d, q) * inv;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double t = dot(e2, q) * inv;
    if (t <= 0.0) return std::nullopt;
    return t;
}

// Brute-force nearest hit of a pixel-center ray over every triangle.
inline std::optional<Vec3> ray_cast(const TriMesh& mesh, const Camera& cam, int x, int y) {
    Vec3 o, d;
    cam.ray(x + 0.5, y + 0.5, o, d);
    std::optional<double> best;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const int ti = static_cast<int>(t);
        const auto hit = ray_triangle(o, d, mesh.position(ti, 0), mesh.position(ti, 1), mesh.position(ti, 2));
        if (hit && (!best || *hit < *best)) best = hit;
    }
    if (!best) return std::nullopt;
    return o + d * *best;
}

}  // namespace matforge::testing
