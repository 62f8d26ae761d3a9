// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "matforge/vec.hpp"

namespace matforge {

enum class Projection { Orthographic, Perspective };

struct CameraDesc {
    Projection mode = Projection::Orthographic;
    Vec3 position{0, 0, 1};
    Vec3 target{0, 0, 0};
    Vec3 up{0, 1, 0};
    // Orthographic: half-height of the view window in world units.
    double extent = 1.0;
    // Perspective: vertical field of view.
    double fov_y_degrees = 45.0;
    int width = 512;
    int height = 512;
};

// Projection of a world point: pixel coordinates (pixel (i,j) spans
// [i,i+1) x [j,j+1), row 0 at the top) and positive view depth.
struct ScreenPoint {
    double x = 0.0, y = 0.0, depth = 0.0;
};

class Camera {
public:
    // Throws InvalidArgument when the view direction is zero, up is parallel
    // to it, or the resolution is empty.
    explicit Camera(const CameraDesc& desc);

    const CameraDesc& desc() const noexcept { return desc_; }
    Projection mode() const noexcept { return desc_.mode; }
    int width() const noexcept { return desc_.width; }
    int height() const noexcept { return desc_.height; }
    const Vec3& position() const noexcept { return desc_.position; }
    const Vec3& forward() const noexcept { return forward_; }
    const Vec3& right() const noexcept { return right_; }
    const Vec3& up() const noexcept { return up_; }

    ScreenPoint project(const Vec3& world) const;

    // Ray through pixel coordinate (px, py); direction is unit length.
    void ray(double px, double py, Vec3& origin, Vec3& direction) const;

    // Unit direction from a surface point toward the eye. Orthographic cameras
    // sit at infinity, so this is -forward everywhere.
    Vec3 to_eye(const Vec3& p) const;

private:
    CameraDesc desc_;
    Vec3 forward_, right_, up_;
    double half_h_ = 1.0;  // ortho half-height or tan(fov/2)
};

// JSON camera set: { "cameras": [ { "mode": "ortho"|"persp", "position": [..],
// "target": [..], "up": [..], "extent": e, "fov": deg, "width": w, "height": h } ] }
std::vector<Camera> load_cameras(const std::filesystem::path& path);
std::vector<Camera> parse_cameras(std::string_view json_text);
void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras);

}  // namespace matforge
