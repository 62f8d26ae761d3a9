// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/camera.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "matforge/error.hpp"

namespace matforge {

Camera::Camera(const CameraDesc& desc) : desc_(desc) {
    require(desc.width >= 1 && desc.height >= 1, ErrorCode::InvalidArgument, "camera resolution must be at least 1x1");
    const Vec3 view = desc.target - desc.position;
    require(length(view) > 1e-12, ErrorCode::InvalidArgument, "camera view direction is zero");
    forward_ = normalize(view);
    const Vec3 side = cross(forward_, desc.up);
    require(length(side) > 1e-9 * std::max(1.0, length(desc.up)), ErrorCode::InvalidArgument,
            "camera up vector is parallel to the view direction");
    right_ = normalize(side);
    up_ = cross(right_, forward_);
    if (desc.mode == Projection::Orthographic) {
        require(desc.extent > 0.0, ErrorCode::InvalidArgument, "orthographic extent must be positive");
        half_h_ = desc.extent;
    } else {
        require(desc.fov_y_degrees > 0.0 && desc.fov_y_degrees < 180.0, ErrorCode::InvalidArgument,
                "perspective field of view must be in (0, 180) degrees");
        half_h_ = std::tan(desc.fov_y_degrees * kPi / 360.0);
    }
}

ScreenPoint Camera::project(const Vec3& world) const {
    const Vec3 local = world - desc_.position;
    const double lx = dot(local, right_);
    const double ly = dot(local, up_);
    const double depth = dot(local, forward_);
    const double aspect = static_cast<double>(desc_.width) / desc_.height;
    double nx, ny;
    if (desc_.mode == Projection::Orthographic) {
        nx = lx / (half_h_ * aspect);
        ny = ly / half_h_;
    } else {
        nx = lx / (depth * half_h_ * aspect);
        ny = ly / (depth * half_h_);
    }
    return {(nx + 1.0) * 0.5 * desc_.width, (1.0 - ny) * 0.5 * desc_.height, depth};
}

void Camera::ray(double px, double py, Vec3& origin, Vec3& direction) const {
    const double aspect = static_cast<double>(desc_.width) / desc_.height;
    const double nx = px / desc_.width * 2.0 - 1.0;
    const double ny = 1.0 - py / desc_.height * 2.0;
    if (desc_.mode == Projection::Orthographic) {
        origin = desc_.position + right_ * (nx * half_h_ * aspect) + up_ * (ny * half_h_);
        direction = forward_;
    } else {
        origin = desc_.position;
        direction = normalize(forward_ + right_ * (nx * half_h_ * aspect) + up_ * (ny * half_h_));
    }
}

Vec3 Camera::to_eye(const Vec3& p) const {
    if (desc_.mode == Projection::Orthographic) return -forward_;
    return normalize(desc_.position - p);
}

namespace {

Vec3 vec_from_json(const nlohmann::json& j, const char* key) {
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) throw Error(ErrorCode::Parse, std::string("camera field '") + key + "' must be a 3-vector");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

}  // namespace

std::vector<Camera> parse_cameras(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("camera JSON: ") + e.what());
    }
    std::vector<Camera> cams;
    try {
        for (const auto& c : doc.at("cameras")) {
            CameraDesc d;
            const std::string mode = c.value("mode", "ortho");
            if (mode == "ortho" || mode == "orthographic")
                d.mode = Projection::Orthographic;
            else if (mode == "persp" || mode == "perspective")
                d.mode = Projection::Perspective;
            else
                throw Error(ErrorCode::Parse, "unknown camera mode '" + mode + "'");
            d.position = vec_from_json(c, "position");
            d.target = vec_from_json(c, "target");
            d.up = c.contains("up") ? vec_from_json(c, "up") : Vec3{0, 1, 0};
            d.extent = c.value("extent", 1.0);
            d.fov_y_degrees = c.value("fov", 45.0);
            d.width = c.value("width", 512);
            d.height = c.value("height", 512);
            cams.emplace_back(d);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("camera JSON: ") + e.what());
    }
    return cams;
}

std::vector<Camera> load_cameras(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_cameras(ss.str());
}

void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& cam : cameras) {
        const auto& d = cam.desc();
        nlohmann::json c;
        c["mode"] = d.mode == Projection::Orthographic ? "ortho" : "persp";
        c["position"] = {d.position.x, d.position.y, d.position.z};
        c["target"] = {d.target.x, d.target.y, d.target.z};
        c["up"] = {d.up.x, d.up.y, d.up.z};
        if (d.mode == Projection::Orthographic)
            c["extent"] = d.extent;
        else
            c["fov"] = d.fov_y_degrees;
        c["width"] = d.width;
        c["height"] = d.height;
        arr.push_back(c);
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << nlohmann::json{{"cameras", arr}}.dump(2) << '\n';
}

}  // namespace matforge
