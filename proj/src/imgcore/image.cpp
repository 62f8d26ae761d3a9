// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/image.hpp"

#include <cmath>
#include <string>

#include "matforge/error.hpp"

namespace matforge {

ImageF::ImageF(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
    require(width >= 0 && height >= 0, ErrorCode::InvalidArgument, "negative image dimensions");
    require(channels >= 1 && channels <= 4, ErrorCode::InvalidArgument,
            "unsupported channel count " + std::to_string(channels));
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Vec3 ImageF::rgb(int x, int y) const {
    const std::size_t i = index(x, y);
    Vec3 v;
    for (int c = 0; c < std::min(channels_, 3); ++c) v[c] = data_[i + c];
    return v;
}

void ImageF::set_rgb(int x, int y, const Vec3& v) {
    const std::size_t i = index(x, y);
    for (int c = 0; c < std::min(channels_, 3); ++c) data_[i + c] = static_cast<float>(v[c]);
}

float ImageF::sample_bilinear(double px, double py, int c) const {
    const double fx = std::clamp(px - 0.5, 0.0, static_cast<double>(width_ - 1));
    const double fy = std::clamp(py - 0.5, 0.0, static_cast<double>(height_ - 1));
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const double tx = fx - x0;
    const double ty = fy - y0;
    const double top = at(x0, y0, c) * (1.0 - tx) + at(x1, y0, c) * tx;
    const double bottom = at(x0, y1, c) * (1.0 - tx) + at(x1, y1, c) * tx;
    return static_cast<float>(top * (1.0 - ty) + bottom * ty);
}

bool ImageF::all_finite() const {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

ImageF extract_channels(const ImageF& img, int first, int count) {
    require(first >= 0 && first + count <= img.channels(), ErrorCode::InvalidArgument,
            "channel range out of bounds");
    ImageF out(img.width(), img.height(), count);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < count; ++c) out.at(x, y, c) = img.at(x, y, first + c);
    return out;
}

void require_same_shape(const ImageF& a, const ImageF& b, const char* what) {
    if (!a.same_shape(b))
        throw Error(ErrorCode::ShapeMismatch,
                    std::string(what) + ": shape mismatch " + std::to_string(a.width()) + "x" +
                        std::to_string(a.height()) + "x" + std::to_string(a.channels()) + " vs " +
                        std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                        std::to_string(b.channels()));
}

}  // namespace matforge
