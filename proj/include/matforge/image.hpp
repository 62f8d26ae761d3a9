// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "matforge/vec.hpp"

namespace matforge {

enum class ColorSpace { Linear, SRGB };

// Row-major interleaved float image, row 0 at the top.
class ImageF {
public:
    ImageF() = default;
    ImageF(int width, int height, int channels, float fill = 0.0f);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    ColorSpace color_space() const noexcept { return color_space_; }
    void set_color_space(ColorSpace cs) noexcept { color_space_ = cs; }

    float& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    float at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    std::size_t index(int x, int y, int c = 0) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    std::span<float> row(int y) { return {data_.data() + index(0, y), static_cast<std::size_t>(width_) * channels_}; }

    // First three channels as a vector; missing channels read as zero.
    Vec3 rgb(int x, int y) const;
    void set_rgb(int x, int y, const Vec3& v);

    // Bilinear lookup in pixel-center coordinates (pixel (i,j) centered at
    // (i+0.5, j+0.5)), clamped at the borders.
    float sample_bilinear(double px, double py, int c) const;

    bool same_shape(const ImageF& o) const noexcept {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }
    bool all_finite() const;
    friend bool operator==(const ImageF& a, const ImageF& b) {
        return a.same_shape(b) && a.data_ == b.data_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    ColorSpace color_space_ = ColorSpace::Linear;
    std::vector<float> data_;
};

// Copies a subset of channels into a new image.
ImageF extract_channels(const ImageF& img, int first, int count);

// Throws ShapeMismatch unless a and b share width, height and channel count.
void require_same_shape(const ImageF& a, const ImageF& b, const char* what);

}  // namespace matforge
