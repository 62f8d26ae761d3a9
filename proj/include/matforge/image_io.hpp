// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "matforge/image.hpp"

namespace matforge {

enum class ImageFormat { PFM, PNG };

// Exact IEC 61966-2-1 transfer functions.
double srgb_to_linear(double v);
double linear_to_srgb(double v);

// PFM: 1 or 3 channel float data. Files are written little-endian (negative
// scale) with rows stored bottom-to-top as the format requires; both
// endiannesses are accepted on read. 2-channel images are padded to 3.
ImageF read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const ImageF& img);

// PNG: 8 or 16 bit, gray/gray-alpha/RGB/RGBA. Values are treated as sRGB
// encoded unless `linear` is set (used for masks and data maps); alpha is
// dropped on read.
ImageF read_png(const std::filesystem::path& path, bool linear = false);
void write_png(const std::filesystem::path& path, const ImageF& img, int bit_depth = 8, bool linear = false);

// Dispatches on extension (.pfm / .png).
ImageF read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const ImageF& img);
ImageFormat format_from_path(const std::filesystem::path& path);

// Reinhard x/(1+x), applied only on PNG export paths that request it.
ImageF reinhard(const ImageF& img);

}  // namespace matforge
