// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "matforge/error.hpp"

namespace matforge {

namespace {

constexpr long long kMaxDimension = 1 << 16;

void check_dimensions(long long w, long long h, const std::filesystem::path& path) {
    if (w <= 0 || h <= 0 || w > kMaxDimension || h > kMaxDimension)
        throw Error(ErrorCode::DimensionOverflow,
                    path.string() + ": unsupported dimensions " + std::to_string(w) + "x" + std::to_string(h));
}

std::uint32_t byteswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

}  // namespace

double srgb_to_linear(double v) {
    if (v <= 0.04045) return v / 12.92;
    return std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
    if (v <= 0.0031308) return v * 12.92;
    return 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

ImageF read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

    std::string magic;
    long long w = 0, h = 0;
    double scale = 0.0;
    in >> magic >> w >> h >> scale;
    if (!in || (magic != "PF" && magic != "Pf"))
        throw Error(ErrorCode::Parse, path.string() + ": not a PFM file");
    in.get();  // single whitespace byte before the raster
    check_dimensions(w, h, path);
    if (scale == 0.0) throw Error(ErrorCode::Parse, path.string() + ": zero PFM scale");

    const int channels = magic == "PF" ? 3 : 1;
    const bool file_little = scale < 0.0;
    const bool swap = file_little != (std::endian::native == std::endian::little);

    ImageF img(static_cast<int>(w), static_cast<int>(h), channels);
    std::vector<std::uint32_t> row(static_cast<std::size_t>(w) * channels);
    for (long long y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
        if (!in) throw Error(ErrorCode::Parse, path.string() + ": truncated PFM raster");
        auto dst = img.row(static_cast<int>(y));
        for (std::size_t i = 0; i < row.size(); ++i) {
            const std::uint32_t bits = swap ? byteswap32(row[i]) : row[i];
            dst[i] = std::bit_cast<float>(bits);
        }
    }
    return img;
}

void write_pfm(const std::filesystem::path& path, const ImageF& img) {
    require(!img.empty(), ErrorCode::InvalidArgument, "write_pfm: empty image");
    require(img.all_finite(), ErrorCode::NonFinite, path.string() + ": refusing to write non-finite samples");
    const int c = img.channels();
    require(c >= 1 && c <= 3, ErrorCode::UnsupportedFormat, "PFM supports 1-3 channels");
    const int out_c = c == 1 ? 1 : 3;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << (out_c == 3 ? "PF" : "Pf") << '\n' << img.width() << ' ' << img.height() << '\n' << "-1.0\n";

    std::vector<std::uint32_t> row(static_cast<std::size_t>(img.width()) * out_c, 0);
    for (int y = img.height() - 1; y >= 0; --y) {
        for (int x = 0; x < img.width(); ++x)
            for (int k = 0; k < out_c; ++k) {
                const float v = k < c ? img.at(x, y, k) : 0.0f;
                std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
                if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
                row[static_cast<std::size_t>(x) * out_c + k] = bits;
            }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    }
    if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_handler(png_structp, png_const_charp msg) {
    throw Error(ErrorCode::Parse, std::string("libpng: ") + msg);
}
void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

ImageF read_png(const std::filesystem::path& path, bool linear) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw Error(ErrorCode::Io, "cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp& p;
        png_infop& i;
        ~Guard() { png_destroy_read_struct(&p, &i, nullptr); }
    } guard{png, info};

    png_init_io(png, fp.get());
    png_read_info(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    check_dimensions(w, h, path);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (bit_depth != 8 && bit_depth != 16 && color_type != PNG_COLOR_TYPE_PALETTE &&
        color_type != PNG_COLOR_TYPE_GRAY)
        throw Error(ErrorCode::UnsupportedFormat,
                    path.string() + ": unsupported bit depth " + std::to_string(bit_depth));
    if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
    png_read_update_info(png, info);

    const int file_channels = png_get_channels(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color_channels = (file_channels == 1 || file_channels == 2) ? 1 : 3;
    const double max_code = depth == 16 ? 65535.0 : 255.0;

    std::vector<unsigned char> buffer(png_get_rowbytes(png, info) * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = buffer.data() + y * png_get_rowbytes(png, info);
    png_read_image(png, rows.data());

    ImageF img(static_cast<int>(w), static_cast<int>(h), color_channels);
    img.set_color_space(linear ? ColorSpace::Linear : ColorSpace::SRGB);
    for (png_uint_32 y = 0; y < h; ++y) {
        for (png_uint_32 x = 0; x < w; ++x) {
            for (int c = 0; c < color_channels; ++c) {
                const std::size_t k = static_cast<std::size_t>(x) * file_channels + c;
                double code;
                if (depth == 16) {
                    std::uint16_t v;
                    std::memcpy(&v, rows[y] + 2 * k, 2);
                    code = v;
                } else {
                    code = rows[y][k];
                }
                const double enc = code / max_code;
                img.at(static_cast<int>(x), static_cast<int>(y), c) =
                    static_cast<float>(linear ? enc : srgb_to_linear(enc));
            }
        }
    }
    img.set_color_space(ColorSpace::Linear);
    return img;
}

void write_png(const std::filesystem::path& path, const ImageF& img, int bit_depth, bool linear) {
    require(bit_depth == 8 || bit_depth == 16, ErrorCode::UnsupportedFormat,
            "unsupported PNG bit depth " + std::to_string(bit_depth));
    require(!img.empty(), ErrorCode::InvalidArgument, "write_png: empty image");
    require(img.all_finite(), ErrorCode::NonFinite, path.string() + ": refusing to write non-finite samples");

    const int c = img.channels();
    const int out_c = c == 1 ? 1 : 3;
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw Error(ErrorCode::Io, "cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp& p;
        png_infop& i;
        ~Guard() { png_destroy_write_struct(&p, &i); }
    } guard{png, info};

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width(), img.height(), bit_depth,
                 out_c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (!linear) png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
    // Fixed compression settings so identical images produce identical files.
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);

    const double max_code = bit_depth == 16 ? 65535.0 : 255.0;
    const std::size_t bytes = bit_depth / 8;
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width()) * out_c * bytes);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int k = 0; k < out_c; ++k) {
                const double v = std::clamp(static_cast<double>(k < c ? img.at(x, y, k) : 0.0f), 0.0, 1.0);
                const double enc = linear ? v : linear_to_srgb(v);
                const auto code = static_cast<std::uint16_t>(std::lround(enc * max_code));
                const std::size_t i = (static_cast<std::size_t>(x) * out_c + k) * bytes;
                if (bit_depth == 16)
                    std::memcpy(&row[i], &code, 2);
                else
                    row[i] = static_cast<unsigned char>(code);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
}

ImageFormat format_from_path(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".pfm") return ImageFormat::PFM;
    if (ext == ".png") return ImageFormat::PNG;
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": unknown image extension");
}

ImageF read_image(const std::filesystem::path& path) {
    return format_from_path(path) == ImageFormat::PFM ? read_pfm(path) : read_png(path);
}

void write_image(const std::filesystem::path& path, const ImageF& img) {
    if (format_from_path(path) == ImageFormat::PFM)
        write_pfm(path, img);
    else
        write_png(path, img);
}

ImageF reinhard(const ImageF& img) {
    ImageF out = img;
    for (float& v : out.data()) v = v / (1.0f + v);
    return out;
}

}  // namespace matforge
