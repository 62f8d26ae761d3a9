// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/feature_stack.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "matforge/error.hpp"
#include "matforge/parallel.hpp"

namespace matforge {

FeatureMap FeatureMap::from_image(const ImageF& img) {
    FeatureMap f(img.channels(), img.height(), img.width());
    std::copy(img.data().begin(), img.data().end(), f.data.begin());
    return f;
}

FeatureStack::FeatureStack(std::vector<ConvLayer> layers, std::vector<int> taps, bool taps_pre_activation)
    : layers_(std::move(layers)), taps_(std::move(taps)), taps_pre_activation_(taps_pre_activation) {
    require(!layers_.empty(), ErrorCode::InvalidArgument, "feature stack needs at least one layer");
    require(!taps_.empty(), ErrorCode::InvalidArgument, "feature stack needs at least one tap");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const ConvLayer& L = layers_[l];
        require(L.out_channels > 0 && L.in_channels > 0 && L.kernel_h > 0 && L.kernel_w > 0 && L.stride > 0 &&
                    L.pad >= 0,
                ErrorCode::InvalidArgument, "layer " + std::to_string(l + 1) + ": invalid geometry");
        require(L.weights.size() == static_cast<std::size_t>(L.out_channels) * L.in_channels * L.kernel_h * L.kernel_w &&
                    L.bias.size() == static_cast<std::size_t>(L.out_channels),
                ErrorCode::InvalidArgument, "layer " + std::to_string(l + 1) + ": weight count mismatch");
        for (float w : L.weights) require(std::isfinite(w), ErrorCode::NonFinite, "non-finite weight");
        for (float b : L.bias) require(std::isfinite(b), ErrorCode::NonFinite, "non-finite bias");
        if (l > 0)
            require(L.in_channels == layers_[l - 1].out_channels, ErrorCode::ShapeMismatch,
                    "layer " + std::to_string(l + 1) + ": input channels do not match previous layer");
    }
    for (int t : taps_)
        require(t >= 1 && t <= static_cast<int>(layers_.size()), ErrorCode::InvalidArgument,
                "tap index " + std::to_string(t) + " out of range");
}

FeatureStack FeatureStack::identity(int channels) {
    ConvLayer L;
    L.out_channels = L.in_channels = channels;
    L.weights.assign(static_cast<std::size_t>(channels) * channels, 0.0f);
    for (int c = 0; c < channels; ++c) L.weights[static_cast<std::size_t>(c) * channels + c] = 1.0f;
    L.bias.assign(channels, 0.0f);
    return FeatureStack({L}, {1});
}

namespace {

// Explicit mapping from the 64-bit engine output keeps weights identical
// across standard library implementations.
float uniform_symmetric(std::mt19937_64& rng, double bound) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return static_cast<float>((2.0 * u - 1.0) * bound);
}

ConvLayer random_layer(std::mt19937_64& rng, int in, int out, int stride, bool relu) {
    ConvLayer L;
    L.in_channels = in;
    L.out_channels = out;
    L.kernel_h = L.kernel_w = 3;
    L.pad = 1;
    L.stride = stride;
    L.relu = relu;
    const double bound = std::sqrt(6.0 / (in * 9.0));
    L.weights.resize(static_cast<std::size_t>(out) * in * 9);
    for (float& w : L.weights) w = uniform_symmetric(rng, bound);
    L.bias.resize(out);
    for (float& b : L.bias) b = uniform_symmetric(rng, 0.05);
    return L;
}

}  // namespace

FeatureStack FeatureStack::random(std::uint64_t seed, int in_channels) {
    std::mt19937_64 rng(seed);
    const int widths[8] = {16, 16, 32, 32, 32, 32, 48, 48};
    const int strides[8] = {1, 1, 2, 1, 2, 1, 2, 1};
    std::vector<ConvLayer> layers;
    int in = in_channels;
    for (int l = 0; l < 8; ++l) {
        layers.push_back(random_layer(rng, in, widths[l], strides[l], true));
        in = widths[l];
    }
    return FeatureStack(std::move(layers), {2, 4, 6, 8});
}

FeatureStack FeatureStack::random_layers(std::uint64_t seed, int in_channels, int n_layers, bool relu) {
    std::mt19937_64 rng(seed);
    std::vector<ConvLayer> layers;
    std::vector<int> taps;
    int in = in_channels;
    for (int l = 0; l < n_layers; ++l) {
        const int out = 4 + 2 * l;
        layers.push_back(random_layer(rng, in, out, l % 2 == 1 ? 2 : 1, relu));
        taps.push_back(l + 1);
        in = out;
    }
    return FeatureStack(std::move(layers), std::move(taps));
}

void FeatureStack::check_input(int channels, int height, int width) const {
    require(channels == input_channels(), ErrorCode::ShapeMismatch,
            "feature stack expects " + std::to_string(input_channels()) + " channels, got " + std::to_string(channels));
    int h = height, w = width;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        h = layers_[l].out_height(h);
        w = layers_[l].out_width(w);
        require(h >= 1 && w >= 1, ErrorCode::ShapeMismatch,
                "input " + std::to_string(width) + "x" + std::to_string(height) + " too small for layer " +
                    std::to_string(l + 1));
    }
}

namespace {

FeatureMap conv_forward(const ConvLayer& L, const FeatureMap& in) {
    const int OH = L.out_height(in.height), OW = L.out_width(in.width);
    FeatureMap out(L.out_channels, OH, OW);
    parallel_for(0, static_cast<std::size_t>(L.out_channels), [&](std::size_t oc) {
        const int o = static_cast<int>(oc);
        for (int oy = 0; oy < OH; ++oy) {
            for (int ox = 0; ox < OW; ++ox) {
                double acc = L.bias[o];
                for (int ky = 0; ky < L.kernel_h; ++ky) {
                    const int iy = oy * L.stride - L.pad + ky;
                    if (iy < 0 || iy >= in.height) continue;
                    for (int kx = 0; kx < L.kernel_w; ++kx) {
                        const int ix = ox * L.stride - L.pad + kx;
                        if (ix < 0 || ix >= in.width) continue;
                        for (int i = 0; i < L.in_channels; ++i)
                            acc += static_cast<double>(L.weight(o, i, ky, kx)) * in.at(ix, iy, i);
                    }
                }
                out.at(ox, oy, o) = static_cast<float>(acc);
            }
        }
    });
    return out;
}

// Gradient w.r.t. the layer input given the gradient w.r.t. its
// pre-activation output.
FeatureMap conv_backward(const ConvLayer& L, const FeatureMap& grad_out, int in_h, int in_w) {
    FeatureMap grad_in(L.in_channels, in_h, in_w);
    std::vector<double> acc(grad_in.size(), 0.0);
    for (int oy = 0; oy < grad_out.height; ++oy)
        for (int ox = 0; ox < grad_out.width; ++ox)
            for (int o = 0; o < L.out_channels; ++o) {
                const double g = grad_out.at(ox, oy, o);
                if (g == 0.0) continue;
                for (int ky = 0; ky < L.kernel_h; ++ky) {
                    const int iy = oy * L.stride - L.pad + ky;
                    if (iy < 0 || iy >= in_h) continue;
                    for (int kx = 0; kx < L.kernel_w; ++kx) {
                        const int ix = ox * L.stride - L.pad + kx;
                        if (ix < 0 || ix >= in_w) continue;
                        for (int i = 0; i < L.in_channels; ++i)
                            acc[(static_cast<std::size_t>(iy) * in_w + ix) * L.in_channels + i] += g * L.weight(o, i, ky, kx);
                    }
                }
            }
    for (std::size_t k = 0; k < acc.size(); ++k) grad_in.data[k] = static_cast<float>(acc[k]);
    return grad_in;
}

}  // namespace

FeatureStack::Activations FeatureStack::forward(const ImageF& img) const {
    check_input(img.channels(), img.height(), img.width());
    Activations act;
    FeatureMap x = FeatureMap::from_image(img);
    for (const ConvLayer& L : layers_) {
        FeatureMap pre = conv_forward(L, x);
        FeatureMap post = pre;
        if (L.relu)
            for (float& v : post.data) v = std::max(v, 0.0f);
        act.pre.push_back(std::move(pre));
        act.post.push_back(post);
        x = std::move(post);
    }
    return act;
}

ImageF FeatureStack::backward(const Activations& act, const std::vector<FeatureMap>& tap_grads, int in_height,
                              int in_width) const {
    require(tap_grads.size() == taps_.size(), ErrorCode::InvalidArgument, "one gradient per tap expected");
    int deepest = 0;
    for (int t : taps_) deepest = std::max(deepest, t);

    FeatureMap grad;  // w.r.t. post-activation output of the current layer
    for (int l = deepest; l >= 1; --l) {
        const ConvLayer& L = layers_[l - 1];
        const FeatureMap& pre = act.pre[l - 1];
        if (grad.data.empty()) grad = FeatureMap(pre.channels, pre.height, pre.width);
        FeatureMap grad_pre = grad;
        // Post-activation taps join before the ReLU mask, pre-activation taps after.
        for (std::size_t k = 0; k < taps_.size(); ++k)
            if (taps_[k] == l && !taps_pre_activation_)
                for (std::size_t i = 0; i < grad_pre.size(); ++i) grad_pre.data[i] += tap_grads[k].data[i];
        if (L.relu)
            for (std::size_t i = 0; i < grad_pre.size(); ++i)
                if (!(pre.data[i] > 0.0f)) grad_pre.data[i] = 0.0f;
        for (std::size_t k = 0; k < taps_.size(); ++k)
            if (taps_[k] == l && taps_pre_activation_)
                for (std::size_t i = 0; i < grad_pre.size(); ++i) grad_pre.data[i] += tap_grads[k].data[i];
        const int ih = l >= 2 ? act.pre[l - 2].height : in_height;
        const int iw = l >= 2 ? act.pre[l - 2].width : in_width;
        grad = conv_backward(L, grad_pre, ih, iw);
    }
    ImageF out(in_width, in_height, grad.channels);
    std::copy(grad.data.begin(), grad.data.end(), out.data().begin());
    return out;
}

namespace {

void put_i32(std::ofstream& out, std::int32_t v) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(v);
    unsigned char b[4] = {static_cast<unsigned char>(u), static_cast<unsigned char>(u >> 8),
                          static_cast<unsigned char>(u >> 16), static_cast<unsigned char>(u >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ofstream& out, float v) { put_i32(out, std::bit_cast<std::int32_t>(v)); }

std::int32_t get_i32(std::ifstream& in, const std::filesystem::path& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw Error(ErrorCode::Parse, path.string() + ": truncated FSTK file");
    const std::uint32_t u = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return std::bit_cast<std::int32_t>(u);
}

}  // namespace

FeatureStack load_feature_stack(const std::filesystem::path& path, std::vector<int> taps) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FSTK", 4) != 0) throw Error(ErrorCode::Parse, path.string() + ": bad FSTK magic");
    const std::int32_t count = get_i32(in, path);
    if (count <= 0 || count > 4096) throw Error(ErrorCode::Parse, path.string() + ": bad layer count");
    std::vector<ConvLayer> layers;
    for (int l = 0; l < count; ++l) {
        ConvLayer L;
        L.out_channels = get_i32(in, path);
        L.in_channels = get_i32(in, path);
        L.kernel_h = get_i32(in, path);
        L.kernel_w = get_i32(in, path);
        L.stride = get_i32(in, path);
        L.pad = get_i32(in, path);
        L.relu = get_i32(in, path) != 0;
        const long long n = static_cast<long long>(L.out_channels) * L.in_channels * L.kernel_h * L.kernel_w;
        if (L.out_channels <= 0 || L.in_channels <= 0 || L.kernel_h <= 0 || L.kernel_w <= 0 || n > (1LL << 28))
            throw Error(ErrorCode::Parse, path.string() + ": bad layer " + std::to_string(l + 1) + " header");
        L.weights.resize(static_cast<std::size_t>(n));
        for (float& w : L.weights) w = std::bit_cast<float>(get_i32(in, path));
        L.bias.resize(L.out_channels);
        for (float& b : L.bias) b = std::bit_cast<float>(get_i32(in, path));
        layers.push_back(std::move(L));
    }
    if (taps.empty()) {
        if (count >= 16)
            taps = {4, 8, 12, 16};
        else
            taps = {count};
    }
    return FeatureStack(std::move(layers), std::move(taps));
}

void save_feature_stack(const std::filesystem::path& path, const FeatureStack& stack) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write("FSTK", 4);
    put_i32(out, static_cast<std::int32_t>(stack.layers().size()));
    for (const ConvLayer& L : stack.layers()) {
        for (int v : {L.out_channels, L.in_channels, L.kernel_h, L.kernel_w, L.stride, L.pad, L.relu ? 1 : 0})
            put_i32(out, v);
        for (float w : L.weights) put_f32(out, w);
        for (float b : L.bias) put_f32(out, b);
    }
    if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

}  // namespace matforge
