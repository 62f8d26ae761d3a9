// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "matforge/image.hpp"

namespace matforge {

// Channel-interleaved activation tensor (same layout as ImageF, any channel count).
struct FeatureMap {
    int channels = 0, height = 0, width = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w) : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0.0f) {}
    static FeatureMap from_image(const ImageF& img);

    float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    float at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    std::size_t size() const { return data.size(); }
};

struct ConvLayer {
    int out_channels = 0, in_channels = 0;
    int kernel_h = 1, kernel_w = 1;
    int stride = 1, pad = 0;
    bool relu = false;
    std::vector<float> weights;  // [out][in][kh][kw]
    std::vector<float> bias;     // [out]

    float weight(int o, int i, int ky, int kx) const {
        return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) * kernel_w + kx];
    }
    int out_height(int in_h) const { return (in_h + 2 * pad - kernel_h) / stride + 1; }
    int out_width(int in_w) const { return (in_w + 2 * pad - kernel_w) / stride + 1; }
};

// Sequential convolution stack with tapped layers. Tap indices are 1-based
// layer numbers, and taps read post-activation features unless
// `taps_pre_activation` is set.
class FeatureStack {
public:
    FeatureStack(std::vector<ConvLayer> layers, std::vector<int> taps, bool taps_pre_activation = false);

    // Single 1x1 identity layer, no nonlinearity, tap {1}.
    static FeatureStack identity(int channels = 3);
    // Fixed seeded 8-layer random-filter stack with ReLU, taps {2,4,6,8}.
    static FeatureStack random(std::uint64_t seed = 0x5eed, int in_channels = 3);
    // Random stack with caller-chosen depth; used for tests.
    static FeatureStack random_layers(std::uint64_t seed, int in_channels, int n_layers, bool relu);

    const std::vector<ConvLayer>& layers() const noexcept { return layers_; }
    const std::vector<int>& taps() const noexcept { return taps_; }
    bool taps_pre_activation() const noexcept { return taps_pre_activation_; }
    int input_channels() const { return layers_.front().in_channels; }

    // Throws ShapeMismatch when the image does not fit the first layer or a
    // layer would produce an empty map.
    void check_input(int channels, int height, int width) const;

    struct Activations {
        std::vector<FeatureMap> pre;   // layer outputs before the nonlinearity
        std::vector<FeatureMap> post;  // after (aliases pre for linear layers)
    };
    Activations forward(const ImageF& img) const;
    const FeatureMap& tapped(const Activations& act, int tap) const {
        return taps_pre_activation_ ? act.pre[tap - 1] : act.post[tap - 1];
    }

    // Gradient w.r.t. the input image given gradients at each tapped layer
    // (indexed like taps()).
    ImageF backward(const Activations& act, const std::vector<FeatureMap>& tap_grads, int in_height, int in_width) const;

private:
    std::vector<ConvLayer> layers_;
    std::vector<int> taps_;
    bool taps_pre_activation_;
};

// Little-endian "FSTK" weight file: magic, u32 layer count, then per layer
// i32 C_out, C_in, kH, kW, stride, pad, nonlinearity flag, f32 weights, f32 bias.
// Default taps for 16-layer files are {4, 8, 12, 16}; otherwise the last layer.
FeatureStack load_feature_stack(const std::filesystem::path& path, std::vector<int> taps = {});
void save_feature_stack(const std::filesystem::path& path, const FeatureStack& stack);

}  // namespace matforge
