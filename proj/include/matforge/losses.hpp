// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "matforge/feature_stack.hpp"
#include "matforge/image.hpp"
#include "matforge/shading.hpp"

namespace matforge {

// Sum over tapped layers j of mean |phi_j(y_hat) - phi_j(y)|, each normalized
// by that layer's C*H*W. When `grad` is non-null it receives dLoss/dy_hat
// (subgradient 0 where features tie).
double perceptual_loss(const ImageF& y_hat, const ImageF& y, const FeatureStack& stack, ImageF* grad = nullptr);

// Perceptual loss on albedo plus perceptual loss on the packed (R, M, 0) map.
double material_loss(const ImageF& albedo_hat, const ImageF& albedo, const ImageF& rm_hat, const ImageF& rm,
                     const FeatureStack& stack);

// Renders both material sets with the same geometry, camera and light, and
// compares the renders perceptually. `grad` receives dLoss/dpred in the
// MaterialMaps layout when non-null.
double rerender_loss(const MaterialMaps& pred, const MaterialMaps& gt, const GBuffer& gbuf, const Camera& camera,
                     const PrefilteredEnv& pre, const FeatureStack& stack, MaterialMaps* grad = nullptr);

// Mean absolute difference over every sample.
double l1_loss(const ImageF& y_hat, const ImageF& y, ImageF* grad = nullptr);

struct AffineFit {
    double scale = 1.0;
    double shift = 0.0;
};
// Least-squares (s, t) minimizing sum (s*y_hat + t - y)^2 over all samples of
// all channels. Throws DegenerateFit when y_hat has variance below 1e-12.
AffineFit fit_scale_shift(const ImageF& y_hat, const ImageF& y);
double ssi_loss(const ImageF& y_hat, const ImageF& y);

inline constexpr double kPsnrCap = 99.0;
double mse(const ImageF& a, const ImageF& b);
// 10 log10(1 / MSE); 99 dB when MSE < 1e-10.
double psnr(const ImageF& y_hat, const ImageF& y);
// Mean local SSIM over valid 11x11 windows (Gaussian sigma 1.5, K1 0.01,
// K2 0.03, dynamic range 1), averaged over channels. Throws InvalidArgument
// for images smaller than the window.
double ssim(const ImageF& y_hat, const ImageF& y);
inline constexpr int kSsimWindow = 11;

// Seeded uniform draws over a list of environment maps.
class RelightSampler {
public:
    RelightSampler(std::vector<std::filesystem::path> env_paths, std::uint64_t seed);
    // All *.pfm files in `dir`, sorted by name. Throws EmptyInput if none.
    static RelightSampler from_directory(const std::filesystem::path& dir, std::uint64_t seed);

    std::size_t size() const noexcept { return paths_.size(); }
    const std::vector<std::filesystem::path>& paths() const noexcept { return paths_; }
    std::uint64_t draws() const noexcept { return draws_; }

    std::size_t next_index();
    const std::filesystem::path& next() { return paths_[next_index()]; }

private:
    std::vector<std::filesystem::path> paths_;
    std::mt19937_64 rng_;
    std::uint64_t draws_ = 0;
};

}  // namespace matforge
