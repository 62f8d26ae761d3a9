// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/losses.hpp"

#include <algorithm>
#include <cmath>

#include "matforge/error.hpp"

namespace matforge {

namespace {

double sign_of(double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); }

}  // namespace

double perceptual_loss(const ImageF& y_hat, const ImageF& y, const FeatureStack& stack, ImageF* grad) {
    require_same_shape(y_hat, y, "perceptual_loss");
    const auto act_hat = stack.forward(y_hat);
    const auto act = stack.forward(y);
    double total = 0.0;
    std::vector<FeatureMap> tap_grads;
    for (int tap : stack.taps()) {
        const FeatureMap& a = stack.tapped(act_hat, tap);
        const FeatureMap& b = stack.tapped(act, tap);
        const double n = static_cast<double>(a.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            sum += std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]));
        total += sum / n;
        if (grad) {
            FeatureMap g(a.channels, a.height, a.width);
            for (std::size_t i = 0; i < a.size(); ++i)
                g.data[i] = static_cast<float>(sign_of(static_cast<double>(a.data[i]) - b.data[i]) / n);
            tap_grads.push_back(std::move(g));
        }
    }
    if (grad) *grad = stack.backward(act_hat, tap_grads, y_hat.height(), y_hat.width());
    return total;
}

double material_loss(const ImageF& albedo_hat, const ImageF& albedo, const ImageF& rm_hat, const ImageF& rm,
                     const FeatureStack& stack) {
    return perceptual_loss(albedo_hat, albedo, stack) + perceptual_loss(rm_hat, rm, stack);
}

double rerender_loss(const MaterialMaps& pred, const MaterialMaps& gt, const GBuffer& gbuf, const Camera& camera,
                     const PrefilteredEnv& pre, const FeatureStack& stack, MaterialMaps* grad) {
    const ImageF render_pred = render_view(gbuf, pred, pre, camera);
    const ImageF render_gt = render_view(gbuf, gt, pre, camera);
    if (!grad) return perceptual_loss(render_pred, render_gt, stack);
    ImageF d_image;
    const double loss = perceptual_loss(render_pred, render_gt, stack, &d_image);
    *grad = render_view_vjp(gbuf, pred, pre, camera, d_image);
    return loss;
}

double l1_loss(const ImageF& y_hat, const ImageF& y, ImageF* grad) {
    require_same_shape(y_hat, y, "l1_loss");
    require(!y.empty(), ErrorCode::EmptyInput, "l1_loss: empty images");
    const auto a = y_hat.data();
    const auto b = y.data();
    const double n = static_cast<double>(a.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    if (grad) {
        *grad = ImageF(y.width(), y.height(), y.channels());
        auto g = grad->data();
        for (std::size_t i = 0; i < a.size(); ++i)
            g[i] = static_cast<float>(sign_of(static_cast<double>(a[i]) - b[i]) / n);
    }
    return sum / n;
}

AffineFit fit_scale_shift(const ImageF& y_hat, const ImageF& y) {
    require_same_shape(y_hat, y, "ssi_loss");
    require(!y.empty(), ErrorCode::EmptyInput, "ssi_loss: empty images");
    const auto a = y_hat.data();
    const auto b = y.data();
    const double n = static_cast<double>(a.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= n;
    mean_b /= n;
    double var = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        var += da * da;
        cov += da * (b[i] - mean_b);
    }
    var /= n;
    cov /= n;
    if (var < 1e-12) throw Error(ErrorCode::DegenerateFit, "ssi_loss: prediction has (near) zero variance");
    AffineFit fit;
    fit.scale = cov / var;
    fit.shift = mean_b - fit.scale * mean_a;
    return fit;
}

double ssi_loss(const ImageF& y_hat, const ImageF& y) {
    const AffineFit fit = fit_scale_shift(y_hat, y);
    const auto a = y_hat.data();
    const auto b = y.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(fit.scale * a[i] + fit.shift - b[i]);
    return sum / static_cast<double>(a.size());
}

double mse(const ImageF& a, const ImageF& b) {
    require_same_shape(a, b, "mse");
    require(!a.empty(), ErrorCode::EmptyInput, "mse: empty images");
    const auto x = a.data();
    const auto y = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(x.size());
}

double psnr(const ImageF& y_hat, const ImageF& y) {
    const double e = mse(y_hat, y);
    if (e < 1e-10) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / e));
}

namespace {

std::vector<double> gaussian_window() {
    std::vector<double> w(kSsimWindow);
    const double sigma = 1.5;
    const int r = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - r;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable valid-mode filter of a single-channel double plane.
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h, const std::vector<double>& k) {
    const int K = static_cast<int>(k.size());
    const int ow = w - K + 1, oh = h - K + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < K; ++i) s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < K; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

}  // namespace

double ssim(const ImageF& y_hat, const ImageF& y) {
    require_same_shape(y_hat, y, "ssim");
    require(y.width() >= kSsimWindow && y.height() >= kSsimWindow, ErrorCode::InvalidArgument,
            "ssim: images must be at least 11x11");
    const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
    const auto k = gaussian_window();
    const int W = y.width(), H = y.height(), C = y.channels();
    const std::size_t n = static_cast<std::size_t>(W) * H;
    double total = 0.0;
    for (int c = 0; c < C; ++c) {
        std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
        for (int py = 0; py < H; ++py)
            for (int px = 0; px < W; ++px) {
                const std::size_t i = static_cast<std::size_t>(py) * W + px;
                a[i] = y_hat.at(px, py, c);
                b[i] = y.at(px, py, c);
                aa[i] = a[i] * a[i];
                bb[i] = b[i] * b[i];
                ab[i] = a[i] * b[i];
            }
        const auto mu_a = filter_valid(a, W, H, k);
        const auto mu_b = filter_valid(b, W, H, k);
        const auto s_aa = filter_valid(aa, W, H, k);
        const auto s_bb = filter_valid(bb, W, H, k);
        const auto s_ab = filter_valid(ab, W, H, k);
        double sum = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = s_aa[i] - mu_a[i] * mu_a[i];
            const double vb = s_bb[i] - mu_b[i] * mu_b[i];
            const double cab = s_ab[i] - mu_a[i] * mu_b[i];
            sum += ((2.0 * mu_a[i] * mu_b[i] + C1) * (2.0 * cab + C2)) /
                   ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + C1) * (va + vb + C2));
        }
        total += sum / static_cast<double>(mu_a.size());
    }
    return total / C;
}

RelightSampler::RelightSampler(std::vector<std::filesystem::path> env_paths, std::uint64_t seed)
    : paths_(std::move(env_paths)), rng_(seed) {
    require(!paths_.empty(), ErrorCode::EmptyInput, "relight sampler needs at least one environment");
}

RelightSampler RelightSampler::from_directory(const std::filesystem::path& dir, std::uint64_t seed) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pfm") paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw Error(ErrorCode::EmptyInput, "no .pfm environments in " + dir.string());
    return RelightSampler(std::move(paths), seed);
}

std::size_t RelightSampler::next_index() {
    ++draws_;
    return static_cast<std::size_t>(rng_() % paths_.size());
}

}  // namespace matforge
