// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cmath>
#include <string>

#include "matforge/error.hpp"
#include "matforge/losses.hpp"
#include "matforge/parallel.hpp"
#include "matforge/pipeline.hpp"

namespace matforge {

RecoverLoss parse_recover_loss(std::string_view s) {
    if (s == "l1") return RecoverLoss::L1;
    if (s == "perceptual") return RecoverLoss::Perceptual;
    if (s == "rerender-composite") return RecoverLoss::RerenderComposite;
    throw Error(ErrorCode::InvalidArgument, "unknown loss kind '" + std::string(s) + "'");
}

std::string_view to_string(RecoverLoss l) {
    switch (l) {
        case RecoverLoss::L1: return "l1";
        case RecoverLoss::Perceptual: return "perceptual";
        case RecoverLoss::RerenderComposite: return "rerender-composite";
    }
    return "?";
}

void RecoverConfig::validate() const {
    require(max_iterations >= 0, ErrorCode::InvalidArgument, "iteration cap must be non-negative");
    require(step_size > 0.0 && std::isfinite(step_size), ErrorCode::InvalidArgument, "step size must be positive");
    require(n_lights >= 1, ErrorCode::InvalidArgument, "need at least one lighting condition");
    require(tolerance >= 0.0, ErrorCode::InvalidArgument, "tolerance must be non-negative");
}

namespace {

constexpr int kParams = 5;  // albedo rgb, metallic, roughness

// Residual of `target` after projecting out span(others), relative to |target|.
double relative_residual(const std::vector<std::vector<double>>& cols, int target) {
    const std::size_t rows = cols[target].size();
    std::vector<std::vector<double>> basis;
    double scale = 0.0;
    for (const auto& c : cols)
        for (double v : c) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    for (int k = 0; k < static_cast<int>(cols.size()); ++k) {
        if (k == target) continue;
        std::vector<double> v = cols[k];
        for (const auto& b : basis) {
            double d = 0.0;
            for (std::size_t i = 0; i < rows; ++i) d += v[i] * b[i];
            for (std::size_t i = 0; i < rows; ++i) v[i] -= d * b[i];
        }
        double n = 0.0;
        for (double x : v) n += x * x;
        n = std::sqrt(n);
        if (n <= 1e-10 * scale) continue;
        for (double& x : v) x /= n;
        basis.push_back(std::move(v));
    }
    std::vector<double> t = cols[target];
    double norm0 = 0.0;
    for (double x : t) norm0 += x * x;
    norm0 = std::sqrt(norm0);
    if (norm0 <= 1e-10 * scale) return 0.0;
    // Two passes keep the projection accurate when the basis is ill-conditioned.
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) {
            double d = 0.0;
            for (std::size_t i = 0; i < rows; ++i) d += t[i] * b[i];
            for (std::size_t i = 0; i < rows; ++i) t[i] -= d * b[i];
        }
    double n = 0.0;
    for (double x : t) n += x * x;
    return std::sqrt(n) / norm0;
}

constexpr double kSpanTolerance = 1e-4;

}  // namespace

std::vector<std::string> non_identifiable_parameters(const MaterialSample& s, const Vec3& n, const Vec3& to_eye,
                                                     std::span<const PrefilteredEnv* const> lights) {
    std::vector<std::vector<double>> cols(kParams);
    for (const PrefilteredEnv* pre : lights) {
        const ShadeGrad g = shade_grad_dir(s, n, to_eye, *pre);
        for (int k = 0; k < 3; ++k) {
            for (int a = 0; a < 3; ++a) cols[a].push_back(a == k ? g.d_albedo[k] : 0.0);
            cols[3].push_back(g.d_metallic[k]);
            cols[4].push_back(g.d_roughness[k]);
        }
    }
    std::vector<std::string> out;
    bool albedo_dep = false;
    for (int a = 0; a < 3; ++a) albedo_dep = albedo_dep || relative_residual(cols, a) < kSpanTolerance;
    if (albedo_dep) out.push_back("albedo");
    if (relative_residual(cols, 3) < kSpanTolerance) out.push_back("metallic");
    if (relative_residual(cols, 4) < kSpanTolerance) out.push_back("roughness");
    return out;
}

RecoverStats recover_materials(MaterialMaps& materials, const GBuffer& gbuf, const Camera& camera,
                               std::span<const PrefilteredEnv* const> lights, std::span<const ImageF> observed,
                               const RecoverConfig& config, const FeatureStack* stack) {
    config.validate();
    require(!lights.empty(), ErrorCode::EmptyInput, "recover: no lights");
    require(lights.size() == observed.size(), ErrorCode::ShapeMismatch, "recover: one observation per light expected");
    const std::size_t n_lights = std::min<std::size_t>(config.n_lights, lights.size());
    const bool needs_stack = config.loss != RecoverLoss::L1;
    const FeatureStack fallback = FeatureStack::random();
    const FeatureStack& fs = stack ? *stack : fallback;
    const int W = gbuf.width(), H = gbuf.height();
    for (std::size_t l = 0; l < n_lights; ++l)
        require(observed[l].width() == W && observed[l].height() == H && observed[l].channels() == 3,
                ErrorCode::ShapeMismatch, "recover: observation does not match the G-buffer");

    const auto evaluate = [&](MaterialMaps* grad) {
        double loss = 0.0;
        if (grad) *grad = MaterialMaps{ImageF(W, H, 3), ImageF(W, H, 3)};
        for (std::size_t l = 0; l < n_lights; ++l) {
            const ImageF render = render_view(gbuf, materials, *lights[l], camera);
            ImageF d_image(W, H, 3);
            if (config.loss != RecoverLoss::Perceptual) {
                ImageF g;
                loss += l1_loss(render, observed[l], grad ? &g : nullptr);
                if (grad) d_image = g;
            }
            if (needs_stack) {
                ImageF g;
                loss += perceptual_loss(render, observed[l], fs, grad ? &g : nullptr);
                if (grad)
                    for (std::size_t i = 0; i < g.size(); ++i) d_image.data()[i] += g.data()[i];
            }
            if (grad) {
                const MaterialMaps part = render_view_vjp(gbuf, materials, *lights[l], camera, d_image);
                for (std::size_t i = 0; i < part.albedo.size(); ++i) {
                    grad->albedo.data()[i] += part.albedo.data()[i];
                    grad->rm.data()[i] += part.rm.data()[i];
                }
            }
        }
        if (!std::isfinite(loss)) throw Error(ErrorCode::NonFinite, "recover: loss became non-finite");
        return loss;
    };

    RecoverStats stats;
    stats.initial_loss = evaluate(nullptr);
    stats.final_loss = stats.initial_loss;

    const std::size_t n_px = static_cast<std::size_t>(W) * H;
    std::vector<std::array<double, kParams>> m1(n_px, std::array<double, kParams>{}), m2 = m1;
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-12;
    double prev = stats.initial_loss;
    int quiet = 0;
    for (int it = 0; it < config.max_iterations; ++it) {
        MaterialMaps grad;
        evaluate(&grad);
        const double decay = 0.01 + 0.99 * 0.5 * (1.0 + std::cos(kPi * it / config.max_iterations));
        const double lr = config.step_size * decay;
        const double bc1 = 1.0 - std::pow(beta1, it + 1), bc2 = 1.0 - std::pow(beta2, it + 1);
        parallel_for(0, static_cast<std::size_t>(H), [&](std::size_t row) {
            const int y = static_cast<int>(row);
            for (int x = 0; x < W; ++x) {
                if (!gbuf.covered(x, y)) continue;
                const std::size_t p = static_cast<std::size_t>(y) * W + x;
                float* slots[kParams] = {&materials.albedo.at(x, y, 0), &materials.albedo.at(x, y, 1),
                                         &materials.albedo.at(x, y, 2), &materials.rm.at(x, y, 1),
                                         &materials.rm.at(x, y, 0)};
                const double g[kParams] = {grad.albedo.at(x, y, 0), grad.albedo.at(x, y, 1), grad.albedo.at(x, y, 2),
                                           grad.rm.at(x, y, 1), grad.rm.at(x, y, 0)};
                for (int k = 0; k < kParams; ++k) {
                    m1[p][k] = beta1 * m1[p][k] + (1 - beta1) * g[k];
                    m2[p][k] = beta2 * m2[p][k] + (1 - beta2) * g[k] * g[k];
                    const double step = lr * (m1[p][k] / bc1) / (std::sqrt(m2[p][k] / bc2) + adam_eps);
                    *slots[k] = static_cast<float>(std::clamp(*slots[k] - step, 0.0, 1.0));
                }
            }
        });
        stats.iterations = it + 1;
        const double loss = evaluate(nullptr);
        stats.final_loss = loss;
        quiet = std::abs(prev - loss) < config.tolerance ? quiet + 1 : 0;
        prev = loss;
        if (quiet >= 20) break;
    }

    // Identifiability is judged at the estimate, pixel by pixel.
    std::size_t counted = 0, albedo = 0, metallic = 0, roughness = 0;
    const std::span<const PrefilteredEnv* const> used = lights.subspan(0, n_lights);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (!gbuf.covered(x, y)) continue;
            ++counted;
            const Vec3 p = gbuf.position.rgb(x, y);
            for (const std::string& name :
                 non_identifiable_parameters(materials.sample(x, y), gbuf.normal.rgb(x, y), camera.to_eye(p), used)) {
                albedo += name == "albedo";
                metallic += name == "metallic";
                roughness += name == "roughness";
            }
        }
    if (counted > 0) {
        if (2 * albedo > counted) stats.non_identifiable.push_back("albedo");
        if (2 * metallic > counted) stats.non_identifiable.push_back("metallic");
        if (2 * roughness > counted) stats.non_identifiable.push_back("roughness");
    }
    return stats;
}

GradientDecomposer::GradientDecomposer(std::vector<const PrefilteredEnv*> lights, RecoverConfig config,
                                       const FeatureStack* stack)
    : lights_(std::move(lights)), config_(std::move(config)), stack_(stack) {
    require(!lights_.empty(), ErrorCode::EmptyInput, "gradient decomposer needs at least one light");
    config_.validate();
}

std::vector<MaterialMaps> GradientDecomposer::decompose(std::span<const ViewInput> views) {
    std::vector<MaterialMaps> out;
    stats_.clear();
    for (const ViewInput& v : views) {
        const GBuffer& g = *v.gbuf;
        MaterialMaps m{ImageF(g.width(), g.height(), 3), ImageF(g.width(), g.height(), 3)};
        for (int y = 0; y < g.height(); ++y)
            for (int x = 0; x < g.width(); ++x)
                if (g.covered(x, y)) m.set(x, y, config_.init);
        require(v.observed.size() == lights_.size(), ErrorCode::ShapeMismatch,
                "gradient decomposer: one observation per light expected");
        stats_.push_back(recover_materials(m, g, *v.camera, lights_, v.observed, config_, stack_));
        out.push_back(std::move(m));
    }
    return out;
}

nlohmann::json GradientDecomposer::diagnostics() const {
    nlohmann::json views = nlohmann::json::array();
    for (const RecoverStats& s : stats_)
        views.push_back({{"iterations", s.iterations},
                         {"initial_loss", s.initial_loss},
                         {"final_loss", s.final_loss},
                         {"non_identifiable", s.non_identifiable}});
    return {{"loss", std::string(to_string(config_.loss))}, {"lights", lights_.size()}, {"views", views}};
}

}  // namespace matforge
