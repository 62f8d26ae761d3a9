// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "matforge/scheduler.hpp"

#include <cmath>
#include <string>

#include "matforge/error.hpp"

namespace matforge {

BetaSchedule parse_beta_schedule(std::string_view s) {
    if (s == "linear") return BetaSchedule::Linear;
    if (s == "scaled_linear" || s == "scaled-linear") return BetaSchedule::ScaledLinear;
    throw Error(ErrorCode::InvalidArgument, "unknown beta schedule '" + std::string(s) + "'");
}

Spacing parse_spacing(std::string_view s) {
    if (s == "leading") return Spacing::Leading;
    if (s == "trailing") return Spacing::Trailing;
    throw Error(ErrorCode::InvalidArgument, "unknown timestep spacing '" + std::string(s) + "'");
}

PredictionKind parse_prediction_kind(std::string_view s) {
    if (s == "epsilon") return PredictionKind::Epsilon;
    if (s == "v" || s == "v_prediction") return PredictionKind::V;
    if (s == "sample" || s == "x0") return PredictionKind::Sample;
    throw Error(ErrorCode::InvalidArgument, "unknown prediction kind '" + std::string(s) + "'");
}

std::string_view to_string(Spacing s) { return s == Spacing::Leading ? "leading" : "trailing"; }

std::string_view to_string(PredictionKind k) {
    switch (k) {
        case PredictionKind::Epsilon: return "epsilon";
        case PredictionKind::V: return "v";
        case PredictionKind::Sample: return "sample";
    }
    return "?";
}

NoiseSchedule::NoiseSchedule(int train_steps, double beta_start, double beta_end, BetaSchedule kind) {
    require(train_steps >= 2, ErrorCode::InvalidArgument, "schedule needs at least 2 training steps");
    require(beta_start > 0.0 && beta_end < 1.0 && beta_start < beta_end, ErrorCode::InvalidArgument,
            "betas must satisfy 0 < beta_start < beta_end < 1");
    betas_.resize(train_steps);
    alphas_cumprod_.resize(train_steps);
    const double denom = train_steps - 1;
    double prod = 1.0;
    for (int t = 0; t < train_steps; ++t) {
        const double f = t / denom;
        double beta;
        if (kind == BetaSchedule::Linear) {
            beta = beta_start + f * (beta_end - beta_start);
        } else {
            const double s = std::sqrt(beta_start) + f * (std::sqrt(beta_end) - std::sqrt(beta_start));
            beta = s * s;
        }
        betas_[t] = beta;
        prod *= 1.0 - beta;
        alphas_cumprod_[t] = prod;
    }
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t == -1) return 1.0;
    require(t >= 0 && t < train_steps(), ErrorCode::InvalidArgument, "timestep " + std::to_string(t) + " out of range");
    return alphas_cumprod_[t];
}

std::vector<int> make_timesteps(int train_steps, int inference_steps, Spacing spacing, int steps_offset) {
    require(train_steps >= 1, ErrorCode::InvalidArgument, "training step count must be positive");
    require(inference_steps >= 1 && inference_steps <= train_steps, ErrorCode::InvalidArgument,
            "inference steps must lie in [1, " + std::to_string(train_steps) + "]");
    std::vector<int> out(inference_steps);
    if (spacing == Spacing::Leading) {
        const int ratio = train_steps / inference_steps;
        for (int i = 0; i < inference_steps; ++i) out[i] = (inference_steps - 1 - i) * ratio + steps_offset;
    } else {
        const double ratio = static_cast<double>(train_steps) / inference_steps;
        for (int i = 0; i < inference_steps; ++i)
            out[i] = static_cast<int>(std::nearbyint(train_steps - i * ratio)) - 1;
    }
    for (int t : out)
        require(t >= 0 && t < train_steps, ErrorCode::InvalidArgument,
                "steps_offset pushes timestep " + std::to_string(t) + " out of range");
    return out;
}

namespace {

void require_same_size(const Latent& a, const Latent& b, const char* what) {
    require(a.size() == b.size(), ErrorCode::ShapeMismatch, std::string(what) + ": latent size mismatch");
}

}  // namespace

Prediction convert_prediction(const Latent& model_out, const Latent& x_t, int t, PredictionKind kind,
                              const NoiseSchedule& schedule) {
    require_same_size(model_out, x_t, "convert_prediction");
    const double ab = schedule.alpha_bar(t);
    const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
    Prediction p;
    p.x0.resize(x_t.size());
    p.epsilon.resize(x_t.size());
    switch (kind) {
        case PredictionKind::Epsilon:
            if (ab < 1e-12)
                throw Error(ErrorCode::IllPosed, "epsilon prediction at t=" + std::to_string(t) +
                                                     " has no signal to recover (alpha_bar < 1e-12)");
            for (std::size_t i = 0; i < x_t.size(); ++i) {
                p.epsilon[i] = model_out[i];
                p.x0[i] = (x_t[i] - sn * model_out[i]) / sa;
            }
            break;
        case PredictionKind::V:
            for (std::size_t i = 0; i < x_t.size(); ++i) {
                p.x0[i] = sa * x_t[i] - sn * model_out[i];
                p.epsilon[i] = sa * model_out[i] + sn * x_t[i];
            }
            break;
        case PredictionKind::Sample:
            p.x0 = model_out;
            if (sn > 0.0) {
                for (std::size_t i = 0; i < x_t.size(); ++i) p.epsilon[i] = (x_t[i] - sa * model_out[i]) / sn;
            }
            break;
    }
    return p;
}

Latent add_noise(const Latent& x0, const Latent& eps, int t, const NoiseSchedule& schedule) {
    require_same_size(x0, eps, "add_noise");
    const double ab = schedule.alpha_bar(t);
    const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
    Latent out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = sa * x0[i] + sn * eps[i];
    return out;
}

Latent velocity(const Latent& x0, const Latent& eps, int t, const NoiseSchedule& schedule) {
    require_same_size(x0, eps, "velocity");
    const double ab = schedule.alpha_bar(t);
    const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
    Latent out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = sa * eps[i] - sn * x0[i];
    return out;
}

Latent ddim_step(const Latent& x_t, const Latent& x0, const Latent& epsilon, int t, int t_prev,
                 const NoiseSchedule& schedule) {
    require_same_size(x_t, x0, "ddim_step");
    require_same_size(x0, epsilon, "ddim_step");
    require(t_prev == -1 || (t_prev >= 0 && t_prev < t), ErrorCode::InvalidArgument,
            "ddim_step: t_prev must precede t");
    if (t_prev == -1) return x0;
    const double ab = schedule.alpha_bar(t_prev);
    const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab);
    Latent out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = sa * x0[i] + sn * epsilon[i];
    return out;
}

Latent ddim_sample(const DenoiseModel& model, const Latent& x_init, const Latent& conditioning,
                   const NoiseSchedule& schedule, int inference_steps, Spacing spacing, PredictionKind kind,
                   int steps_offset) {
    const auto steps = make_timesteps(schedule.train_steps(), inference_steps, spacing, steps_offset);
    Latent x = x_init;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const int t = steps[i];
        const int t_prev = i + 1 < steps.size() ? steps[i + 1] : -1;
        const Prediction p = convert_prediction(model(x, conditioning, t), x, t, kind, schedule);
        x = ddim_step(x, p.x0, p.epsilon, t, t_prev, schedule);
    }
    return x;
}

Latent single_step_infer(const DenoiseModel& model, const Latent& conditioning, const NoiseSchedule& schedule,
                         PredictionKind kind, Spacing spacing) {
    if (spacing != Spacing::Trailing)
        throw Error(ErrorCode::IllPosed,
                    "single-step inference requires trailing spacing; leading starts at a nearly clean timestep");
    const Latent zeros(conditioning.size(), 0.0);
    return ddim_sample(model, zeros, conditioning, schedule, 1, Spacing::Trailing, kind);
}

double noise_mismatch_ratio(const NoiseSchedule& schedule, int steps_offset) {
    const int T = schedule.train_steps();
    const int t_lead = make_timesteps(T, 1, Spacing::Leading, steps_offset).front();
    const double expected = 1.0 - schedule.alpha_bar(t_lead);
    const double actual = 1.0 - schedule.alpha_bar(T - 1);
    require(expected > 0.0, ErrorCode::IllPosed, "leading timestep has zero noise level");
    return actual / expected;
}

}  // namespace matforge
