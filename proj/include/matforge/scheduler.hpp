// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string_view>
#include <vector>

namespace matforge {

enum class BetaSchedule { Linear, ScaledLinear };
enum class Spacing { Leading, Trailing };
enum class PredictionKind { Epsilon, V, Sample };

BetaSchedule parse_beta_schedule(std::string_view s);
Spacing parse_spacing(std::string_view s);
PredictionKind parse_prediction_kind(std::string_view s);
std::string_view to_string(Spacing s);
std::string_view to_string(PredictionKind k);

// Flat latent; image stacks are flattened channel-interleaved by the caller.
using Latent = std::vector<double>;

class NoiseSchedule {
public:
    // Scaled-linear is linear in sqrt(beta).
    NoiseSchedule(int train_steps = 1000, double beta_start = 0.00085, double beta_end = 0.012,
                  BetaSchedule kind = BetaSchedule::ScaledLinear);

    int train_steps() const noexcept { return static_cast<int>(betas_.size()); }
    const std::vector<double>& betas() const noexcept { return betas_; }
    const std::vector<double>& alphas_cumprod() const noexcept { return alphas_cumprod_; }
    // Cumulative product at t; t = -1 gives 1 (the clean endpoint).
    double alpha_bar(int t) const;

private:
    std::vector<double> betas_;
    std::vector<double> alphas_cumprod_;
};

// Descending inference timesteps.
//   leading:  t_i = (N-1-i) * floor(T/N) + offset
//   trailing: round(T - i*T/N) - 1 for i = 0..N-1
// Throws InvalidArgument unless 1 <= N <= T.
std::vector<int> make_timesteps(int train_steps, int inference_steps, Spacing spacing, int steps_offset = 0);

struct Prediction {
    Latent x0;
    Latent epsilon;
};

// Converts a model output at timestep t into both clean-sample and noise
// form. Epsilon-kind throws IllPosed when alpha_bar(t) < 1e-12.
Prediction convert_prediction(const Latent& model_out, const Latent& x_t, int t, PredictionKind kind,
                              const NoiseSchedule& schedule);

// x_t = sqrt(abar) x0 + sqrt(1 - abar) eps.
Latent add_noise(const Latent& x0, const Latent& eps, int t, const NoiseSchedule& schedule);
// v = sqrt(abar) eps - sqrt(1 - abar) x0.
Latent velocity(const Latent& x0, const Latent& eps, int t, const NoiseSchedule& schedule);

// Deterministic DDIM update to t_prev (t_prev = -1 returns x0 exactly).
Latent ddim_step(const Latent& x_t, const Latent& x0, const Latent& epsilon, int t, int t_prev,
                 const NoiseSchedule& schedule);

// Model contract: (noisy latent, conditioning, timestep) -> prediction.
using DenoiseModel = std::function<Latent(const Latent& noisy, const Latent& conditioning, int t)>;

// Full deterministic sampling loop starting from `x_init` at the first
// timestep of the given spacing.
Latent ddim_sample(const DenoiseModel& model, const Latent& x_init, const Latent& conditioning,
                   const NoiseSchedule& schedule, int inference_steps, Spacing spacing, PredictionKind kind,
                   int steps_offset = 0);

// One model call at t = T-1 on an all-zero latent the size of the
// conditioning. Only the trailing spacing reaches T-1 with a single step, so
// leading throws IllPosed.
Latent single_step_infer(const DenoiseModel& model, const Latent& conditioning, const NoiseSchedule& schedule,
                         PredictionKind kind, Spacing spacing = Spacing::Trailing);

// Ratio of the noise variance of a pure-noise input (1 - abar(T-1)) to the
// variance the model is told to expect at the leading single-step timestep
// (1 - abar(t_leading)).
double noise_mismatch_ratio(const NoiseSchedule& schedule, int steps_offset = 1);

}  // namespace matforge
