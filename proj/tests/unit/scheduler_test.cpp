// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "matforge/error.hpp"
#include "matforge/scheduler.hpp"

namespace matforge {
namespace {

Latent random_latent(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    Latent v(n);
    for (double& x : v) x = N(rng);
    return v;
}

// Straight product of (1 - beta) from first principles.
std::vector<double> oracle_alpha_bar(int T, double b0, double b1, bool scaled) {
    std::vector<double> out(T);
    double prod = 1.0;
    for (int i = 0; i < T; ++i) {
        const double f = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
        double beta;
        if (scaled) {
            const double r = std::sqrt(b0) + f * (std::sqrt(b1) - std::sqrt(b0));
            beta = r * r;
        } else {
            beta = b0 + f * (b1 - b0);
        }
        prod *= 1.0 - beta;
        out[i] = prod;
    }
    return out;
}

TEST(Schedule, MatchesProductOfBetas) {
    for (bool scaled : {false, true}) {
        const NoiseSchedule s(1000, 0.00085, 0.012, scaled ? BetaSchedule::ScaledLinear : BetaSchedule::Linear);
        const auto want = oracle_alpha_bar(1000, 0.00085, 0.012, scaled);
        ASSERT_EQ(s.alphas_cumprod().size(), 1000u);
        for (int t = 0; t < 1000; ++t) EXPECT_NEAR(s.alpha_bar(t), want[t], 1e-12 * want[t] + 1e-15);
        EXPECT_EQ(s.alpha_bar(-1), 1.0);
        for (int t = 1; t < 1000; ++t) EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
    }
}

TEST(Timesteps, GoldenVectors) {
    EXPECT_EQ(make_timesteps(1000, 1, Spacing::Trailing), std::vector<int>({999}));
    EXPECT_EQ(make_timesteps(1000, 4, Spacing::Trailing), std::vector<int>({999, 749, 499, 249}));
    EXPECT_EQ(make_timesteps(1000, 1, Spacing::Leading, 1), std::vector<int>({1}));
    EXPECT_EQ(make_timesteps(1000, 4, Spacing::Leading, 1), std::vector<int>({751, 501, 251, 1}));
    EXPECT_EQ(make_timesteps(1000, 1000, Spacing::Trailing).back(), 0);
}

TEST(Timesteps, LeadingFormulaAndOrdering) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 200; ++k) {
        const int T = 1 + static_cast<int>(rng() % 1200);
        const int N = 1 + static_cast<int>(rng() % T);
        const auto lead = make_timesteps(T, N, Spacing::Leading);
        ASSERT_EQ(lead.size(), static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) EXPECT_EQ(lead[i], (N - 1 - i) * (T / N));
        const auto trail = make_timesteps(T, N, Spacing::Trailing);
        ASSERT_EQ(trail.size(), static_cast<std::size_t>(N));
        EXPECT_EQ(trail.front(), T - 1);
        for (int i = 1; i < N; ++i) EXPECT_LT(trail[i], trail[i - 1]);
        EXPECT_GE(trail.back(), 0);
    }
}

TEST(Timesteps, RejectsBadCounts) {
    EXPECT_THROW(make_timesteps(1000, 1001, Spacing::Trailing), Error);
    EXPECT_THROW(make_timesteps(1000, 0, Spacing::Leading), Error);
    try {
        make_timesteps(10, 11, Spacing::Leading);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
}

TEST(Prediction, ConversionRoundTripsAcrossKinds) {
    const NoiseSchedule s;
    const Latent x0 = random_latent(64, 1), eps = random_latent(64, 2);
    for (int t : {0, 17, 500, 999}) {
        const Latent xt = add_noise(x0, eps, t, s);
        const Latent v = velocity(x0, eps, t, s);
        for (auto [kind, out] : {std::pair{PredictionKind::Epsilon, eps}, std::pair{PredictionKind::V, v},
                                 std::pair{PredictionKind::Sample, x0}}) {
            const Prediction p = convert_prediction(out, xt, t, kind, s);
            for (std::size_t i = 0; i < x0.size(); ++i) {
                EXPECT_NEAR(p.x0[i], x0[i], 1e-9 * (1 + 1 / std::sqrt(s.alpha_bar(t))));
                EXPECT_NEAR(p.epsilon[i], eps[i], 1e-9 * (1 + 1 / std::sqrt(1 - s.alpha_bar(t))));
            }
        }
    }
}

TEST(Prediction, VelocityAtZeroLatent) {
    const NoiseSchedule s;
    const Latent v0 = random_latent(16, 5), zero(16, 0.0);
    const int t = 999;
    const double a = s.alpha_bar(t);
    const Prediction p = convert_prediction(v0, zero, t, PredictionKind::V, s);
    for (std::size_t i = 0; i < v0.size(); ++i) {
        EXPECT_NEAR(p.x0[i], -std::sqrt(1 - a) * v0[i], 1e-14);
        EXPECT_NEAR(p.epsilon[i], std::sqrt(a) * v0[i], 1e-14);
    }
}

TEST(Prediction, EpsilonIllPosedWhenSignalVanishes) {
    // Betas near 1 drive alpha_bar below 1e-12 within a few steps.
    const NoiseSchedule s(50, 0.9, 0.999, BetaSchedule::Linear);
    ASSERT_LT(s.alpha_bar(49), 1e-12);
    const Latent z(4, 0.0);
    try {
        convert_prediction(z, z, 49, PredictionKind::Epsilon, s);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IllPosed);
    }
    EXPECT_NO_THROW(convert_prediction(z, z, 49, PredictionKind::V, s));
}

TEST(Ddim, FinalStepReturnsCleanSample) {
    const NoiseSchedule s;
    const Latent x0 = random_latent(8, 7), eps = random_latent(8, 8);
    const Latent xt = add_noise(x0, eps, 300, s);
    EXPECT_EQ(ddim_step(xt, x0, eps, 300, -1, s), x0);
    const Latent mid = ddim_step(xt, x0, eps, 300, 100, s);
    const Latent want = add_noise(x0, eps, 100, s);
    for (std::size_t i = 0; i < x0.size(); ++i) EXPECT_NEAR(mid[i], want[i], 1e-12);
}

TEST(Ddim, SingleStepLoopEqualsOneShot) {
    const NoiseSchedule s;
    const Latent cond = random_latent(32, 9);
    const DenoiseModel model = [](const Latent& x, const Latent& c, int t) {
        Latent out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = 0.3 * x[i] + c[i] + 1e-3 * t;
        return out;
    };
    for (PredictionKind kind : {PredictionKind::V, PredictionKind::Sample, PredictionKind::Epsilon}) {
        const Latent loop = ddim_sample(model, Latent(32, 0.0), cond, s, 1, Spacing::Trailing, kind);
        const Latent one = single_step_infer(model, cond, s, kind);
        ASSERT_EQ(loop.size(), one.size());
        for (std::size_t i = 0; i < one.size(); ++i) EXPECT_NEAR(loop[i], one[i], 1e-12);
    }
}

TEST(Ddim, TrailingTrajectoryMatchesHandLoop) {
    const NoiseSchedule s(1000, 0.0001, 0.02, BetaSchedule::Linear);
    const auto ab = oracle_alpha_bar(1000, 0.0001, 0.02, false);
    const Latent cond = random_latent(12, 11), x_init = random_latent(12, 12);
    const DenoiseModel model = [](const Latent& x, const Latent& c, int t) {
        Latent out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::sin(x[i]) * 0.1 + c[i] * (t / 1000.0);
        return out;
    };
    const Latent got = ddim_sample(model, x_init, cond, s, 50, Spacing::Trailing, PredictionKind::Epsilon);

    std::vector<int> ts;
    for (int i = 0; i < 50; ++i) ts.push_back(static_cast<int>(std::lround(1000.0 - i * 20.0)) - 1);
    Latent x = x_init;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const int t = ts[k];
        const double a = ab[t], a_prev = k + 1 < ts.size() ? ab[ts[k + 1]] : 1.0;
        const Latent e = model(x, cond, t);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double x0 = (x[i] - std::sqrt(1 - a) * e[i]) / std::sqrt(a);
            x[i] = std::sqrt(a_prev) * x0 + std::sqrt(1 - a_prev) * e[i];
        }
    }
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(got[i], x[i], 1e-9 * (1 + std::abs(x[i])));
}

TEST(SingleStep, ConstantVelocityModel) {
    const NoiseSchedule s;
    const Latent v0 = random_latent(20, 13);
    const DenoiseModel model = [&](const Latent&, const Latent&, int) { return v0; };
    const Latent out = single_step_infer(model, Latent(20, 0.0), s, PredictionKind::V);
    const double a = s.alpha_bar(999);
    for (std::size_t i = 0; i < v0.size(); ++i) EXPECT_NEAR(out[i], -std::sqrt(1 - a) * v0[i], 1e-14);

    const DenoiseModel echo = [](const Latent&, const Latent& c, int) { return c; };
    const Latent c = random_latent(20, 14);
    EXPECT_EQ(single_step_infer(echo, c, s, PredictionKind::Sample), c);
}

TEST(SingleStep, SeesZeroLatentAndLastTimestep) {
    const NoiseSchedule s;
    int seen_t = -100;
    bool zero_input = false;
    const DenoiseModel spy = [&](const Latent& x, const Latent& c, int t) {
        seen_t = t;
        zero_input = x.size() == c.size();
        for (double v : x) zero_input = zero_input && v == 0.0;
        return c;
    };
    single_step_infer(spy, random_latent(5, 15), s, PredictionKind::Sample);
    EXPECT_EQ(seen_t, 999);
    EXPECT_TRUE(zero_input);
}

TEST(SingleStep, LeadingIsIllPosed) {
    const NoiseSchedule s;
    const DenoiseModel echo = [](const Latent&, const Latent& c, int) { return c; };
    try {
        single_step_infer(echo, Latent(3, 1.0), s, PredictionKind::V, Spacing::Leading);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IllPosed);
    }
}

TEST(SingleStep, NoiseMismatchIsLarge) {
    const NoiseSchedule s;
    const double r = noise_mismatch_ratio(s, 1);
    EXPECT_NEAR(r, (1 - s.alpha_bar(999)) / (1 - s.alpha_bar(1)), 1e-9 * r);
    EXPECT_GT(r, 100.0);
}

TEST(SingleStep, PureFunctionOfInputs) {
    const NoiseSchedule s;
    const Latent c = random_latent(40, 16);
    const DenoiseModel model = [](const Latent& x, const Latent& c2, int t) {
        Latent out(c2.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = c2[i] * 0.5 + x[i] + t * 1e-4;
        return out;
    };
    const Latent a = single_step_infer(model, c, s, PredictionKind::V);
    const Latent b = single_step_infer(model, c, s, PredictionKind::V);
    EXPECT_EQ(a, b);
}

TEST(Parsing, NamesRoundTrip) {
    for (auto k : {PredictionKind::Epsilon, PredictionKind::V, PredictionKind::Sample})
        EXPECT_EQ(parse_prediction_kind(to_string(k)), k);
    for (auto sp : {Spacing::Leading, Spacing::Trailing}) EXPECT_EQ(parse_spacing(to_string(sp)), sp);
    EXPECT_THROW(parse_spacing("sideways"), Error);
}

}  // namespace
}  // namespace matforge
