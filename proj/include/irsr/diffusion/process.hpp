#pragma once

#include <functional>
#include <vector>

#include "irsr/core/mat.hpp"
#include "irsr/core/rng.hpp"
#include "irsr/diffusion/schedule.hpp"

namespace irsr::diffusion {

// One ancestral noising step: z_t = sqrt(alpha_t) z_{t-1} + sqrt(1-alpha_t) eps.
Mat forward_step(const NoiseSchedule& s, const Mat& z_prev, int t, Rng& rng);

// Closed-form marginal: z_t = sqrt(abar_t) z_0 + sqrt(1-abar_t) eps.
Mat forward_marginal(const NoiseSchedule& s, const Mat& z0, int t, const Mat& eps);

// Deterministic for eta = 0. Exposes the predicted clean latent if requested.
Mat ddim_step(const NoiseSchedule& s, const Mat& z_t, const Mat& eps_hat, int t, int t_prev, double eta, Rng& rng,
              Mat* z0_hat = nullptr);

// Evenly spaced sub-schedule T = t_0 > t_1 > ... > t_steps = 0.
std::vector<int> ddim_timesteps(int T, int steps);

using Denoiser = std::function<Mat(const Mat& z_t, int t)>;

// Full reverse trajectory from a standard-normal start over `rows`x`cols`.
Mat sample(const NoiseSchedule& s, const Denoiser& denoiser, int rows, int cols, int steps, double eta, Rng& rng);

}  // namespace irsr::diffusion
