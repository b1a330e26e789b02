#include "irsr/diffusion/process.hpp"

#include <cmath>
#include <stdexcept>

namespace irsr::diffusion {

namespace {

Mat normal_like(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = rng.normal();
    return m;
}

}  // namespace

Mat forward_step(const NoiseSchedule& s, const Mat& z_prev, int t, Rng& rng) {
    if (t < 1 || t > s.T)
        throw std::out_of_range("forward_step: t must lie in [1, T]");
    const double a = s.alpha[t];
    return std::sqrt(a) * z_prev + std::sqrt(1.0 - a) * normal_like(z_prev.rows(), z_prev.cols(), rng);
}

Mat forward_marginal(const NoiseSchedule& s, const Mat& z0, int t, const Mat& eps) {
    if (t < 0 || t > s.T)
        throw std::out_of_range("forward_marginal: t must lie in [0, T]");
    if (eps.rows() != z0.rows() || eps.cols() != z0.cols())
        throw std::invalid_argument("forward_marginal: eps shape mismatch");
    const double ab = s.alpha_bar[t];
    return std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * eps;
}

Mat ddim_step(const NoiseSchedule& s, const Mat& z_t, const Mat& eps_hat, int t, int t_prev, double eta, Rng& rng,
              Mat* z0_hat_out) {
    if (t < 1 || t > s.T)
        throw std::out_of_range("ddim_step: t must lie in [1, T]");
    if (t_prev >= t || t_prev < 0)
        throw std::invalid_argument("ddim_step: t_prev must satisfy 0 <= t_prev < t");
    if (eps_hat.rows() != z_t.rows() || eps_hat.cols() != z_t.cols())
        throw std::invalid_argument("ddim_step: eps_hat shape mismatch");
    if (eta < 0.0)
        throw std::invalid_argument("ddim_step: eta must be >= 0");

    const double ab_t = s.alpha_bar[t];
    const double ab_p = s.alpha_bar[t_prev];

    Mat z0_hat = (z_t - std::sqrt(1.0 - ab_t) * eps_hat) / std::sqrt(ab_t);
    if (z0_hat_out)
        *z0_hat_out = z0_hat;

    double sigma = 0.0;
    if (eta > 0.0)
        sigma = eta * std::sqrt((1.0 - ab_p) / (1.0 - ab_t)) * std::sqrt(1.0 - ab_t / ab_p);

    double dir_coef_sq = 1.0 - ab_p - sigma * sigma;
    Mat z_prev = std::sqrt(ab_p) * z0_hat + std::sqrt(std::max(dir_coef_sq, 0.0)) * eps_hat;
    if (sigma > 0.0)
        z_prev += sigma * normal_like(z_t.rows(), z_t.cols(), rng);
    return z_prev;
}

std::vector<int> ddim_timesteps(int T, int steps) {
    if (steps < 1)
        throw std::invalid_argument("ddim_timesteps: steps must be >= 1");
    steps = std::min(steps, T);
    std::vector<int> ts(steps + 1);
    for (int i = 0; i <= steps; ++i)
        ts[i] = static_cast<int>(std::llround(static_cast<double>(T) * (steps - i) / steps));
    ts.front() = T;
    ts.back() = 0;
    return ts;
}

Mat sample(const NoiseSchedule& s, const Denoiser& denoiser, int rows, int cols, int steps, double eta, Rng& rng) {
    Mat z = normal_like(rows, cols, rng);
    const std::vector<int> ts = ddim_timesteps(s.T, steps);
    for (size_t i = 0; i + 1 < ts.size(); ++i) {
        Mat eps_hat = denoiser(z, ts[i]);
        z = ddim_step(s, z, eps_hat, ts[i], ts[i + 1], eta, rng);
    }
    return z;
}

}  // namespace irsr::diffusion
