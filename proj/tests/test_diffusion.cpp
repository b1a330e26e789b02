#include <doctest.h>

#include <cmath>

#include "irsr/diffusion/process.hpp"

using namespace irsr;
using namespace irsr::diffusion;

namespace {

Mat randn(int r, int c, Rng& rng) {
    Mat m(r, c);
    for (int i = 0; i < m.size(); ++i)
        m.data()[i] = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("schedule monotonicity for both kinds and several T") {
    for (auto kind : {ScheduleKind::Linear, ScheduleKind::Cosine})
        for (int T : {10, 50, 1000}) {
            NoiseSchedule s = NoiseSchedule::make(T, kind);
            CHECK(s.alpha_bar[0] == 1.0);
            for (int t = 1; t <= T; ++t) {
                CHECK(s.alpha[t] > 0.0);
                CHECK(s.alpha[t] < 1.0);
                CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
            }
        }
    CHECK_THROWS(NoiseSchedule::make(0, ScheduleKind::Linear));
}

TEST_CASE("alpha_bar equals the running product of alpha") {
    NoiseSchedule s = NoiseSchedule::make(10, ScheduleKind::Linear);
    double prod = 1.0;
    for (int t = 1; t <= 10; ++t) {
        prod *= s.alpha[t];
        CHECK(s.alpha_bar[t] == doctest::Approx(prod).epsilon(1e-12));
    }
}

TEST_CASE("forward_step: degenerate alpha = 1 keeps the latent") {
    NoiseSchedule s = NoiseSchedule::make(10, ScheduleKind::Linear);
    s.alpha[3] = 1.0;  // hand-built degenerate step, bypassing validate()
    Rng rng(0);
    Mat z = randn(4, 4, rng);
    Mat z_t = forward_step(s, z, 3, rng);
    CHECK((z_t - z).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS(forward_step(s, z, 0, rng));
    CHECK_THROWS(forward_step(s, z, 11, rng));
}

TEST_CASE("forward_step moments from zero input") {
    NoiseSchedule s = NoiseSchedule::make(10, ScheduleKind::Linear);
    const int t = 5;
    Rng rng(42);
    Mat z0 = Mat::Zero(2, 8);

    const int draws = 10000;
    double sum = 0.0, sumsq = 0.0;
    const double n = static_cast<double>(draws) * z0.size();
    for (int i = 0; i < draws; ++i) {
        Mat z = forward_step(s, z0, t, rng);
        sum += z.sum();
        sumsq += z.squaredNorm();
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.03 * std::sqrt(1.0 - s.alpha[t]));
    CHECK(var == doctest::Approx(1.0 - s.alpha[t]).epsilon(0.03));
}

TEST_CASE("iterated forward steps match the closed-form marginal in moments") {
    NoiseSchedule s = NoiseSchedule::make(10, ScheduleKind::Linear);
    Rng rng(7);
    const double z0_val = 0.7;
    Mat z0 = Mat::Constant(2, 8, z0_val);

    for (int t : {1, 5, 10}) {
        const int draws = 10000;
        double sum = 0.0, sumsq = 0.0;
        const double n = static_cast<double>(draws) * z0.size();
        for (int i = 0; i < draws; ++i) {
            Mat z = z0;
            for (int step = 1; step <= t; ++step)
                z = forward_step(s, z, step, rng);
            sum += z.sum();
            sumsq += z.squaredNorm();
        }
        double mean = sum / n;
        double var = sumsq / n - mean * mean;
        double want_mean = std::sqrt(s.alpha_bar[t]) * z0_val;
        double want_var = 1.0 - s.alpha_bar[t];
        CHECK(mean == doctest::Approx(want_mean).epsilon(0.03));
        CHECK(var == doctest::Approx(want_var).epsilon(0.03));
    }
}

TEST_CASE("forward_marginal") {
    NoiseSchedule s = NoiseSchedule::make(10, ScheduleKind::Linear);
    Rng rng(3);
    Mat z0 = randn(3, 5, rng);
    Mat eps = randn(3, 5, rng);

    SUBCASE("t = 0 (alpha_bar = 1) returns z0") {
        Mat z = forward_marginal(s, z0, 0, eps);
        CHECK((z - z0).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("zero z0 scales the noise by sqrt(1 - alpha_bar)") {
        Mat z = forward_marginal(s, Mat::Zero(3, 5), 7, eps);
        Mat want = std::sqrt(1.0 - s.alpha_bar[7]) * eps;
        CHECK((z - want).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("shape mismatch is an error") {
        CHECK_THROWS(forward_marginal(s, z0, 3, Mat::Zero(2, 5)));
    }
}

TEST_CASE("ddim: true-noise predictor inverts the marginal in one step") {
    NoiseSchedule s = NoiseSchedule::make(10, ScheduleKind::Linear);
    Rng rng(11);
    Mat z0 = randn(4, 6, rng);
    Mat eps = randn(4, 6, rng);
    for (int t = 1; t <= 10; ++t) {
        Mat z_t = forward_marginal(s, z0, t, eps);
        Mat z0_hat;
        Mat out = ddim_step(s, z_t, eps, t, 0, 0.0, rng, &z0_hat);
        CHECK((out - z0).cwiseAbs().maxCoeff() < 1e-5);
        CHECK((z0_hat - z0).cwiseAbs().maxCoeff() < 1e-5);
    }
    CHECK_THROWS(ddim_step(s, z0, eps, 3, 3, 0.0, rng));
    CHECK_THROWS(ddim_step(s, z0, eps, 3, 5, 0.0, rng));
}

TEST_CASE("ddim: eta = 0 is deterministic") {
    NoiseSchedule s = NoiseSchedule::make(10, ScheduleKind::Linear);
    Rng rng_a(1), rng_b(2);  // different rngs must not matter at eta = 0
    Rng init(5);
    Mat z_t = randn(3, 4, init);
    Mat eps_hat = randn(3, 4, init);
    Mat a = ddim_step(s, z_t, eps_hat, 8, 4, 0.0, rng_a);
    Mat b = ddim_step(s, z_t, eps_hat, 8, 4, 0.0, rng_b);
    CHECK(a == b);
}

TEST_CASE("ddim trajectories with an exact predictor land on z0 at any step count") {
    NoiseSchedule s = NoiseSchedule::make(50, ScheduleKind::Linear);
    Rng rng(9);
    Mat z0 = randn(4, 4, rng);

    // predictor returning the epsilon implied by (z_t, z0)
    auto oracle = [&](const Mat& z_t, int t) {
        return ((z_t - std::sqrt(s.alpha_bar[t]) * z0) / std::sqrt(1.0 - s.alpha_bar[t])).eval();
    };

    for (int steps : {5, 50}) {
        Rng srng(1234);
        Mat out = sample(s, oracle, 4, 4, steps, 0.0, srng);
        CHECK((out - z0).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("sample: single step with the exact predictor recovers the target") {
    NoiseSchedule s = NoiseSchedule::make(10, ScheduleKind::Linear);
    Rng rng(21);
    Mat z0 = randn(2, 6, rng);
    auto oracle = [&](const Mat& z_t, int t) {
        return ((z_t - std::sqrt(s.alpha_bar[t]) * z0) / std::sqrt(1.0 - s.alpha_bar[t])).eval();
    };
    Rng srng(8);
    Mat out = sample(s, oracle, 2, 6, 1, 0.0, srng);
    CHECK((out - z0).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("sample is reproducible for a fixed rng and eta = 0") {
    NoiseSchedule s = NoiseSchedule::make(10, ScheduleKind::Linear);
    auto denoiser = [](const Mat& z, int) { return (0.1 * z).eval(); };
    Rng a(77), b(77);
    Mat ra = sample(s, denoiser, 3, 3, 5, 0.0, a);
    Mat rb = sample(s, denoiser, 3, 3, 5, 0.0, b);
    CHECK(ra == rb);
}

TEST_CASE("ddim timestep grids are strictly decreasing and hit the endpoints") {
    for (int T : {10, 1000})
        for (int steps : {1, 5, 10}) {
            auto ts = ddim_timesteps(T, steps);
            CHECK(ts.front() == T);
            CHECK(ts.back() == 0);
            for (size_t i = 0; i + 1 < ts.size(); ++i)
                CHECK(ts[i] > ts[i + 1]);
        }
}
