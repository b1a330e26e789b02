#include <doctest.h>

#include <cmath>

#include "irsr/degrade/degrade.hpp"
#include "irsr/synth/scene.hpp"
#include "oracles.hpp"

using namespace irsr;
using namespace irsr::degrade;

namespace {

Kernel box3() {
    Kernel k;
    k.side = 3;
    k.w.assign(9, 1.0 / 9.0);
    return k;
}

}  // namespace

TEST_CASE("kernel validation") {
    Kernel even;
    even.side = 2;
    even.w.assign(4, 0.25);
    CHECK_THROWS(convolve(Image(4, 4), even));

    Kernel unnormalized;
    unnormalized.side = 3;
    unnormalized.w.assign(9, 1.0);
    CHECK_THROWS(convolve(Image(4, 4), unnormalized));

    Kernel g = gaussian_kernel(7, 1.2, 0.7);
    double sum = 0.0;
    for (double v : g.w)
        sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS(gaussian_kernel(6, 1.0, 1.0));
}

TEST_CASE("convolve: 1x1 identity kernel is bit-exact") {
    Rng rng(1);
    Image x = oracles::random_image(16, 16, rng);
    Image y = convolve(x, Kernel{});
    CHECK(y.data == x.data);
}

TEST_CASE("convolve: unit-sum kernel preserves constants") {
    Image x(12, 12, 0.37);
    Image y = convolve(x, gaussian_kernel(9, 2.0, 2.0));
    for (double v : y.data)
        CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("convolve: 4x4 ramp with 3x3 box kernel matches the frozen oracle values") {
    // frozen from the independent direct-convolution oracle (reflect padding)
    const double expected[16] = {
        0.1111111111111111,  0.15555555555555556, 0.22222222222222221, 0.26666666666666666,
        0.28888888888888886, 0.33333333333333331, 0.40000000000000002, 0.44444444444444442,
        0.55555555555555558, 0.59999999999999998, 0.66666666666666674, 0.71111111111111103,
        0.73333333333333339, 0.77777777777777779, 0.84444444444444433, 0.88888888888888884};
    Image x(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int px = 0; px < 4; ++px)
            for (int c = 0; c < 3; ++c)
                x.at(y, px, c) = (y * 4 + px) / 15.0;
    Image out = convolve(x, box3());
    for (int y = 0; y < 4; ++y)
        for (int px = 0; px < 4; ++px)
            CHECK(out.at(y, px, 0) == doctest::Approx(expected[y * 4 + px]).epsilon(1e-12));
}

TEST_CASE("convolve matches the direct oracle on random images") {
    Rng rng(22);
    for (int trial = 0; trial < 5; ++trial) {
        Image x = oracles::random_image(20, 24, rng);
        Kernel k = gaussian_kernel(3 + 2 * (trial % 4), 0.4 + 0.5 * trial, 0.3 + 0.4 * trial);
        Image fast = convolve(x, k);
        Image ref = oracles::conv_direct(x, k);
        CHECK(oracles::max_abs_diff(fast, ref) < 1e-12);
    }
}

TEST_CASE("downsample") {
    SUBCASE("s=1 is the identity") {
        Rng rng(2);
        Image x = oracles::random_image(8, 8, rng);
        CHECK(downsample(x, 1, DownMode::Area).data == x.data);
    }
    SUBCASE("2x2 area block average") {
        Image x(2, 2);
        double vals[4] = {0.0, 0.2, 0.4, 0.6};
        for (int y = 0; y < 2; ++y)
            for (int px = 0; px < 2; ++px)
                for (int c = 0; c < 3; ++c)
                    x.at(y, px, c) = vals[y * 2 + px];
        Image y = downsample(x, 2, DownMode::Area);
        CHECK(y.height == 1);
        CHECK(y.at(0, 0, 0) == doctest::Approx(0.3).epsilon(1e-15));
    }
    SUBCASE("two-stage s=2 twice equals s=4 once in area mode") {
        Rng rng(5);
        Image x = oracles::random_image(8, 8, rng);
        Image twice = oracles::block_mean(oracles::block_mean(x, 2), 2);
        Image once = oracles::block_mean(x, 4);
        CHECK(oracles::max_abs_diff(twice, once) < 1e-12);
        // and the implementation agrees with the oracle path
        Image impl = downsample(downsample(x, 2, DownMode::Area), 2, DownMode::Area);
        CHECK(oracles::max_abs_diff(impl, once) < 1e-12);
    }
    SUBCASE("nearest mode picks the block corner") {
        Rng rng(6);
        Image x = oracles::random_image(4, 4, rng);
        Image y = downsample(x, 2, DownMode::Nearest);
        CHECK(y.at(0, 0, 0) == x.at(0, 0, 0));
        CHECK(y.at(1, 1, 2) == x.at(2, 2, 2));
    }
    SUBCASE("non-divisible shape is an error") {
        CHECK_THROWS(downsample(Image(6, 6), 4, DownMode::Area));
    }
}

TEST_CASE("add_noise") {
    SUBCASE("sigma 0 returns the input bit-exactly") {
        Rng rng(3), noise_rng(4);
        Image x = oracles::random_image(8, 8, rng);
        Image y = add_noise(x, NoiseSpec{NoiseKind::Gaussian, 0.0}, noise_rng);
        CHECK(y.data == x.data);
    }
    SUBCASE("sample std over a mid-gray image is close to sigma") {
        Image x(64, 64, 0.5);
        Rng noise_rng(99);
        Image y = add_noise(x, NoiseSpec{NoiseKind::Gaussian, 0.1}, noise_rng);
        // Monte Carlo moment check over 12288 elements
        double mean = 0.0;
        for (size_t i = 0; i < x.data.size(); ++i)
            mean += y.data[i] - x.data[i];
        mean /= static_cast<double>(x.data.size());
        double var = 0.0;
        for (size_t i = 0; i < x.data.size(); ++i) {
            double d = y.data[i] - x.data[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(x.data.size() - 1);
        double sd = std::sqrt(var);
        CHECK(sd >= 0.09);
        CHECK(sd <= 0.11);
    }
    SUBCASE("fixed seed gives an identical noise field") {
        Rng a(7), b(7);
        Image x(16, 16, 0.5);
        Image ya = add_noise(x, NoiseSpec{NoiseKind::Gaussian, 0.05}, a);
        Image yb = add_noise(x, NoiseSpec{NoiseKind::Gaussian, 0.05}, b);
        CHECK(ya.data == yb.data);
    }
}

TEST_CASE("compress_artifacts") {
    SUBCASE("quality none is the identity") {
        Rng rng(8);
        Image x = oracles::random_image(16, 16, rng);
        CHECK(compress_artifacts(x, std::nullopt).data == x.data);
    }
    SUBCASE("constant images stay constant at any quality") {
        for (int q : {5, 50, 95}) {
            Image x(16, 16, 0.6);
            Image y = compress_artifacts(x, q);
            double lo = 1e30, hi = -1e30;
            for (double v : y.data) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            CHECK(hi - lo < 1e-12);
        }
    }
    SUBCASE("8x8 block at q=50 matches the frozen oracle values") {
        // frozen from the independent explicit-cosine DCT/quantize/IDCT oracle
        const double expected[64] = {
            0.0044407444272279708, 0.066957367366909104, 0.070897943737082761, 0.20180591775869935,
            0.13339973216271822,   0.27944644431681875,  0.24895651840053273,  0.32624568239431118,
            0.3451188267744093,    0.50552533635056152,  0.45379044528763457,  0.48316813152027288,
            0.52144909377665782,   0.54763894159366733,  0.77563633324588876,  0.66366428281294831,
            0.73046973983449137,   0.60909274742859831,  0.78407670916094052,  1.0,
            0.96794715748027771,   0.83639844233077232,  0.97291842043226651,  0.025702429955920508,
            0.05631582850360798,   0.23214502844568,     0.14539119297963227,  0.09351204741550162,
            0.26895951291304115,   0.23014555333313291,  0.37118866696641362,  0.28069549705310537,
            0.4072025201353221,    0.31341326941977982,  0.47714759301332488,  0.59905704493631917,
            0.55869976059184767,   0.76437281593244921,  0.70414432469766908,  0.78527093912168944,
            0.79773238923612466,   0.89353890191834584,  0.81024354327956272,  0.83848392920450587,
            1.0,                   0.89517341411014162,  0.0,                  0.013218786913328678,
            0.10281206161899883,   0.074931807548237403, 0.23535090409558146,  0.24026880500700051,
            0.27205536155604576,   0.40048186732722785,  0.31822548797061156,  0.49480926623543003,
            0.46539037844990483,   0.52275960972598989,  0.61704341999452106,  0.51997013975631279,
            0.65476618577976775,   0.63696211081011012,  0.76608696438936275,  0.7148563038947382};
        Image x(8, 8);
        for (int y = 0; y < 8; ++y)
            for (int px = 0; px < 8; ++px)
                for (int c = 0; c < 3; ++c)
                    x.at(y, px, c) = ((y * 8 + px) % 23) / 22.0;
        Image out = compress_artifacts(x, 50);
        for (int i = 0; i < 64; ++i)
            CHECK(out.at(i / 8, i % 8, 1) == doctest::Approx(expected[i]).epsilon(1e-9));

        // the in-test oracle reproduces the same block
        double in_blk[64], oracle_blk[64];
        for (int i = 0; i < 64; ++i)
            in_blk[i] = x.at(i / 8, i % 8, 0);
        oracles::dct_quant_block(in_blk, 50, oracle_blk);
        for (int i = 0; i < 64; ++i)
            CHECK(out.at(i / 8, i % 8, 0) == doctest::Approx(oracle_blk[i]).epsilon(1e-10));
    }
    SUBCASE("out-of-range quality is an error") {
        CHECK_THROWS(compress_artifacts(Image(8, 8), 0));
        CHECK_THROWS(compress_artifacts(Image(8, 8), 101));
    }
}

TEST_CASE("degrade: identity chain returns the input bit-exactly") {
    Rng rng(12);
    Image x = oracles::random_image(24, 24, rng);
    DegradationConfig cfg;  // defaults: 1x1 kernel, scales 1, sigma 0, no jpeg
    cfg.scale_1 = 1;
    cfg.scale_2 = 1;
    Image y = degrade_image(x, cfg);
    CHECK(y.data == x.data);
}

TEST_CASE("degrade: shape law") {
    synth::SceneSpec spec;
    spec.width = spec.height = 64;
    spec.seed = 1;
    auto hr = synth::generate_scene(spec);
    DegradationConfig cfg;
    cfg.kernel = gaussian_kernel(7, 1.0, 1.0);
    cfg.scale_1 = 2;
    cfg.scale_2 = 2;
    DegradedPair pair = apply(hr, cfg);
    CHECK(pair.lr.height == 16);
    CHECK(pair.lr.width == 16);
    CHECK_THROWS(degrade_image(Image(30, 30), cfg));  // 4 does not divide 30
}

TEST_CASE("degrade: full pipeline matches the composed step oracles") {
    synth::SceneSpec spec;
    spec.seed = 42;
    spec.width = spec.height = 32;
    auto hr = synth::generate_scene(spec);

    DegradationConfig cfg;
    cfg.kernel = gaussian_kernel(5, 0.9, 1.4);
    cfg.scale_1 = 2;
    cfg.scale_2 = 2;
    cfg.noise = {NoiseKind::Gaussian, 0.03};
    cfg.jpeg_quality = 60;
    cfg.seed = 4242;

    Image got = degrade_image(hr.image, cfg);

    Image ref = oracles::conv_direct(hr.image, cfg.kernel);
    ref = oracles::block_mean(ref, 2);
    ref = oracles::add_gaussian_noise(ref, 0.03, cfg.seed);
    ref = oracles::block_mean(ref, 2);
    Image jref(ref.height, ref.width);
    for (int c = 0; c < 3; ++c) {
        double in_blk[64], out_blk[64];
        for (int i = 0; i < 64; ++i)
            in_blk[i] = ref.at(i / 8, i % 8, c);
        oracles::dct_quant_block(in_blk, 60, out_blk);
        for (int i = 0; i < 64; ++i)
            jref.at(i / 8, i % 8, c) = out_blk[i];
    }
    CHECK(oracles::max_abs_diff(got, jref) <= 1e-6);
}

TEST_CASE("degrade: outputs stay in [0,1] and the mean survives a clean pipeline") {
    Rng rng(77);
    for (int trial = 0; trial < 8; ++trial) {
        Image x = oracles::random_image(32, 32, rng);
        DegradationConfig cfg = sample_config(rng, 2, 1, DegradationRanges{.side_hi = 9});
        Image y = degrade_image(x, cfg);
        for (double v : y.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }

        // noise-free, compression-free: symmetric kernel + area downsampling
        // preserve the global mean (reflect padding keeps boundary mass)
        cfg.noise.sigma = 0.0;
        cfg.jpeg_quality.reset();
        Image clean = degrade_image(x, cfg);
        CHECK(std::abs(oracles::global_mean(clean) - oracles::global_mean(x)) < 1e-6);
    }
}
