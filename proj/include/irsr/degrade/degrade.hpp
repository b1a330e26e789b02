#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "irsr/core/image.hpp"
#include "irsr/core/rng.hpp"
#include "irsr/synth/scene.hpp"

namespace irsr::degrade {

// Odd-sided 2-D blur kernel, entries >= 0, normalized to unit sum.
struct Kernel {
    int side = 1;
    std::vector<double> w = {1.0};

    double at(int ky, int kx) const { return w[static_cast<size_t>(ky) * side + kx]; }
    void validate() const;  // throws on even side, negative entries, sum off by > 1e-9
};

// Axis-aligned (possibly anisotropic) truncated Gaussian, renormalized.
Kernel gaussian_kernel(int side, double sigma_x, double sigma_y);

enum class NoiseKind { Gaussian, PoissonGaussian };
enum class DownMode { Area, Nearest };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::Gaussian;
    double sigma = 0.0;  // [0,1] intensity units
};

struct DegradationConfig {
    Kernel kernel;
    int scale_1 = 2;   // first downsampling factor
    int scale_2 = 1;   // second downsampling factor
    NoiseSpec noise;
    std::optional<int> jpeg_quality;  // [1,100]; nullopt = no compression
    DownMode down_mode = DownMode::Area;
    uint64_t seed = 0;

    void validate() const;
};

struct DegradedPair {
    synth::SceneSample hr;
    Image lr;
    DegradationConfig config;
};

// Components of the degradation chain. All are pure given (input, config, rng).
Image convolve(const Image& x, const Kernel& k);          // reflect padding, per channel
Image downsample(const Image& x, int s, DownMode mode);   // s must divide both dims
Image add_noise(const Image& x, const NoiseSpec& a, Rng& rng);
Image compress_artifacts(const Image& x, std::optional<int> quality);

// blur -> downsample by scale_1 -> noise -> downsample by scale_2 -> compression.
// The noise stage draws its field from Rng(config.seed) in row-major (y, x,
// channel) order; nothing else in the chain consumes randomness.
Image degrade_image(const Image& hr, const DegradationConfig& cfg);
DegradedPair apply(const synth::SceneSample& hr, const DegradationConfig& cfg);

// Per-sample random degradations. Documented sampling ranges: kernel side is
// odd in [side_lo, side_hi], sigma in [sigma_lo, sigma_hi] (isotropic with
// probability 1 - aniso_prob), noise sigma in [noise_lo, noise_hi], and
// compression is skipped with probability jpeg_none_prob, else quality is
// uniform in [q_lo, q_hi].
struct DegradationRanges {
    double sigma_lo = 0.2, sigma_hi = 3.0;
    int side_lo = 7, side_hi = 21;
    double aniso_prob = 0.5;
    double noise_lo = 0.0, noise_hi = 0.06;
    double jpeg_none_prob = 0.3;
    int q_lo = 40, q_hi = 95;
};

DegradationConfig sample_config(Rng& rng, int scale_1, int scale_2, const DegradationRanges& ranges = {});

// Config-file form of DegradationConfig (schema_version 1). Kernel is given
// as side/sigma of the Gaussian family.
DegradationConfig config_from_kv_text(const std::string& text, uint64_t seed);
DegradationConfig config_from_file(const std::string& path, uint64_t seed);

}  // namespace irsr::degrade
