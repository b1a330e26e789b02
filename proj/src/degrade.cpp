#include "irsr/degrade/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "irsr/core/kv.hpp"

namespace irsr::degrade {

namespace {

// symmetric padding with the edge pixel included: index -1 -> 0, H -> H-1
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0)
            i = -i - 1;
        if (i >= n)
            i = 2 * n - i - 1;
    }
    return i;
}

constexpr double kJpegBaseLuma[64] = {
    16, 11, 10, 16, 24, 40, 51, 61,  12, 12, 14, 19, 26, 58, 60, 55,  14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,  18, 22, 37, 56, 68, 109, 103, 77, 24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

void quality_table(int q, double out[64]) {
    double s = q < 50 ? 5000.0 / q : 200.0 - 2.0 * q;
    for (int i = 0; i < 64; ++i)
        out[i] = std::clamp(std::floor((kJpegBaseLuma[i] * s + 50.0) / 100.0), 1.0, 255.0);
}

// orthonormal DCT-II basis, 8x8
struct DctBasis {
    double c[8][8];
    DctBasis() {
        for (int k = 0; k < 8; ++k) {
            double a = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int n = 0; n < 8; ++n)
                c[k][n] = a * std::cos(M_PI * (2 * n + 1) * k / 16.0);
        }
    }
};
const DctBasis kDct;

}  // namespace

void Kernel::validate() const {
    if (side < 1 || side % 2 == 0)
        throw std::invalid_argument("kernel side must be odd and positive");
    if (w.size() != static_cast<size_t>(side) * side)
        throw std::invalid_argument("kernel storage does not match its side");
    double sum = 0.0;
    for (double v : w) {
        if (v < 0.0)
            throw std::invalid_argument("kernel entries must be >= 0");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("kernel must sum to 1 within 1e-9");
}

Kernel gaussian_kernel(int side, double sigma_x, double sigma_y) {
    if (side < 1 || side % 2 == 0)
        throw std::invalid_argument("gaussian_kernel: side must be odd");
    if (sigma_x <= 0.0 || sigma_y <= 0.0)
        throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    Kernel k;
    k.side = side;
    k.w.assign(static_cast<size_t>(side) * side, 0.0);
    int h = side / 2;
    double sum = 0.0;
    for (int y = -h; y <= h; ++y)
        for (int x = -h; x <= h; ++x) {
            double v = std::exp(-0.5 * (x * x / (sigma_x * sigma_x) + y * y / (sigma_y * sigma_y)));
            k.w[static_cast<size_t>(y + h) * side + (x + h)] = v;
            sum += v;
        }
    for (double& v : k.w)
        v /= sum;
    return k;
}

void DegradationConfig::validate() const {
    kernel.validate();
    if (scale_1 < 1 || scale_2 < 1)
        throw std::invalid_argument("downsampling scales must be >= 1");
    if (noise.sigma < 0.0 || noise.sigma > 1.0)
        throw std::invalid_argument("noise sigma must lie in [0, 1]");
    if (jpeg_quality && (*jpeg_quality < 1 || *jpeg_quality > 100))
        throw std::invalid_argument("jpeg quality must lie in [1, 100]");
}

Image convolve(const Image& x, const Kernel& k) {
    k.validate();
    if (k.side == 1)
        return x;  // 1x1 unit kernel is the identity, bit-exactly
    Image out(x.height, x.width);
    const int h = k.side / 2;
    for (int y = 0; y < x.height; ++y)
        for (int px = 0; px < x.width; ++px) {
            double acc[3] = {0, 0, 0};
            for (int ky = -h; ky <= h; ++ky) {
                int sy = reflect_index(y + ky, x.height);
                for (int kx = -h; kx <= h; ++kx) {
                    int sx = reflect_index(px + kx, x.width);
                    double wv = k.at(ky + h, kx + h);
                    acc[0] += wv * x.at(sy, sx, 0);
                    acc[1] += wv * x.at(sy, sx, 1);
                    acc[2] += wv * x.at(sy, sx, 2);
                }
            }
            out.at(y, px, 0) = acc[0];
            out.at(y, px, 1) = acc[1];
            out.at(y, px, 2) = acc[2];
        }
    return out;
}

Image downsample(const Image& x, int s, DownMode mode) {
    if (s < 1)
        throw std::invalid_argument("downsample: scale must be >= 1");
    if (s == 1)
        return x;
    if (x.height % s != 0 || x.width % s != 0)
        throw std::invalid_argument("downsample: scale does not divide image dims");
    Image out(x.height / s, x.width / s);
    const double inv = 1.0 / (static_cast<double>(s) * s);
    for (int y = 0; y < out.height; ++y)
        for (int px = 0; px < out.width; ++px)
            for (int c = 0; c < 3; ++c) {
                if (mode == DownMode::Nearest) {
                    out.at(y, px, c) = x.at(y * s, px * s, c);
                } else {
                    double acc = 0.0;
                    for (int dy = 0; dy < s; ++dy)
                        for (int dx = 0; dx < s; ++dx)
                            acc += x.at(y * s + dy, px * s + dx, c);
                    out.at(y, px, c) = acc * inv;
                }
            }
    return out;
}

Image add_noise(const Image& x, const NoiseSpec& a, Rng& rng) {
    if (a.sigma < 0.0)
        throw std::invalid_argument("add_noise: sigma must be >= 0");
    if (a.sigma == 0.0)
        return x;
    Image out(x.height, x.width);
    for (size_t i = 0; i < x.data.size(); ++i) {
        double n = rng.normal();
        double sd = a.sigma;
        if (a.kind == NoiseKind::PoissonGaussian) {
            // signal-dependent shot-noise surrogate, bounded for x in [0,1]
            sd = a.sigma * std::sqrt(0.5 + 0.5 * std::max(x.data[i], 0.0));
        }
        out.data[i] = std::clamp(x.data[i] + sd * n, 0.0, 1.0);
    }
    return out;
}

Image compress_artifacts(const Image& x, std::optional<int> quality) {
    if (!quality)
        return x;
    if (*quality < 1 || *quality > 100)
        throw std::invalid_argument("compress_artifacts: quality must lie in [1, 100]");

    double qt[64];
    quality_table(*quality, qt);

    const int bh = (x.height + 7) / 8 * 8;
    const int bw = (x.width + 7) / 8 * 8;
    Image out(x.height, x.width);

    double blk[64], coef[64], tmp[64];
    for (int c = 0; c < 3; ++c)
        for (int by = 0; by < bh; by += 8)
            for (int bx = 0; bx < bw; bx += 8) {
                // edge-replicated load, centered on [0,255] levels
                for (int yy = 0; yy < 8; ++yy)
                    for (int xx = 0; xx < 8; ++xx) {
                        int sy = std::min(by + yy, x.height - 1);
                        int sx = std::min(bx + xx, x.width - 1);
                        blk[yy * 8 + xx] = x.at(sy, sx, c) * 255.0 - 128.0;
                    }
                // coef = C * blk * C^T
                for (int k = 0; k < 8; ++k)
                    for (int n = 0; n < 8; ++n) {
                        double acc = 0.0;
                        for (int m = 0; m < 8; ++m)
                            acc += kDct.c[k][m] * blk[m * 8 + n];
                        tmp[k * 8 + n] = acc;
                    }
                for (int k = 0; k < 8; ++k)
                    for (int n = 0; n < 8; ++n) {
                        double acc = 0.0;
                        for (int m = 0; m < 8; ++m)
                            acc += tmp[k * 8 + m] * kDct.c[n][m];
                        coef[k * 8 + n] = acc;
                    }
                for (int i = 0; i < 64; ++i)
                    coef[i] = std::round(coef[i] / qt[i]) * qt[i];
                // blk = C^T * coef * C
                for (int k = 0; k < 8; ++k)
                    for (int n = 0; n < 8; ++n) {
                        double acc = 0.0;
                        for (int m = 0; m < 8; ++m)
                            acc += kDct.c[m][k] * coef[m * 8 + n];
                        tmp[k * 8 + n] = acc;
                    }
                for (int k = 0; k < 8; ++k)
                    for (int n = 0; n < 8; ++n) {
                        double acc = 0.0;
                        for (int m = 0; m < 8; ++m)
                            acc += tmp[k * 8 + m] * kDct.c[m][n];
                        blk[k * 8 + n] = acc;
                    }
                for (int yy = 0; yy < 8 && by + yy < x.height; ++yy)
                    for (int xx = 0; xx < 8 && bx + xx < x.width; ++xx)
                        out.at(by + yy, bx + xx, c) = std::clamp((blk[yy * 8 + xx] + 128.0) / 255.0, 0.0, 1.0);
            }
    return out;
}

Image degrade_image(const Image& hr, const DegradationConfig& cfg) {
    cfg.validate();
    const int s_total = cfg.scale_1 * cfg.scale_2;
    if (hr.height % s_total != 0 || hr.width % s_total != 0)
        throw std::invalid_argument("degrade: scale_1 * scale_2 must divide both image dims");

    Image y = convolve(hr, cfg.kernel);
    y = downsample(y, cfg.scale_1, cfg.down_mode);
    Rng noise_rng(cfg.seed);
    y = add_noise(y, cfg.noise, noise_rng);
    y = downsample(y, cfg.scale_2, cfg.down_mode);
    y = compress_artifacts(y, cfg.jpeg_quality);
    return y;
}

DegradedPair apply(const synth::SceneSample& hr, const DegradationConfig& cfg) {
    DegradedPair pair;
    pair.hr = hr;
    pair.config = cfg;
    pair.lr = degrade_image(hr.image, cfg);
    return pair;
}

DegradationConfig sample_config(Rng& rng, int scale_1, int scale_2, const DegradationRanges& r) {
    DegradationConfig cfg;
    int half_steps = (r.side_hi - r.side_lo) / 2;
    int side = r.side_lo + 2 * rng.uniform_int(0, std::max(half_steps, 0));
    double sx = rng.uniform(r.sigma_lo, r.sigma_hi);
    double sy = rng.uniform() < r.aniso_prob ? rng.uniform(r.sigma_lo, r.sigma_hi) : sx;
    cfg.kernel = gaussian_kernel(side, sx, sy);
    cfg.scale_1 = scale_1;
    cfg.scale_2 = scale_2;
    cfg.noise.kind = NoiseKind::Gaussian;
    cfg.noise.sigma = rng.uniform(r.noise_lo, r.noise_hi);
    if (rng.uniform() >= r.jpeg_none_prob)
        cfg.jpeg_quality = rng.uniform_int(r.q_lo, r.q_hi);
    cfg.seed = mix64(rng.uniform_int(0, 1 << 30), 0x6e6f697365ULL);
    return cfg;
}

DegradationConfig config_from_kv_text(const std::string& text, uint64_t seed) {
    KvFile kv = KvFile::parse(text);
    if (kv.schema_version() != 1)
        throw std::runtime_error("unsupported degradation config schema_version");
    kv.require_keys_in({"kernel_side", "kernel_sigma_x", "kernel_sigma_y", "scale_1", "scale_2", "noise_kind",
                        "noise_sigma", "jpeg_quality", "down_mode"});

    DegradationConfig cfg;
    int side = static_cast<int>(kv.get_int_or("kernel_side", 1));
    if (side == 1) {
        cfg.kernel = Kernel{};
    } else {
        cfg.kernel = gaussian_kernel(side, kv.get_double_or("kernel_sigma_x", 1.0),
                                     kv.get_double_or("kernel_sigma_y", kv.get_double_or("kernel_sigma_x", 1.0)));
    }
    cfg.scale_1 = static_cast<int>(kv.get_int_or("scale_1", 1));
    cfg.scale_2 = static_cast<int>(kv.get_int_or("scale_2", 1));
    std::string nk = kv.get_or("noise_kind", "gaussian");
    if (nk == "gaussian")
        cfg.noise.kind = NoiseKind::Gaussian;
    else if (nk == "poisson_gaussian")
        cfg.noise.kind = NoiseKind::PoissonGaussian;
    else
        throw std::runtime_error("unknown noise_kind: " + nk);
    cfg.noise.sigma = kv.get_double_or("noise_sigma", 0.0);
    std::string q = kv.get_or("jpeg_quality", "none");
    if (q != "none")
        cfg.jpeg_quality = static_cast<int>(kv.get_int("jpeg_quality"));
    std::string dm = kv.get_or("down_mode", "area");
    if (dm == "area")
        cfg.down_mode = DownMode::Area;
    else if (dm == "nearest")
        cfg.down_mode = DownMode::Nearest;
    else
        throw std::runtime_error("unknown down_mode: " + dm);
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

DegradationConfig config_from_file(const std::string& path, uint64_t seed) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open degradation config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_kv_text(ss.str(), seed);
}

}  // namespace irsr::degrade
