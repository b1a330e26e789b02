// Test-only reference implementations, written independently of the library
// fast paths they check.
#pragma once

#include <cmath>
#include <vector>

#include "irsr/core/image.hpp"
#include "irsr/core/rng.hpp"
#include "irsr/degrade/degrade.hpp"

namespace oracles {

using irsr::Image;

// mirror-with-edge reflection by explicit index folding
inline int fold(int i, int n) {
    if (n == 1)
        return 0;
    int period = 2 * n;
    i %= period;
    if (i < 0)
        i += period;
    return i < n ? i : period - 1 - i;
}

inline Image conv_direct(const Image& x, const irsr::degrade::Kernel& k) {
    Image out(x.height, x.width);
    const int h = k.side / 2;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < x.height; ++y)
            for (int px = 0; px < x.width; ++px) {
                double acc = 0.0;
                for (int u = 0; u < k.side; ++u)
                    for (int v = 0; v < k.side; ++v)
                        acc += k.w[static_cast<size_t>(u) * k.side + v] *
                               x.at(fold(y + u - h, x.height), fold(px + v - h, x.width), c);
                out.at(y, px, c) = acc;
            }
    return out;
}

inline Image block_mean(const Image& x, int s) {
    Image out(x.height / s, x.width / s);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int px = 0; px < out.width; ++px) {
                double acc = 0.0;
                for (int dy = 0; dy < s; ++dy)
                    for (int dx = 0; dx < s; ++dx)
                        acc += x.at(y * s + dy, px * s + dx, c);
                out.at(y, px, c) = acc / (s * s);
            }
    return out;
}

// noise per the documented stream contract: row-major (y, x, channel) draws
// from Rng(seed), clamped afterwards
inline Image add_gaussian_noise(const Image& x, double sigma, uint64_t seed) {
    if (sigma == 0.0)
        return x;
    irsr::Rng rng(seed);
    Image out(x.height, x.width);
    for (size_t i = 0; i < x.data.size(); ++i) {
        double v = x.data[i] + sigma * rng.normal();
        out.data[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    return out;
}

// JPEG-style round trip on one 8x8 block via explicit cosine sums
inline void dct_quant_block(const double in[64], int quality, double out[64]) {
    static const double base[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                                    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                                    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                                    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
    double scale = quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
    double qt[64];
    for (int i = 0; i < 64; ++i) {
        double q = std::floor((base[i] * scale + 50.0) / 100.0);
        qt[i] = q < 1 ? 1 : (q > 255 ? 255 : q);
    }

    double shifted[64], coef[64];
    for (int i = 0; i < 64; ++i)
        shifted[i] = in[i] * 255.0 - 128.0;

    auto cf = [](int k) { return k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0); };
    for (int ky = 0; ky < 8; ++ky)
        for (int kx = 0; kx < 8; ++kx) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    acc += shifted[y * 8 + x] * std::cos(M_PI * (2 * y + 1) * ky / 16.0) *
                           std::cos(M_PI * (2 * x + 1) * kx / 16.0);
            coef[ky * 8 + kx] = cf(ky) * cf(kx) * acc;
        }
    for (int i = 0; i < 64; ++i)
        coef[i] = std::round(coef[i] / qt[i]) * qt[i];
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int ky = 0; ky < 8; ++ky)
                for (int kx = 0; kx < 8; ++kx)
                    acc += cf(ky) * cf(kx) * coef[ky * 8 + kx] * std::cos(M_PI * (2 * y + 1) * ky / 16.0) *
                           std::cos(M_PI * (2 * x + 1) * kx / 16.0);
            double v = (acc + 128.0) / 255.0;
            out[y * 8 + x] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        }
}

inline Image random_image(int h, int w, irsr::Rng& rng) {
    Image img(h, w);
    for (double& v : img.data)
        v = rng.uniform();
    return img;
}

inline double max_abs_diff(const Image& a, const Image& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

inline double global_mean(const Image& a) {
    double s = 0.0;
    for (double v : a.data)
        s += v;
    return s / static_cast<double>(a.data.size());
}

}  // namespace oracles
