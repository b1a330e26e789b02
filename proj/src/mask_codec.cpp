#include "irsr/synth/mask_codec.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace irsr::synth {

namespace {

constexpr uint8_t kRev4[16] = {0, 8, 4, 12, 2, 10, 6, 14, 1, 9, 5, 13, 3, 11, 7, 15};
// inverse permutation of kRev4 (bit reversal is an involution)
constexpr uint8_t kFwd4[16] = {0, 8, 4, 12, 2, 10, 6, 14, 1, 9, 5, 13, 3, 11, 7, 15};

inline int level_of_byte(uint8_t v) {
    if (v % kCodeLevelStep != 0)
        return -1;
    return v / kCodeLevelStep;
}

}  // namespace

std::array<uint8_t, 3> mask_color(int32_t id) {
    if (id < 0 || id > kMaxMaskId)
        throw std::out_of_range("mask_color: instance id " + std::to_string(id) + " exceeds code capacity");
    int d2 = (id >> 8) & 0xf;
    int d1 = (id >> 4) & 0xf;
    int d0 = id & 0xf;
    return {static_cast<uint8_t>(kRev4[d2] * kCodeLevelStep), static_cast<uint8_t>(kRev4[d1] * kCodeLevelStep),
            static_cast<uint8_t>(kRev4[d0] * kCodeLevelStep)};
}

int32_t mask_id_from_color(uint8_t r, uint8_t g, uint8_t b) {
    int l2 = level_of_byte(r), l1 = level_of_byte(g), l0 = level_of_byte(b);
    if (l2 < 0 || l1 < 0 || l0 < 0)
        return -1;
    return (kFwd4[l2] << 8) | (kFwd4[l1] << 4) | kFwd4[l0];
}

Image encode_mask_rgb(const IdMask& m) {
    Image img(m.height, m.width);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            auto c = mask_color(m.at(y, x));
            for (int ch = 0; ch < 3; ++ch)
                img.at(y, x, ch) = c[ch] / 255.0;
        }
    return img;
}

IdMask decode_mask_rgb(const Image& img) {
    IdMask m(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            uint8_t r = static_cast<uint8_t>(std::lround(img.at(y, x, 0) * 255.0));
            uint8_t g = static_cast<uint8_t>(std::lround(img.at(y, x, 1) * 255.0));
            uint8_t b = static_cast<uint8_t>(std::lround(img.at(y, x, 2) * 255.0));
            int32_t id = mask_id_from_color(r, g, b);
            if (id < 0)
                throw std::runtime_error("decode_mask_rgb: pixel is not a mask color code");
            m.at(y, x) = id;
        }
    return m;
}

IdMask snap_mask_rgb(const Image& img, int32_t max_id, double* snap_fraction) {
    if (max_id < 0 || max_id > kMaxMaskId)
        throw std::out_of_range("snap_mask_rgb: max_id out of range");
    std::vector<std::array<double, 3>> codes(static_cast<size_t>(max_id) + 1);
    for (int32_t id = 0; id <= max_id; ++id) {
        auto c = mask_color(id);
        codes[id] = {c[0] / 255.0, c[1] / 255.0, c[2] / 255.0};
    }

    IdMask m(img.height, img.width);
    const double half_sep = 0.5 * kMinCodeSeparation;
    size_t close = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double best = 1e30;
            int32_t best_id = 0;
            for (int32_t id = 0; id <= max_id; ++id) {
                double d0 = img.at(y, x, 0) - codes[id][0];
                double d1 = img.at(y, x, 1) - codes[id][1];
                double d2 = img.at(y, x, 2) - codes[id][2];
                double d = d0 * d0 + d1 * d1 + d2 * d2;
                if (d < best) {
                    best = d;
                    best_id = id;
                }
            }
            m.at(y, x) = best_id;
            if (std::sqrt(best) <= half_sep)
                ++close;
        }
    if (snap_fraction)
        *snap_fraction = img.height > 0 && img.width > 0
                             ? static_cast<double>(close) / (static_cast<double>(img.height) * img.width)
                             : 0.0;
    return m;
}

}  // namespace irsr::synth
