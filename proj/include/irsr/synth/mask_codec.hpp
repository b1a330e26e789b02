#pragma once

#include <array>
#include <cstdint>

#include "irsr/core/image.hpp"

namespace irsr::synth {

// Instance IDs are mapped onto a 16x16x16 RGB lattice (channel values are
// multiples of 17, exactly representable in 8 bits) so a mask can travel
// through the same visual codec as an image and still decode exactly.
// Per-channel 4-bit digits are bit-reversed, which spreads small IDs across
// the cube instead of clustering them next to the background color.
constexpr int kMaxMaskId = 4095;           // 4096 codes including background 0
constexpr int kCodeLevelStep = 17;         // byte distance between lattice levels
inline constexpr double kMinCodeSeparation = 17.0 / 255.0;  // L2, [0,1] units

std::array<uint8_t, 3> mask_color(int32_t id);  // throws on id outside [0, 4095]
int32_t mask_id_from_color(uint8_t r, uint8_t g, uint8_t b);  // -1 if not a code

Image encode_mask_rgb(const IdMask& m);
IdMask decode_mask_rgb(const Image& img);  // exact inverse; throws on non-code pixels

// Inference-time decoding of a continuous mask image: every pixel is snapped
// to the nearest code among IDs [0, max_id]. `snap_fraction`, when given,
// receives the fraction of pixels that were already within half the minimum
// code separation of their nearest code.
IdMask snap_mask_rgb(const Image& img, int32_t max_id, double* snap_fraction = nullptr);

}  // namespace irsr::synth
