#pragma once

#include <utility>

#include "irsr/core/image.hpp"
#include "irsr/core/mat.hpp"

namespace irsr::codec {

// One latent token per non-overlapping patch. tokens(n, k) with
// n = gy * gw + gx and k = (dy * p + dx) * 3 + c, i.e. row-major pixels
// within the patch, channels innermost.
struct Latent {
    Mat tokens;  // N x C, N = gh * gw
    int gh = 0, gw = 0;
    int patch = 0;

    int tokens_count() const { return gh * gw; }
    int channels() const { return static_cast<int>(tokens.cols()); }
};

// Lossless space-to-channel rearrangement; a learned autoencoder can be
// swapped in behind the same encode/decode surface.
struct PatchCodec {
    int patch_size = 4;

    int latent_channels() const { return 3 * patch_size * patch_size; }

    Latent encode(const Image& img) const;   // dims must divide by patch_size
    Image decode(const Latent& z) const;     // exact inverse
};

// z = [z_x; z_m]: channel concatenation over the same grid.
Latent join(const Latent& z_x, const Latent& z_m);
std::pair<Latent, Latent> split(const Latent& z);

// Nearest-patch replication of a coarse token grid onto one `factor` times
// finer; used to lift the LR conditioning latent onto the HR grid.
Latent replicate_grid(const Latent& lr, int factor);

}  // namespace irsr::codec
