#include "irsr/codec/patch_codec.hpp"

#include <stdexcept>

namespace irsr::codec {

Latent PatchCodec::encode(const Image& img) const {
    if (patch_size < 1)
        throw std::invalid_argument("PatchCodec: patch_size must be >= 1");
    if (img.height % patch_size != 0 || img.width % patch_size != 0)
        throw std::invalid_argument("PatchCodec::encode: image dims not divisible by patch size");
    Latent z;
    z.patch = patch_size;
    z.gh = img.height / patch_size;
    z.gw = img.width / patch_size;
    z.tokens.resize(z.gh * z.gw, latent_channels());
    const int p = patch_size;
    for (int gy = 0; gy < z.gh; ++gy)
        for (int gx = 0; gx < z.gw; ++gx) {
            int n = gy * z.gw + gx;
            for (int dy = 0; dy < p; ++dy)
                for (int dx = 0; dx < p; ++dx)
                    for (int c = 0; c < 3; ++c)
                        z.tokens(n, (dy * p + dx) * 3 + c) = img.at(gy * p + dy, gx * p + dx, c);
        }
    return z;
}

Image PatchCodec::decode(const Latent& z) const {
    if (z.patch != patch_size)
        throw std::invalid_argument("PatchCodec::decode: latent was built with a different patch size");
    if (z.channels() != latent_channels())
        throw std::invalid_argument("PatchCodec::decode: latent channel count mismatch");
    if (z.tokens.rows() != z.gh * z.gw)
        throw std::invalid_argument("PatchCodec::decode: token count does not match grid");
    const int p = patch_size;
    Image img(z.gh * p, z.gw * p);
    for (int gy = 0; gy < z.gh; ++gy)
        for (int gx = 0; gx < z.gw; ++gx) {
            int n = gy * z.gw + gx;
            for (int dy = 0; dy < p; ++dy)
                for (int dx = 0; dx < p; ++dx)
                    for (int c = 0; c < 3; ++c)
                        img.at(gy * p + dy, gx * p + dx, c) = z.tokens(n, (dy * p + dx) * 3 + c);
        }
    return img;
}

Latent join(const Latent& z_x, const Latent& z_m) {
    if (z_x.gh != z_m.gh || z_x.gw != z_m.gw || z_x.patch != z_m.patch)
        throw std::invalid_argument("join: latent grids differ");
    if (z_x.channels() != z_m.channels())
        throw std::invalid_argument("join: latent channel counts differ");
    Latent z;
    z.gh = z_x.gh;
    z.gw = z_x.gw;
    z.patch = z_x.patch;
    z.tokens.resize(z_x.tokens.rows(), z_x.tokens.cols() * 2);
    z.tokens.leftCols(z_x.tokens.cols()) = z_x.tokens;
    z.tokens.rightCols(z_m.tokens.cols()) = z_m.tokens;
    return z;
}

std::pair<Latent, Latent> split(const Latent& z) {
    if (z.channels() % 2 != 0)
        throw std::invalid_argument("split: joint latent must have an even channel count");
    const int c = z.channels() / 2;
    Latent a, b;
    a.gh = b.gh = z.gh;
    a.gw = b.gw = z.gw;
    a.patch = b.patch = z.patch;
    a.tokens = z.tokens.leftCols(c);
    b.tokens = z.tokens.rightCols(c);
    return {a, b};
}

Latent replicate_grid(const Latent& lr, int factor) {
    if (factor < 1)
        throw std::invalid_argument("replicate_grid: factor must be >= 1");
    if (factor == 1)
        return lr;
    Latent hi;
    hi.gh = lr.gh * factor;
    hi.gw = lr.gw * factor;
    hi.patch = lr.patch;
    hi.tokens.resize(hi.gh * hi.gw, lr.tokens.cols());
    for (int gy = 0; gy < hi.gh; ++gy)
        for (int gx = 0; gx < hi.gw; ++gx)
            hi.tokens.row(gy * hi.gw + gx) = lr.tokens.row((gy / factor) * lr.gw + gx / factor);
    return hi;
}

}  // namespace irsr::codec
