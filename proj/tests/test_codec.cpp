#include <doctest.h>

#include "irsr/codec/patch_codec.hpp"
#include "irsr/core/rng.hpp"
#include "oracles.hpp"

using namespace irsr;
using namespace irsr::codec;

TEST_CASE("patch size 1 keeps the image as-is") {
    Rng rng(1);
    Image x = oracles::random_image(6, 6, rng);
    PatchCodec pc{1};
    Latent z = pc.encode(x);
    CHECK(z.channels() == 3);
    for (int y = 0; y < 6; ++y)
        for (int px = 0; px < 6; ++px)
            for (int c = 0; c < 3; ++c)
                CHECK(z.tokens(y * 6 + px, c) == x.at(y, px, c));
}

TEST_CASE("encode/decode is an exact round trip") {
    Rng rng(2);
    Image x = oracles::random_image(32, 32, rng);
    PatchCodec pc{4};
    Image back = pc.decode(pc.encode(x));
    CHECK(back.data == x.data);
}

TEST_CASE("8x8 image with p=4 gives a 2x2 grid of 48 channels in row-major patch order") {
    Rng rng(3);
    Image x = oracles::random_image(8, 8, rng);
    PatchCodec pc{4};
    Latent z = pc.encode(x);
    CHECK(z.gh == 2);
    CHECK(z.gw == 2);
    CHECK(z.channels() == 48);

    // index-arithmetic oracle over the documented flattening
    for (int gy = 0; gy < 2; ++gy)
        for (int gx = 0; gx < 2; ++gx)
            for (int dy = 0; dy < 4; ++dy)
                for (int dx = 0; dx < 4; ++dx)
                    for (int c = 0; c < 3; ++c) {
                        int n = gy * 2 + gx;
                        int k = (dy * 4 + dx) * 3 + c;
                        CHECK(z.tokens(n, k) == x.at(gy * 4 + dy, gx * 4 + dx, c));
                    }
}

TEST_CASE("join and split") {
    Rng rng(4);
    PatchCodec pc{4};
    Latent zx = pc.encode(oracles::random_image(16, 16, rng));
    Latent zm = pc.encode(oracles::random_image(16, 16, rng));

    Latent z = join(zx, zm);
    CHECK(z.channels() == 2 * zx.channels());  // joint latent doubles the width

    auto [a, b] = split(z);
    CHECK(a.tokens == zx.tokens);
    CHECK(b.tokens == zm.tokens);

    SUBCASE("zero mask half") {
        Latent zero = zm;
        zero.tokens.setZero();
        Latent j = join(zx, zero);
        CHECK(j.tokens.leftCols(zx.channels()) == zx.tokens);
        CHECK(j.tokens.rightCols(zx.channels()).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("grid mismatch is an error") {
        Latent small = pc.encode(oracles::random_image(8, 8, rng));
        CHECK_THROWS(join(zx, small));
    }

    SUBCASE("decode of split equals decode of the original half") {
        Image da = pc.decode(a);
        Image dx = pc.decode(zx);
        CHECK(da.data == dx.data);
    }
}

TEST_CASE("decode of an all-zero latent is black") {
    PatchCodec pc{4};
    Latent z;
    z.gh = z.gw = 4;
    z.patch = 4;
    z.tokens = Mat::Zero(16, 48);
    Image img = pc.decode(z);
    for (double v : img.data)
        CHECK(v == 0.0);
}

TEST_CASE("codec is linear") {
    Rng rng(5);
    PatchCodec pc{4};
    Image x = oracles::random_image(16, 16, rng);
    Image y = oracles::random_image(16, 16, rng);
    const double a = 0.37, b = -1.21;

    Image mix(16, 16);
    for (size_t i = 0; i < mix.data.size(); ++i)
        mix.data[i] = a * x.data[i] + b * y.data[i];

    Mat lhs = pc.encode(mix).tokens;
    Mat rhs = a * pc.encode(x).tokens + b * pc.encode(y).tokens;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("shape errors") {
    PatchCodec pc{4};
    CHECK_THROWS(pc.encode(Image(30, 32)));
    Latent z;
    z.gh = z.gw = 2;
    z.patch = 2;  // decoder built for p=4
    z.tokens = Mat::Zero(4, 12);
    CHECK_THROWS(pc.decode(z));
}

TEST_CASE("nearest-patch grid replication") {
    Rng rng(6);
    PatchCodec pc{2};
    Latent lr = pc.encode(oracles::random_image(4, 4, rng));  // 2x2 grid
    Latent hi = replicate_grid(lr, 2);                        // 4x4 grid
    CHECK(hi.gh == 4);
    for (int gy = 0; gy < 4; ++gy)
        for (int gx = 0; gx < 4; ++gx)
            CHECK(hi.tokens.row(gy * 4 + gx) == lr.tokens.row((gy / 2) * 2 + gx / 2));
}
