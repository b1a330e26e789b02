#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "irsr/synth/mask_codec.hpp"
#include "irsr/synth/scene.hpp"

using namespace irsr;
using namespace irsr::synth;

TEST_CASE("generate_scene is deterministic for a fixed seed") {
    SceneSpec spec;
    spec.seed = 7;
    SceneSample a = generate_scene(spec);
    SceneSample b = generate_scene(spec);
    CHECK(a.image.data == b.image.data);
    CHECK(a.mask.data == b.mask.data);
    REQUIRE(a.instances.size() == b.instances.size());
    for (size_t i = 0; i < a.instances.size(); ++i) {
        CHECK(a.instances[i].area == b.instances[i].area);
        CHECK(a.instances[i].category == b.instances[i].category);
    }
}

TEST_CASE("single disk scene has exactly ids {0, 1}") {
    SceneSpec spec;
    spec.num_instances = 1;
    spec.shape_palette = {ShapeKind::Disk};
    spec.seed = 3;
    SceneSample s = generate_scene(spec);
    std::set<int32_t> ids(s.mask.data.begin(), s.mask.data.end());
    CHECK(ids == std::set<int32_t>{0, 1});
    REQUIRE(s.instances.size() == 1);
    CHECK(s.instances[0].category == ShapeKind::Disk);
}

TEST_CASE("instance areas sum to the non-background pixel count") {
    SceneSpec spec;
    spec.seed = 42;
    spec.num_instances = 5;
    SceneSample s = generate_scene(spec);

    // brute-force pixel count over the emitted mask
    int64_t background = 0;
    for (int32_t v : s.mask.data)
        background += v == 0;
    int64_t from_instances = 0;
    for (const auto& ins : s.instances)
        from_instances += ins.area;
    CHECK(from_instances == static_cast<int64_t>(s.mask.data.size()) - background);
}

TEST_CASE("mask ids always match the instance list") {
    for (uint64_t seed = 0; seed < 100; ++seed) {
        SceneSpec spec;
        spec.seed = seed;
        spec.num_instances = 1 + static_cast<int>(seed % 16);
        SceneSample s = generate_scene(spec);

        std::set<int32_t> mask_ids(s.mask.data.begin(), s.mask.data.end());
        mask_ids.erase(0);
        std::set<int32_t> listed;
        for (const auto& ins : s.instances)
            listed.insert(ins.id);
        CHECK(mask_ids == listed);
        // contiguous 1..N
        CHECK(listed.size() == s.instances.size());
        if (!listed.empty()) {
            CHECK(*listed.begin() == 1);
            CHECK(*listed.rbegin() == static_cast<int32_t>(listed.size()));
        }
    }
}

TEST_CASE("scene dims must divide by the patch size") {
    SceneSpec spec;
    spec.width = 30;  // not a multiple of 4
    CHECK_THROWS(generate_scene(spec, 4));
    CHECK_THROWS(generate_scene(SceneSpec{.num_instances = 0}));
}

TEST_CASE("mask color codes") {
    SUBCASE("all-zero mask encodes to the background color everywhere") {
        IdMask m(8, 8, 0);
        Image img = encode_mask_rgb(m);
        auto bg = mask_color(0);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                for (int c = 0; c < 3; ++c)
                    CHECK(img.at(y, x, c) == bg[c] / 255.0);
    }

    SUBCASE("round trip on a generated scene is exact") {
        SceneSpec spec;
        spec.seed = 42;
        SceneSample s = generate_scene(spec);
        IdMask back = decode_mask_rgb(encode_mask_rgb(s.mask));
        CHECK(back.data == s.mask.data);
    }

    SUBCASE("round trip across the full id range") {
        IdMask m(64, 64);
        for (int i = 0; i < 4096; ++i)
            m.data[i] = i;
        IdMask back = decode_mask_rgb(encode_mask_rgb(m));
        CHECK(back.data == m.data);
    }

    SUBCASE("minimum pairwise code separation is 17/255") {
        // enumerate the code table; nearest pair by L2
        double min_d2 = 1e30;
        std::vector<std::array<uint8_t, 3>> codes(4096);
        for (int i = 0; i < 4096; ++i)
            codes[i] = mask_color(i);
        for (int i = 0; i < 4096; ++i)
            for (int j = i + 1; j < 4096; ++j) {
                double d2 = 0;
                for (int c = 0; c < 3; ++c) {
                    double d = (codes[i][c] - codes[j][c]) / 255.0;
                    d2 += d * d;
                }
                min_d2 = std::min(min_d2, d2);
            }
        CHECK(std::sqrt(min_d2) == doctest::Approx(kMinCodeSeparation).epsilon(1e-12));
        CHECK(std::sqrt(min_d2) >= kMinCodeSeparation - 1e-12);
    }

    SUBCASE("id overflow is an explicit error") {
        CHECK_THROWS(mask_color(4096));
        IdMask m(1, 1, 5000);
        CHECK_THROWS(encode_mask_rgb(m));
    }

    SUBCASE("snapping a slightly perturbed mask image recovers the ids") {
        SceneSpec spec;
        spec.seed = 9;
        SceneSample s = generate_scene(spec);
        Image img = encode_mask_rgb(s.mask);
        for (size_t i = 0; i < img.data.size(); ++i)
            img.data[i] += ((i * 2654435761u) % 17 / 17.0 - 0.5) * 0.02;
        double frac = 0.0;
        IdMask snapped = snap_mask_rgb(img, 16, &frac);
        CHECK(snapped.data == s.mask.data);
        CHECK(frac == 1.0);
    }
}

TEST_CASE("scene save/load round trip") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "irsr_scene_io_test";
    fs::remove_all(dir);

    SceneSpec spec;
    spec.seed = 13;
    SceneSample s = generate_scene(spec);
    save_scene(dir.string(), "s0", s);
    SceneSample back = load_scene(dir.string(), "s0");

    CHECK(back.mask.data == s.mask.data);
    REQUIRE(back.instances.size() == s.instances.size());
    for (size_t i = 0; i < s.instances.size(); ++i) {
        CHECK(back.instances[i].area == s.instances[i].area);
        CHECK(back.instances[i].category == s.instances[i].category);
        CHECK(back.instances[i].x0 == s.instances[i].x0);
    }
    // 8-bit quantization bounds the image error
    double max_err = 0.0;
    for (size_t i = 0; i < s.image.data.size(); ++i)
        max_err = std::max(max_err, std::abs(s.image.data[i] - back.image.data[i]));
    CHECK(max_err <= 0.5 / 255.0 + 1e-12);
    fs::remove_all(dir);
}
