#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "irsr/core/container.hpp"
#include "irsr/losses/grad_check.hpp"
#include "irsr/synth/scene.hpp"
#include "irsr/teacher/teacher.hpp"

using namespace irsr;
using namespace irsr::teacher;

namespace {

Image random_image(int h, int w, Rng& rng) {
    Image img(h, w);
    for (double& v : img.data)
        v = rng.uniform();
    return img;
}

}  // namespace

TEST_CASE("teacher features are frozen and deterministic") {
    TeacherEncoder enc(TeacherConfig{4, 32, 5});
    Rng rng(1);
    Image img = random_image(32, 32, rng);
    Mat a = enc.features(img);
    Mat b = enc.features(img);
    CHECK(a == b);
    CHECK(a.rows() == 64);  // (32/4)^2 patches
    CHECK(a.cols() == 32);

    uint64_t before = enc.checksum();
    enc.features(img);
    CHECK(enc.checksum() == before);

    TeacherEncoder enc2(TeacherConfig{4, 32, 5});
    CHECK(enc2.checksum() == before);
    CHECK(enc2.features(img) == a);
}

TEST_CASE("perturbing one patch changes the features globally") {
    TeacherEncoder enc(TeacherConfig{4, 32, 9});
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        Image img = random_image(16, 16, rng);
        Mat base = enc.features(img);

        Image poked = img;
        int gy = rng.uniform_int(0, 3), gx = rng.uniform_int(0, 3);
        for (int dy = 0; dy < 4; ++dy)
            for (int dx = 0; dx < 4; ++dx)
                for (int c = 0; c < 3; ++c)
                    poked.at(gy * 4 + dy, gx * 4 + dx, c) =
                        std::clamp(poked.at(gy * 4 + dy, gx * 4 + dx, c) + 0.25, 0.0, 1.0);
        Mat after = enc.features(poked);
        // the mixing layers may spread the change; assert global non-equality
        CHECK((after - base).cwiseAbs().maxCoeff() > 1e-9);
    }
}

TEST_CASE("zero image reproduces the frozen golden feature map") {
    TeacherEncoder enc(TeacherConfig{4, 32, 0xdecafbadULL});
    Image zero(32, 32, 0.0);
    Mat f = enc.features(zero);

    TensorFile golden = read_tensor_file(std::string(IRSR_TEST_DATA_DIR) + "/teacher_zero_golden.bin");
    REQUIRE(golden.shape.size() == 2);
    REQUIRE(golden.shape[0] == f.rows());
    REQUIRE(golden.shape[1] == f.cols());
    double max_err = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i)
        max_err = std::max(max_err, std::abs(f.data()[i] - golden.data[static_cast<size_t>(i)]));
    CHECK(max_err < 1e-12);
}

TEST_CASE("teacher rejects images whose dims do not divide by the patch size") {
    TeacherEncoder enc(TeacherConfig{4, 16, 3});
    CHECK_THROWS(enc.features(Image(30, 32)));
}

TEST_CASE("projection head") {
    SUBCASE("identity-initialized head passes large positive inputs through") {
        Rng rng(4);
        ProjectionHead head;
        head.init(8, 8, rng);
        head.fc1.W = Mat::Identity(8, 8);
        head.fc1.b.setZero();
        head.fc2.W = Mat::Identity(8, 8);
        head.fc2.b.setZero();

        Mat f(3, 8);
        for (int i = 0; i < f.size(); ++i)
            f.data()[i] = 8.0 + (i % 9);  // inside the activation's identity region
        Mat out = head.forward(f);
        CHECK((out - f).cwiseAbs().maxCoeff() < 1e-9);
    }

    SUBCASE("output shape is N x D") {
        Rng rng(5);
        ProjectionHead head;
        head.init(16, 12, rng);
        Mat f = Mat::Zero(7, 16);
        CHECK(head.forward(f).rows() == 7);
        CHECK(head.forward(f).cols() == 12);
    }

    SUBCASE("gradient of the mean output w.r.t. the head parameters matches finite differences") {
        Rng rng(6);
        ProjectionHead head;
        head.init(6, 4, rng);
        Mat f(5, 6);
        for (int i = 0; i < f.size(); ++i)
            f.data()[i] = rng.normal();

        auto params = head.params();
        auto loss_value = [&]() { return head.forward(f).mean(); };

        nn::zero_grads(params);
        Mat out = head.forward(f);
        Mat d_out = Mat::Constant(out.rows(), out.cols(), 1.0 / out.size());
        head.backward(d_out);

        auto res = losses::grad_check(loss_value, params, 1e-4);
        CHECK(res.pass(1e-3));
    }
}

TEST_CASE("external feature files round trip") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "irsr_teacher_feats";
    fs::remove_all(dir);

    Rng rng(7);
    Mat d(12, 16);
    for (int i = 0; i < d.size(); ++i)
        d.data()[i] = rng.normal();
    save_teacher_features(dir.string(), "scene_0000", d);
    Mat back = load_teacher_features(dir.string(), "scene_0000");
    CHECK(back == d);
    fs::remove_all(dir);
}
