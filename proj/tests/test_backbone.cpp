#include <doctest.h>

#include <cmath>

#include "irsr/losses/grad_check.hpp"
#include "irsr/losses/losses.hpp"
#include "irsr/nn/backbone.hpp"
#include "irsr/teacher/teacher.hpp"

using namespace irsr;
using namespace irsr::nn;

namespace {

BackboneConfig tiny_config() {
    BackboneConfig bc;
    bc.depth = 2;
    bc.width = 16;
    bc.heads = 2;
    bc.in_channels = 12;
    bc.cond_channels = 6;
    bc.grid_h = bc.grid_w = 4;
    bc.tap_layer = 1;
    bc.seed = 31;
    return bc;
}

Mat randn(int r, int c, Rng& rng) {
    Mat m(r, c);
    for (int i = 0; i < m.size(); ++i)
        m.data()[i] = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("tap layer default maps the reference fraction onto toy depths") {
    BackboneConfig bc;
    bc.depth = 8;
    CHECK(bc.resolved_tap() == 3);  // round(8 * 10/28)
    bc.depth = 28;
    CHECK(bc.resolved_tap() == 10);
    bc.depth = 2;
    CHECK(bc.resolved_tap() == 1);
    bc.depth = 8;
    bc.tap_layer = 5;
    CHECK(bc.resolved_tap() == 5);
}

TEST_CASE("zero-initialized conditioning branch leaves the output condition-independent") {
    DiffusionTransformer model(tiny_config());
    Rng rng(2);
    Mat z = randn(16, 12, rng);
    for (int trial = 0; trial < 10; ++trial) {
        Mat c1 = randn(16, 6, rng);
        Mat c2 = randn(16, 6, rng);
        Mat e1 = model.forward(z, 4, c1).eps_hat;
        Mat e2 = model.forward(z, 4, c2).eps_hat;
        CHECK((e1 - e2).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("output shape matches the input; features carry one row per token") {
    DiffusionTransformer model(tiny_config());
    Rng rng(3);
    Mat z = randn(16, 12, rng);
    Mat cond = randn(16, 6, rng);
    auto out = model.forward(z, 7, cond);
    CHECK(out.eps_hat.rows() == 16);
    CHECK(out.eps_hat.cols() == 12);
    CHECK(out.features.rows() == 16);
    CHECK(out.features.cols() == 16);

    CHECK_THROWS(model.forward(randn(15, 12, rng), 7, cond));
    CHECK_THROWS(model.forward(z, 7, randn(16, 5, rng)));
}

TEST_CASE("one gradient step on a condition-dependent target breaks condition independence") {
    DiffusionTransformer model(tiny_config());
    Rng rng(5);
    Mat z = randn(16, 12, rng);
    Mat c1 = randn(16, 6, rng);
    Mat c2 = randn(16, 6, rng);

    auto params = model.params();
    zero_grads(params);
    auto out = model.forward(z, 3, c1);
    // target depends on the condition: push eps_hat toward a projection of it
    Mat target(16, 12);
    target.leftCols(6) = c1;
    target.rightCols(6) = c1;
    Mat d_eps = losses::denoise_loss_grad(target, out.eps_hat);
    model.backward(d_eps, Mat());
    for (auto& p : params)
        *p.value -= 0.1 * *p.grad;

    Mat e1 = model.forward(z, 3, c1).eps_hat;
    Mat e2 = model.forward(z, 3, c2).eps_hat;
    CHECK((e1 - e2).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("tapped features equal the truncated forward pass at every layer") {
    Rng rng(8);
    Mat z, cond;
    {
        DiffusionTransformer model(tiny_config());
        z = randn(16, 12, rng);
        cond = randn(16, 6, rng);
        auto feats = model.layer_features(z, 2, cond);
        REQUIRE(static_cast<int>(feats.size()) == 2);

        for (int layer = 1; layer <= 2; ++layer) {
            BackboneConfig bc = tiny_config();
            bc.tap_layer = layer;
            DiffusionTransformer tapped(bc);
            auto out = tapped.forward(z, 2, cond);
            CHECK(out.features == feats[layer - 1]);
        }
        // different layers expose different tensors
        CHECK((feats[0] - feats[1]).cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("forward is a pure function of its inputs") {
    DiffusionTransformer model(tiny_config());
    Rng rng(9);
    Mat z = randn(16, 12, rng);
    Mat cond = randn(16, 6, rng);
    Mat a = model.forward(z, 5, cond).eps_hat;
    Mat b = model.forward(z, 5, cond).eps_hat;
    CHECK(a == b);
    uint64_t before = model.checksum();
    model.forward(z, 5, cond);
    CHECK(model.checksum() == before);
}

TEST_CASE("attention is permutation-equivariant before positional embeddings") {
    CHECK(attention_permutation_equivariant(16, 2, 8, 101));
    CHECK(attention_permutation_equivariant(32, 4, 12, 202));
}

TEST_CASE("analytic gradients of the total loss match finite differences") {
    BackboneConfig bc = tiny_config();
    DiffusionTransformer model(bc);
    Rng rng(12);
    teacher::ProjectionHead head;
    head.init(bc.width, 8, rng);

    const int n = 16;
    Mat z = randn(n, 12, rng);
    Mat cond = randn(n, 6, rng);
    Mat eps = randn(n, 12, rng);
    Mat d = randn(n, 8, rng);

    losses::InstanceScaleTargets targets;
    targets.patch_instance.assign(n, 0);
    for (int i = 0; i < n; ++i)
        targets.patch_instance[i] = i % 3;
    targets.target_by_id = {0.0, 1.1, 0.7};

    std::vector<ParamRef> params = model.params();
    for (auto& p : head.params())
        params.push_back(p);
    // the zero-initialized injections would hide the branch from the loss
    for (auto& p : params)
        if (p.name.find("inject") != std::string::npos)
            for (int i = 0; i < p.value->size(); ++i)
                p.value->data()[i] = 0.05 * rng.normal();

    losses::LossWeights w;
    auto loss_value = [&]() {
        auto out = model.forward(z, 3, cond);
        losses::LossReport r;
        r.l_denoise = losses::denoise_loss(eps, out.eps_hat);
        r.l_repa = losses::repa_loss(d, head.forward(out.features));
        r.l_is = losses::instance_scale_loss(out.features, targets);
        return losses::total_loss(r, w);
    };

    zero_grads(params);
    auto out = model.forward(z, 3, cond);
    Mat d_eps = losses::denoise_loss_grad(eps, out.eps_hat);
    Mat d_f;
    losses::repa_loss_through_head(d, out.features, head, &d_f, w.lambda_repa);
    d_f += w.lambda_is * losses::instance_scale_loss_grad(out.features, targets);
    model.backward(d_eps, d_f);

    auto res = losses::grad_check(loss_value, params, 1e-4, 1e-6, /*stride=*/7);
    INFO("worst: ", res.worst_param, "[", res.worst_index, "] rel err ", res.max_rel_err);
    CHECK(res.pass(1e-3));
    CHECK(res.checked > 500);
}

TEST_CASE("parameter names are unique and stable") {
    DiffusionTransformer model(tiny_config());
    auto params = model.params();
    std::set<std::string> names;
    for (auto& p : params)
        names.insert(p.name);
    CHECK(names.size() == params.size());
    CHECK(param_count(params) > 0);
}
