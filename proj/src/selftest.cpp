#include "irsr/selftest.hpp"

#include <cmath>
#include <functional>

#include "irsr/codec/patch_codec.hpp"
#include "irsr/degrade/degrade.hpp"
#include "irsr/diffusion/process.hpp"
#include "irsr/evalkit/metrics.hpp"
#include "irsr/losses/losses.hpp"
#include "irsr/nn/backbone.hpp"
#include "irsr/synth/mask_codec.hpp"
#include "irsr/synth/scene.hpp"

namespace irsr {

namespace {

Image random_image(int h, int w, Rng& rng) {
    Image img(h, w);
    for (double& v : img.data)
        v = rng.uniform();
    return img;
}

}  // namespace

int run_selftest(std::ostream& os) {
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        os << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
        if (!ok)
            ++failures;
    };

    {
        synth::SceneSpec spec;
        spec.seed = 7;
        auto a = synth::generate_scene(spec);
        auto b = synth::generate_scene(spec);
        check("scene determinism", a.image.data == b.image.data && a.mask.data == b.mask.data);

        bool ids_ok = true;
        for (const auto& ins : a.instances)
            ids_ok = ids_ok && ins.area > 0;
        check("scene instances have area", ids_ok);
    }

    {
        synth::SceneSpec spec;
        spec.seed = 42;
        auto s = synth::generate_scene(spec);
        IdMask back = synth::decode_mask_rgb(synth::encode_mask_rgb(s.mask));
        check("mask color code round trip", back.data == s.mask.data);
    }

    {
        Rng rng(3);
        Image img = random_image(32, 32, rng);
        codec::PatchCodec pc{4};
        Image back = pc.decode(pc.encode(img));
        check("patch codec exact round trip", back.data == img.data);

        codec::Latent zx = pc.encode(img);
        codec::Latent zm = pc.encode(random_image(32, 32, rng));
        auto [a, b] = codec::split(codec::join(zx, zm));
        check("join/split identity", a.tokens == zx.tokens && b.tokens == zm.tokens);
    }

    {
        Rng rng(11);
        Image img = random_image(16, 16, rng);
        degrade::DegradationConfig cfg;  // identity chain defaults
        Image y = degrade::degrade_image(img, cfg);
        check("degradation identity chain", y.data == img.data);
    }

    {
        bool ok = true;
        for (auto kind : {diffusion::ScheduleKind::Linear, diffusion::ScheduleKind::Cosine})
            for (int T : {10, 50, 1000}) {
                auto s = diffusion::NoiseSchedule::make(T, kind);
                for (int t = 1; t <= T; ++t)
                    ok = ok && s.alpha_bar[t] < s.alpha_bar[t - 1] && s.alpha[t] > 0 && s.alpha[t] < 1;
            }
        check("noise schedule monotonicity", ok);
    }

    {
        auto s = diffusion::NoiseSchedule::make(10, diffusion::ScheduleKind::Linear);
        Rng rng(5);
        Mat z0(2, 3), eps(2, 3);
        for (int i = 0; i < z0.size(); ++i) {
            z0.data()[i] = rng.normal();
            eps.data()[i] = rng.normal();
        }
        bool ok = true;
        for (int t = 1; t <= 10; ++t) {
            Mat z_t = diffusion::forward_marginal(s, z0, t, eps);
            Mat rec;
            diffusion::ddim_step(s, z_t, eps, t, 0, 0.0, rng, &rec);
            ok = ok && (rec - z0).cwiseAbs().maxCoeff() < 1e-9;
        }
        check("ddim exact inversion with true noise", ok);
    }

    {
        nn::BackboneConfig bc;
        bc.depth = 2;
        bc.width = 16;
        bc.heads = 2;
        bc.in_channels = 12;
        bc.cond_channels = 6;
        bc.grid_h = bc.grid_w = 3;
        bc.seed = 9;
        nn::DiffusionTransformer model(bc);
        Rng rng(1);
        Mat z(9, 12), c1(9, 6), c2(9, 6);
        for (int i = 0; i < z.size(); ++i)
            z.data()[i] = rng.normal();
        for (int i = 0; i < c1.size(); ++i) {
            c1.data()[i] = rng.normal();
            c2.data()[i] = rng.normal();
        }
        Mat e1 = model.forward(z, 3, c1).eps_hat;
        Mat e2 = model.forward(z, 3, c2).eps_hat;
        check("zero-init conditioning identity", (e1 - e2).cwiseAbs().maxCoeff() == 0.0);
    }

    {
        check("attention permutation equivariance", nn::attention_permutation_equivariant(16, 2, 8, 123));
    }

    {
        Rng rng(8);
        Mat d(5, 4), p(5, 4);
        for (int i = 0; i < d.size(); ++i) {
            d.data()[i] = rng.normal();
            p.data()[i] = rng.normal();
        }
        double l = losses::repa_loss(d, p);
        bool ok = l >= -1.0 - 1e-9 && l <= 1.0 + 1e-9;
        double perfect = losses::repa_loss(d, d);
        ok = ok && std::abs(perfect + 1.0) < 1e-6;

        losses::LossReport r;
        r.l_denoise = 1.0;
        r.l_repa = 1.0;
        r.l_is = 1.0;
        losses::LossWeights w;
        ok = ok && std::abs(losses::total_loss(r, w) - 1.6) < 1e-12;
        check("loss ranges and decomposition", ok);
    }

    {
        Rng rng(21);
        Image a = random_image(24, 24, rng);
        bool ok = evalkit::psnr(a, a) == evalkit::kPsnrCap;
        ok = ok && std::abs(evalkit::ssim(a, a) - 1.0) < 1e-12;
        check("metric self-identities", ok);
    }

    os << (failures == 0 ? "selftest: all checks passed\n" : "selftest: FAILURES present\n");
    return failures;
}

}  // namespace irsr
