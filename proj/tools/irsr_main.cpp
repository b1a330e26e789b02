#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "irsr/core/container.hpp"
#include "irsr/evalkit/metrics.hpp"
#include "irsr/io/png_io.hpp"
#include "irsr/losses/grad_check.hpp"
#include "irsr/probe/probe.hpp"
#include "irsr/selftest.hpp"
#include "irsr/synth/mask_codec.hpp"
#include "irsr/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace irsr;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> scene_names(const std::string& dir, const std::string& suffix) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string fn = entry.path().filename().string();
        if (fn.size() > suffix.size() && fn.substr(fn.size() - suffix.size()) == suffix)
            names.push_back(fn.substr(0, fn.size() - suffix.size()));
    }
    std::sort(names.begin(), names.end());
    return names;
}

int cmd_gen_data(const std::string& out, int count, uint64_t seed, int size, int instances, int patch) {
    for (int i = 0; i < count; ++i) {
        synth::SceneSpec spec;
        spec.width = spec.height = size;
        spec.num_instances = instances;
        spec.seed = mix64(seed, static_cast<uint64_t>(i));
        synth::SceneSample s = synth::generate_scene(spec, patch);
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%04d", i);
        synth::save_scene(out, name, s);
    }
    std::cout << "wrote " << count << " scenes to " << out << "\n";
    return 0;
}

int cmd_degrade(const std::string& in, const std::string& out, const std::string& config, uint64_t seed) {
    auto names = scene_names(in, "_img.png");
    if (names.empty())
        throw std::runtime_error("no *_img.png inputs in " + in);
    fs::create_directories(out);
    for (size_t i = 0; i < names.size(); ++i) {
        degrade::DegradationConfig cfg = degrade::config_from_file(config, mix64(seed, static_cast<uint64_t>(i)));
        Image hr = read_png_rgb8((fs::path(in) / (names[i] + "_img.png")).string());
        Image lr = degrade::degrade_image(hr, cfg);
        write_png_rgb8((fs::path(out) / (names[i] + "_img.png")).string(), lr);
    }
    std::cout << "degraded " << names.size() << " images into " << out << "\n";
    return 0;
}

int cmd_train(const std::string& config, int case_override, int64_t seed_override, const std::string& out,
              const std::string& resume_path, bool verbose) {
    train::TrainConfig cfg = config.empty() ? train::TrainConfig{} : train::TrainConfig::from_file(config);
    if (case_override >= 0) {
        if (case_override > 2)
            throw UsageError("invalid case: " + std::to_string(case_override));
        cfg.ablation_case = case_override;
    }
    if (seed_override >= 0)
        cfg.seed = static_cast<uint64_t>(seed_override);
    cfg.validate();

    std::unique_ptr<train::Trainer> trainer;
    if (!resume_path.empty()) {
        trainer = train::Trainer::resume(resume_path);
        train::require_config_match(cfg.normalized(), trainer->config());
    } else {
        trainer = std::make_unique<train::Trainer>(cfg);
    }
    trainer->run(out);

    const auto& log = trainer->loss_log();
    if (!log.empty())
        std::cout << "final step " << log.back().step << " l_total " << fmt(log.back().report.l_total) << "\n";
    const auto& ev = trainer->eval_log();
    if (!ev.empty())
        std::cout << "final eval psnr " << fmt(ev.back().psnr_sr) << " (bicubic " << fmt(ev.back().psnr_bicubic)
                  << ")\n";
    if (verbose)
        std::cout << "params checksum " << hex64(trainer->full_checksum()) << "\n";
    std::cout << "checkpoint written to " << (fs::path(out) / "ckpt_final.irsr").string() << "\n";
    return 0;
}

int cmd_sample(const std::string& ckpt, const std::string& lr_path, int steps, double eta, uint64_t seed,
               const std::string& out) {
    auto trainer = train::load_for_inference(ckpt);
    Image lr = read_png_rgb8(lr_path);
    Rng rng(seed);
    train::SuperResolveResult res = trainer->super_resolve(lr, steps, eta, rng);

    fs::create_directories(out);
    std::string stem = fs::path(lr_path).stem().string();
    write_png_rgb8((fs::path(out) / (stem + "_sr.png")).string(), res.sr);
    if (trainer->config().ablation_case != 2) {
        write_png_rgb8((fs::path(out) / (stem + "_srmask.png")).string(), synth::encode_mask_rgb(res.mask));
        std::cout << "mask snap fraction " << fmt(res.snap_fraction) << "\n";
    }
    std::cout << "wrote SR output for " << stem << " to " << out << "\n";
    return 0;
}

int cmd_evaluate(const std::string& pred, const std::string& gt, const std::string& out, int patch, int teacher_dim,
                 uint64_t teacher_seed) {
    auto gt_names = scene_names(gt, "_img.png");
    if (gt_names.empty())
        throw std::runtime_error("no *_img.png ground truth in " + gt);

    teacher::TeacherEncoder enc(teacher::TeacherConfig{patch, teacher_dim, teacher_seed});
    std::ofstream csv(out, std::ios::binary);
    if (!csv)
        throw std::runtime_error("cannot write report: " + out);
    csv << "name,psnr,ssim,feat_dist,mean_iou\n";

    double s_psnr = 0, s_ssim = 0, s_fd = 0;
    int n = 0;
    for (const std::string& name : gt_names) {
        fs::path p_img = fs::path(pred) / (name + "_img.png");
        if (!fs::exists(p_img))
            p_img = fs::path(pred) / (name + "_sr.png");
        if (!fs::exists(p_img))
            continue;
        Image a = read_png_rgb8(p_img.string());
        Image b = read_png_rgb8((fs::path(gt) / (name + "_img.png")).string());
        double v_psnr = evalkit::psnr(a, b);
        double v_ssim = evalkit::ssim(a, b);
        double v_fd = evalkit::feature_dist(a, b, enc);

        double v_iou = -1.0;
        fs::path p_mask = fs::path(pred) / (name + "_mask.png");
        if (!fs::exists(p_mask))
            p_mask = fs::path(pred) / (name + "_srmask.png");
        fs::path g_mask = fs::path(gt) / (name + "_mask.png");
        if (fs::exists(p_mask) && fs::exists(g_mask)) {
            IdMask pm = synth::decode_mask_rgb(read_png_rgb8(p_mask.string()));
            IdMask gm = synth::decode_mask_rgb(read_png_rgb8(g_mask.string()));
            v_iou = evalkit::mean_mask_iou(pm, gm);
        }
        csv << name << ',' << fmt(v_psnr) << ',' << fmt(v_ssim) << ',' << fmt(v_fd) << ',' << fmt(v_iou) << '\n';
        s_psnr += v_psnr;
        s_ssim += v_ssim;
        s_fd += v_fd;
        ++n;
    }
    if (n == 0)
        throw std::runtime_error("no prediction/ground-truth pairs matched");
    csv << "mean," << fmt(s_psnr / n) << ',' << fmt(s_ssim / n) << ',' << fmt(s_fd / n) << ",-1\n";
    std::cout << "evaluated " << n << " pairs; report at " << out << "\n";
    return 0;
}

int cmd_probe(const std::string& ckpt, const std::string& layers, const std::string& out, int scenes, uint64_t seed) {
    auto trainer = train::load_for_inference(ckpt);
    probe::ProbeConfig pc;
    pc.num_scenes = scenes;
    pc.seed = seed;
    probe::ProbeReport report = probe::probe_all_layers(*trainer, pc);

    int only_layer = -1;
    if (layers != "all") {
        try {
            only_layer = std::stoi(layers);
        } catch (...) {
            throw UsageError("invalid --layers value: " + layers);
        }
    }

    std::ofstream csv(out, std::ios::binary);
    if (!csv)
        throw std::runtime_error("cannot write report: " + out);
    csv << "layer,acc_category,acc_instance,degenerate\n";
    for (const auto& r : report.layers) {
        if (only_layer > 0 && r.layer != only_layer)
            continue;
        csv << r.layer << ',' << fmt(r.accuracy_category) << ',' << fmt(r.accuracy_instance) << ','
            << (r.degenerate ? 1 : 0) << '\n';
    }
    std::cout << "probe report at " << out << "\n";
    return 0;
}

int cmd_export_features(const std::string& ckpt, int layer, const std::string& out, int scenes, uint64_t seed) {
    auto trainer = train::load_for_inference(ckpt);
    probe::ProbeConfig pc;
    pc.num_scenes = scenes;
    pc.seed = seed;
    probe::export_features(*trainer, layer, pc, out);
    std::cout << "features exported to " << out << ".bin\n";
    return 0;
}

int cmd_grad_check(int stride, double tol) {
    nn::BackboneConfig bc;
    bc.depth = 2;
    bc.width = 16;
    bc.heads = 2;
    bc.in_channels = 12;
    bc.cond_channels = 6;
    bc.grid_h = bc.grid_w = 4;
    bc.tap_layer = 1;
    bc.seed = 77;
    nn::DiffusionTransformer model(bc);

    Rng rng(123);
    teacher::ProjectionHead head;
    head.init(bc.width, 8, rng);

    const int n = bc.grid_h * bc.grid_w;
    Mat z(n, bc.in_channels), cond(n, bc.cond_channels), eps(n, bc.in_channels), d(n, 8);
    for (int i = 0; i < z.size(); ++i)
        z.data()[i] = rng.normal();
    for (int i = 0; i < cond.size(); ++i)
        cond.data()[i] = rng.normal();
    for (int i = 0; i < eps.size(); ++i)
        eps.data()[i] = rng.normal();
    for (int i = 0; i < d.size(); ++i)
        d.data()[i] = rng.normal();

    std::vector<int32_t> assign(n);
    losses::InstanceScaleTargets targets;
    for (int i = 0; i < n; ++i)
        assign[i] = i % 3;  // a few background patches
    targets.patch_instance = assign;
    targets.target_by_id = {0.0, 1.3, 0.8};

    std::vector<nn::ParamRef> params = model.params();
    for (auto& p : head.params())
        params.push_back(p);
    // give the zero-initialized projections signal so every path is exercised
    for (auto& p : params)
        if (p.name.find("inject") != std::string::npos)
            for (int i = 0; i < p.value->size(); ++i)
                p.value->data()[i] = 0.05 * rng.normal();

    losses::LossWeights w;
    auto loss_value = [&]() {
        auto out = model.forward(z, 3, cond);
        losses::LossReport r;
        r.l_denoise = losses::denoise_loss(eps, out.eps_hat);
        Mat proj = head.forward(out.features);
        r.l_repa = losses::repa_loss(d, proj);
        r.l_is = losses::instance_scale_loss(out.features, targets);
        return losses::total_loss(r, w);
    };

    nn::zero_grads(params);
    auto out = model.forward(z, 3, cond);
    Mat d_eps = losses::denoise_loss_grad(eps, out.eps_hat);
    Mat d_f;
    losses::repa_loss_through_head(d, out.features, head, &d_f, w.lambda_repa);
    d_f += w.lambda_is * losses::instance_scale_loss_grad(out.features, targets);
    model.backward(d_eps, d_f);

    losses::GradCheckResult res = losses::grad_check(loss_value, params, 1e-4, 1e-6, stride);
    std::cout << "checked " << res.checked << " parameter entries\n";
    std::cout << "max relative error " << fmt(res.max_rel_err) << " at " << res.worst_param << "["
              << res.worst_index << "]\n";
    std::cout << (res.pass(tol) ? "gradient check PASSED\n" : "gradient check FAILED\n");
    return res.pass(tol) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"instance-aware diffusion super-resolution toolkit"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate synthetic scenes with instance masks");
    std::string gen_out = "data";
    int gen_count = 16, gen_size = 64, gen_instances = 5, gen_patch = 4;
    uint64_t gen_seed = 0;
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--count", gen_count, "number of scenes");
    gen->add_option("--seed", gen_seed, "base seed");
    gen->add_option("--size", gen_size, "scene side length");
    gen->add_option("--instances", gen_instances, "instances per scene");
    gen->add_option("--patch", gen_patch, "patch size the dims must divide by");

    // degrade
    auto* deg = app.add_subcommand("degrade", "run the degradation pipeline over a directory");
    std::string deg_in, deg_out, deg_cfg;
    uint64_t deg_seed = 0;
    deg->add_option("--in", deg_in, "input directory")->required();
    deg->add_option("--out", deg_out, "output directory")->required();
    deg->add_option("--config", deg_cfg, "degradation config file")->required();
    deg->add_option("--seed", deg_seed, "base seed");

    // train
    auto* tr = app.add_subcommand("train", "train a model");
    std::string tr_cfg, tr_out = "run", tr_resume;
    int tr_case = -1;
    int64_t tr_seed = -1;
    bool verbose = false;
    tr->add_option("--config", tr_cfg, "train config file");
    tr->add_option("--case", tr_case, "ablation case (0 default, 1 no repr. learning, 2 no mask modeling)");
    tr->add_option("--seed", tr_seed, "seed override");
    tr->add_option("--out", tr_out, "output directory");
    tr->add_option("--resume", tr_resume, "checkpoint to resume from");
    tr->add_flag("--verbose", verbose, "print extra details");

    // sample
    auto* sm = app.add_subcommand("sample", "super-resolve an LR image with a trained model");
    std::string sm_ckpt, sm_lr, sm_out = "samples";
    int sm_steps = 10;
    double sm_eta = 0.0;
    uint64_t sm_seed = 0;
    sm->add_option("--ckpt", sm_ckpt, "checkpoint file")->required();
    sm->add_option("--lr", sm_lr, "LR input png")->required();
    sm->add_option("--steps", sm_steps, "DDIM steps");
    sm->add_option("--eta", sm_eta, "DDIM eta");
    sm->add_option("--seed", sm_seed, "sampling seed");
    sm->add_option("--out", sm_out, "output directory");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "image quality metrics between two directories");
    std::string ev_pred, ev_gt, ev_out = "report.csv";
    int ev_patch = 4, ev_tdim = 32;
    uint64_t ev_tseed = 0;
    ev->add_option("--pred", ev_pred, "prediction directory")->required();
    ev->add_option("--gt", ev_gt, "ground truth directory")->required();
    ev->add_option("--out", ev_out, "report csv path");
    ev->add_option("--patch", ev_patch, "teacher patch size");
    ev->add_option("--teacher-dim", ev_tdim, "teacher feature dim");
    ev->add_option("--teacher-seed", ev_tseed, "teacher seed");

    // probe
    auto* pr = app.add_subcommand("probe", "linear probing across layers");
    std::string pr_ckpt, pr_layers = "all", pr_out = "probe.csv";
    int pr_scenes = 16;
    uint64_t pr_seed = 0;
    pr->add_option("--ckpt", pr_ckpt, "checkpoint file")->required();
    pr->add_option("--layers", pr_layers, "'all' or a single layer index");
    pr->add_option("--out", pr_out, "report csv path");
    pr->add_option("--scenes", pr_scenes, "labeled scenes to extract");
    pr->add_option("--seed", pr_seed, "probe seed");

    // export-features
    auto* ex = app.add_subcommand("export-features", "dump per-patch features and labels");
    std::string ex_ckpt, ex_out = "features";
    int ex_layer = 1, ex_scenes = 16;
    uint64_t ex_seed = 0;
    ex->add_option("--ckpt", ex_ckpt, "checkpoint file")->required();
    ex->add_option("--layer", ex_layer, "layer to export");
    ex->add_option("--out", ex_out, "output prefix");
    ex->add_option("--scenes", ex_scenes, "scenes to extract");
    ex->add_option("--seed", ex_seed, "extraction seed");

    // grad-check
    auto* gc = app.add_subcommand("grad-check", "finite-difference check of all loss gradients");
    int gc_stride = 1;
    double gc_tol = 1e-3;
    gc->add_option("--stride", gc_stride, "check every n-th parameter entry");
    gc->add_option("--tol", gc_tol, "relative error tolerance");

    auto* st = app.add_subcommand("selftest", "run the built-in invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << "error[usage]: " << e.what() << "\n";
        return 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_data(gen_out, gen_count, gen_seed, gen_size, gen_instances, gen_patch);
        if (deg->parsed())
            return cmd_degrade(deg_in, deg_out, deg_cfg, deg_seed);
        if (tr->parsed())
            return cmd_train(tr_cfg, tr_case, tr_seed, tr_out, tr_resume, verbose);
        if (sm->parsed())
            return cmd_sample(sm_ckpt, sm_lr, sm_steps, sm_eta, sm_seed, sm_out);
        if (ev->parsed())
            return cmd_evaluate(ev_pred, ev_gt, ev_out, ev_patch, ev_tdim, ev_tseed);
        if (pr->parsed())
            return cmd_probe(pr_ckpt, pr_layers, pr_out, pr_scenes, pr_seed);
        if (ex->parsed())
            return cmd_export_features(ex_ckpt, ex_layer, ex_out, ex_scenes, ex_seed);
        if (gc->parsed())
            return cmd_grad_check(gc_stride, gc_tol);
        if (st->parsed())
            return run_selftest(std::cout) == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "error[usage]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error[runtime]: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
