#include "irsr/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <stdexcept>

#include "irsr/core/container.hpp"
#include "irsr/evalkit/metrics.hpp"
#include "irsr/synth/mask_codec.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace irsr::train {

namespace {

// independent derived-seed streams
constexpr uint64_t kSceneStream = 0x7363656e65ULL;
constexpr uint64_t kEvalSceneStream = 0x6576616c73ULL;
constexpr uint64_t kEvalDegStream = 0x6576616c64ULL;
constexpr uint64_t kEvalSampleStream = 0x6576616c72ULL;
constexpr uint64_t kModelStream = 0x6d6f64656cULL;
constexpr uint64_t kHeadStream = 0x68656164ULL;
constexpr uint64_t kTeacherStream = 0x74656163ULL;
constexpr uint64_t kTrainStream = 0x747261696eULL;

constexpr char kCkptMagic[8] = {'I', 'R', 'S', 'R', 'C', 'K', 'P', '1'};

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void TrainConfig::validate() const {
    if (ablation_case < 0 || ablation_case > 2)
        throw std::invalid_argument("invalid case: must be 0, 1 or 2");
    if (steps < 0 || batch_size < 1)
        throw std::invalid_argument("train config: bad steps or batch size");
    if (lr <= 0.0)
        throw std::invalid_argument("train config: lr must be positive");
    if (T < 1)
        throw std::invalid_argument("train config: T must be >= 1");
    weights.validate();
    if (scene_size < 8 || num_instances < 1 || num_instances > 16 || dataset_size < 1)
        throw std::invalid_argument("train config: bad data settings");
    if (patch_size < 1 || scene_size % (patch_size * scale_total()) != 0)
        throw std::invalid_argument("train config: patch_size * scale must divide scene_size");
    if (grid_side() % scale_total() != 0)
        throw std::invalid_argument("train config: scale must divide the latent grid");
    if (teacher_dim < 4)
        throw std::invalid_argument("train config: teacher_dim too small");
    if (eval_scenes < 1 || eval_ddim_steps < 1)
        throw std::invalid_argument("train config: bad eval settings");
    if (!teacher_features_dir.empty() && data_dir.empty())
        throw std::invalid_argument("train config: teacher_features_dir requires data_dir");
}

TrainConfig TrainConfig::normalized() const {
    TrainConfig c = *this;
    if (c.ablation_case == 1) {
        c.weights.lambda_repa = 0.0;
        c.weights.lambda_is = 0.0;
    }
    return c;
}

TrainConfig TrainConfig::from_kv(const KvFile& kv) {
    if (kv.schema_version() != 1)
        throw std::runtime_error("unsupported train config schema_version");
    kv.require_keys_in({"case", "steps", "batch_size", "lr", "schedule", "T", "seed", "eval_every", "ckpt_every",
                        "lambda_repa", "lambda_is", "scene_size", "num_instances", "dataset_size", "patch_size",
                        "scale_1", "scale_2", "blur_sigma_lo", "blur_sigma_hi", "kernel_side_lo", "kernel_side_hi",
                        "aniso_prob", "noise_lo", "noise_hi", "jpeg_none_prob", "jpeg_q_lo", "jpeg_q_hi", "depth",
                        "width", "heads", "tap_layer", "n_inject", "mlp_ratio", "teacher_dim", "eval_scenes",
                        "eval_ddim_steps", "data_dir", "teacher_features_dir"});
    TrainConfig c;
    c.ablation_case = static_cast<int>(kv.get_int_or("case", 0));
    c.steps = static_cast<int>(kv.get_int_or("steps", c.steps));
    c.batch_size = static_cast<int>(kv.get_int_or("batch_size", c.batch_size));
    c.lr = kv.get_double_or("lr", c.lr);
    c.schedule = diffusion::schedule_kind_from_name(kv.get_or("schedule", "linear"));
    c.T = static_cast<int>(kv.get_int_or("T", c.T));
    c.seed = kv.get_uint_or("seed", c.seed);
    c.eval_every = static_cast<int>(kv.get_int_or("eval_every", c.eval_every));
    c.ckpt_every = static_cast<int>(kv.get_int_or("ckpt_every", c.ckpt_every));
    c.weights.lambda_repa = kv.get_double_or("lambda_repa", c.weights.lambda_repa);
    c.weights.lambda_is = kv.get_double_or("lambda_is", c.weights.lambda_is);
    c.scene_size = static_cast<int>(kv.get_int_or("scene_size", c.scene_size));
    c.num_instances = static_cast<int>(kv.get_int_or("num_instances", c.num_instances));
    c.dataset_size = static_cast<int>(kv.get_int_or("dataset_size", c.dataset_size));
    c.patch_size = static_cast<int>(kv.get_int_or("patch_size", c.patch_size));
    c.scale_1 = static_cast<int>(kv.get_int_or("scale_1", c.scale_1));
    c.scale_2 = static_cast<int>(kv.get_int_or("scale_2", c.scale_2));
    c.deg.sigma_lo = kv.get_double_or("blur_sigma_lo", c.deg.sigma_lo);
    c.deg.sigma_hi = kv.get_double_or("blur_sigma_hi", c.deg.sigma_hi);
    c.deg.side_lo = static_cast<int>(kv.get_int_or("kernel_side_lo", c.deg.side_lo));
    c.deg.side_hi = static_cast<int>(kv.get_int_or("kernel_side_hi", c.deg.side_hi));
    c.deg.aniso_prob = kv.get_double_or("aniso_prob", c.deg.aniso_prob);
    c.deg.noise_lo = kv.get_double_or("noise_lo", c.deg.noise_lo);
    c.deg.noise_hi = kv.get_double_or("noise_hi", c.deg.noise_hi);
    c.deg.jpeg_none_prob = kv.get_double_or("jpeg_none_prob", c.deg.jpeg_none_prob);
    c.deg.q_lo = static_cast<int>(kv.get_int_or("jpeg_q_lo", c.deg.q_lo));
    c.deg.q_hi = static_cast<int>(kv.get_int_or("jpeg_q_hi", c.deg.q_hi));
    c.depth = static_cast<int>(kv.get_int_or("depth", c.depth));
    c.width = static_cast<int>(kv.get_int_or("width", c.width));
    c.heads = static_cast<int>(kv.get_int_or("heads", c.heads));
    c.tap_layer = static_cast<int>(kv.get_int_or("tap_layer", c.tap_layer));
    c.n_inject = static_cast<int>(kv.get_int_or("n_inject", c.n_inject));
    c.mlp_ratio = static_cast<int>(kv.get_int_or("mlp_ratio", c.mlp_ratio));
    c.teacher_dim = static_cast<int>(kv.get_int_or("teacher_dim", c.teacher_dim));
    c.eval_scenes = static_cast<int>(kv.get_int_or("eval_scenes", c.eval_scenes));
    c.eval_ddim_steps = static_cast<int>(kv.get_int_or("eval_ddim_steps", c.eval_ddim_steps));
    c.data_dir = kv.get_or("data_dir", "");
    c.teacher_features_dir = kv.get_or("teacher_features_dir", "");
    c.validate();
    return c;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    return from_kv(KvFile::load(path));
}

KvFile TrainConfig::to_kv() const {
    KvFile kv;
    kv.set_int("schema_version", 1);
    kv.set_int("case", ablation_case);
    kv.set_int("steps", steps);
    kv.set_int("batch_size", batch_size);
    kv.set_double("lr", lr);
    kv.set("schedule", diffusion::schedule_kind_name(schedule));
    kv.set_int("T", T);
    kv.set_uint("seed", seed);
    kv.set_int("eval_every", eval_every);
    kv.set_int("ckpt_every", ckpt_every);
    kv.set_double("lambda_repa", weights.lambda_repa);
    kv.set_double("lambda_is", weights.lambda_is);
    kv.set_int("scene_size", scene_size);
    kv.set_int("num_instances", num_instances);
    kv.set_int("dataset_size", dataset_size);
    kv.set_int("patch_size", patch_size);
    kv.set_int("scale_1", scale_1);
    kv.set_int("scale_2", scale_2);
    kv.set_double("blur_sigma_lo", deg.sigma_lo);
    kv.set_double("blur_sigma_hi", deg.sigma_hi);
    kv.set_int("kernel_side_lo", deg.side_lo);
    kv.set_int("kernel_side_hi", deg.side_hi);
    kv.set_double("aniso_prob", deg.aniso_prob);
    kv.set_double("noise_lo", deg.noise_lo);
    kv.set_double("noise_hi", deg.noise_hi);
    kv.set_double("jpeg_none_prob", deg.jpeg_none_prob);
    kv.set_int("jpeg_q_lo", deg.q_lo);
    kv.set_int("jpeg_q_hi", deg.q_hi);
    kv.set_int("depth", depth);
    kv.set_int("width", width);
    kv.set_int("heads", heads);
    kv.set_int("tap_layer", tap_layer);
    kv.set_int("n_inject", n_inject);
    kv.set_int("mlp_ratio", mlp_ratio);
    kv.set_int("teacher_dim", teacher_dim);
    kv.set_int("eval_scenes", eval_scenes);
    kv.set_int("eval_ddim_steps", eval_ddim_steps);
    kv.set("data_dir", data_dir);
    kv.set("teacher_features_dir", teacher_features_dir);
    return kv;
}

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(cfg.normalized()),
      schedule_(diffusion::NoiseSchedule::make(cfg_.T, cfg_.schedule)),
      codec_{cfg_.patch_size},
      adam_(cfg_.lr),
      rng_(Rng::derived(cfg_.seed, kTrainStream)) {
    cfg_.validate();

    teacher_ = std::make_unique<teacher::TeacherEncoder>(
        teacher::TeacherConfig{cfg_.patch_size, cfg_.teacher_dim, mix64(cfg_.seed, kTeacherStream)});

    nn::BackboneConfig bc;
    bc.depth = cfg_.depth;
    bc.width = cfg_.width;
    bc.heads = cfg_.heads;
    bc.in_channels = cfg_.model_in_channels();
    bc.cond_channels = cfg_.latent_channels();
    bc.grid_h = bc.grid_w = cfg_.grid_side();
    bc.tap_layer = cfg_.tap_layer;
    bc.n_inject = cfg_.n_inject;
    bc.mlp_ratio = cfg_.mlp_ratio;
    bc.seed = mix64(cfg_.seed, kModelStream);
    model_ = std::make_unique<nn::DiffusionTransformer>(bc);

    Rng head_rng(mix64(cfg_.seed, kHeadStream));
    head_.init(cfg_.width, cfg_.teacher_dim, head_rng);

    // construction-time grid agreement between backbone features and teacher
    synth::SceneSpec probe_spec;
    probe_spec.width = probe_spec.height = cfg_.scene_size;
    probe_spec.num_instances = 1;
    probe_spec.seed = 0;
    Mat probe_feats = teacher_->features(generate_scene(probe_spec, cfg_.patch_size).image);
    if (probe_feats.rows() != model_->token_count())
        throw std::runtime_error("teacher patch grid does not match backbone token grid");

    std::vector<nn::ParamRef> params = model_->params();
    for (auto& p : head_.params())
        params.push_back(p);
    adam_.init(params);

    scene_cache_.assign(cfg_.dataset_size, std::nullopt);
    if (!cfg_.data_dir.empty()) {
        for (const auto& entry : fs::directory_iterator(cfg_.data_dir)) {
            std::string fn = entry.path().filename().string();
            const std::string suffix = "_img.png";
            if (fn.size() > suffix.size() && fn.substr(fn.size() - suffix.size()) == suffix)
                data_names_.push_back(fn.substr(0, fn.size() - suffix.size()));
        }
        std::sort(data_names_.begin(), data_names_.end());
        if (data_names_.empty())
            throw std::runtime_error("data_dir contains no *_img.png scenes: " + cfg_.data_dir);
        scene_cache_.assign(data_names_.size(), std::nullopt);
    }
}

const synth::SceneSample& Trainer::training_scene(int scene_idx) {
    auto& slot = scene_cache_[scene_idx];
    if (!slot) {
        if (!data_names_.empty()) {
            slot = synth::load_scene(cfg_.data_dir, data_names_[scene_idx]);
            if (slot->image.height != cfg_.scene_size || slot->image.width != cfg_.scene_size)
                throw std::runtime_error("scene " + data_names_[scene_idx] + " does not match configured scene_size");
        } else {
            synth::SceneSpec spec;
            spec.width = spec.height = cfg_.scene_size;
            spec.num_instances = cfg_.num_instances;
            spec.seed = mix64(cfg_.seed, kSceneStream, static_cast<uint64_t>(scene_idx));
            slot = synth::generate_scene(spec, cfg_.patch_size);
        }
    }
    return *slot;
}

synth::SceneSample Trainer::eval_scene(int j) const {
    synth::SceneSpec spec;
    spec.width = spec.height = cfg_.scene_size;
    spec.num_instances = cfg_.num_instances;
    spec.seed = mix64(cfg_.seed, kEvalSceneStream, static_cast<uint64_t>(j));
    return synth::generate_scene(spec, cfg_.patch_size);
}

degrade::DegradationConfig Trainer::eval_degradation(int j) const {
    Rng rng = Rng::derived(cfg_.seed, kEvalDegStream, static_cast<uint64_t>(j));
    return degrade::sample_config(rng, cfg_.scale_1, cfg_.scale_2, cfg_.deg);
}

Mat Trainer::condition_tokens(const Image& lr) const {
    codec::Latent z_y = codec_.encode(lr);
    codec::Latent hi = codec::replicate_grid(z_y, cfg_.scale_total());
    if (hi.tokens_count() != model_->token_count())
        throw std::runtime_error("condition grid does not match the model grid");
    return hi.tokens;
}

losses::LossReport Trainer::train_sample(int scene_idx, std::vector<SampleBatchEntry>& diag) {
    const synth::SceneSample& hr = training_scene(scene_idx);

    degrade::DegradationConfig dcfg = degrade::sample_config(rng_, cfg_.scale_1, cfg_.scale_2, cfg_.deg);
    Image lr = degrade::degrade_image(hr.image, dcfg);

    codec::Latent z_x = codec_.encode(hr.image);
    Mat z0;
    if (cfg_.ablation_case == 2) {
        z0 = z_x.tokens;
    } else {
        codec::Latent z_m = codec_.encode(synth::encode_mask_rgb(hr.mask));
        z0 = codec::join(z_x, z_m).tokens;
    }

    Mat cond = condition_tokens(lr);
    const int t = rng_.uniform_int(1, cfg_.T);
    Mat eps(z0.rows(), z0.cols());
    for (Eigen::Index i = 0; i < eps.rows(); ++i)
        for (Eigen::Index j = 0; j < eps.cols(); ++j)
            eps(i, j) = rng_.normal();

    Mat z_t = diffusion::forward_marginal(schedule_, z0, t, eps);
    nn::DiffusionTransformer::Output out = model_->forward(z_t, t, cond);

    losses::LossReport rep;
    rep.l_denoise = losses::denoise_loss(eps, out.eps_hat);
    Mat d_eps = losses::denoise_loss_grad(eps, out.eps_hat);
    rep.grad_norm_denoise = d_eps.norm();

    Mat d_f;
    const bool align = cfg_.weights.lambda_repa > 0.0 || cfg_.weights.lambda_is > 0.0;
    if (align) {
        Mat d = data_names_.empty() || cfg_.teacher_features_dir.empty()
                    ? teacher_->features(hr.image)
                    : teacher::load_teacher_features(cfg_.teacher_features_dir, data_names_[scene_idx]);
        if (d.rows() != out.features.rows() || d.cols() != cfg_.teacher_dim)
            throw std::runtime_error("teacher feature grid/dim mismatch");

        Mat d_f_repa;
        rep.l_repa = losses::repa_loss_through_head(d, out.features, head_, &d_f_repa, cfg_.weights.lambda_repa);
        rep.grad_norm_repa = d_f_repa.norm();

        losses::InstanceScaleTargets targets = losses::InstanceScaleTargets::build(
            hr.mask, cfg_.patch_size, static_cast<int>(hr.instances.size()), rng_);
        last_scale_targets_ = targets.target_by_id;
        rep.l_is = losses::instance_scale_loss(out.features, targets);
        Mat d_f_is = cfg_.weights.lambda_is * losses::instance_scale_loss_grad(out.features, targets);
        rep.grad_norm_is = d_f_is.norm();

        d_f = d_f_repa + d_f_is;
    }

    model_->backward(d_eps, d_f);

    rep.l_total = losses::total_loss(rep, cfg_.weights);
    diag.push_back({scene_idx, t, rep.l_total});
    return rep;
}

losses::LossReport Trainer::step_once() {
    std::vector<nn::ParamRef> params = model_->params();
    for (auto& p : head_.params())
        params.push_back(p);
    nn::zero_grads(params);

    losses::LossReport mean;
    std::vector<SampleBatchEntry> diag;
    const int dataset = static_cast<int>(data_names_.empty() ? cfg_.dataset_size : data_names_.size());
    for (int b = 0; b < cfg_.batch_size; ++b) {
        int64_t idx = static_cast<int64_t>(step_) * cfg_.batch_size + b;
        losses::LossReport rep = train_sample(static_cast<int>(idx % dataset), diag);
        mean.l_denoise += rep.l_denoise;
        mean.l_repa += rep.l_repa;
        mean.l_is += rep.l_is;
        mean.grad_norm_denoise += rep.grad_norm_denoise;
        mean.grad_norm_repa += rep.grad_norm_repa;
        mean.grad_norm_is += rep.grad_norm_is;
    }
    const double inv_b = 1.0 / cfg_.batch_size;
    mean.l_denoise *= inv_b;
    mean.l_repa *= inv_b;
    mean.l_is *= inv_b;
    mean.grad_norm_denoise *= inv_b;
    mean.grad_norm_repa *= inv_b;
    mean.grad_norm_is *= inv_b;
    mean.l_total = losses::total_loss(mean, cfg_.weights);

    if (!std::isfinite(mean.l_total)) {
        dump_nan_diagnostics(out_dir_, step_ + 1, diag);
        throw std::runtime_error("non-finite loss at step " + std::to_string(step_ + 1) +
                                 "; diagnostics dumped");
    }

    for (const nn::ParamRef& p : params)
        *p.grad *= inv_b;
    adam_.step(params);

    ++step_;
    loss_log_.push_back({step_, mean});
    return mean;
}

EvalRow Trainer::evaluate(int ddim_steps) const {
    EvalRow row;
    row.step = step_;
    int iou_count = 0;
    for (int j = 0; j < cfg_.eval_scenes; ++j) {
        synth::SceneSample hr = eval_scene(j);
        Image lr = degrade::degrade_image(hr.image, eval_degradation(j));
        Rng rng = Rng::derived(cfg_.seed, kEvalSampleStream, static_cast<uint64_t>(j));
        SuperResolveResult res = super_resolve(lr, ddim_steps, 0.0, rng);

        row.psnr_sr += evalkit::psnr(res.sr, hr.image);
        row.psnr_bicubic += evalkit::psnr(evalkit::bicubic_upsample(lr, cfg_.scale_total()), hr.image);
        row.ssim_sr += evalkit::ssim(res.sr, hr.image);
        if (cfg_.ablation_case != 2) {
            row.mask_snap_frac += res.snap_fraction;
            row.mean_iou += evalkit::mean_mask_iou(res.mask, hr.mask);
            ++iou_count;
        }
    }
    row.psnr_sr /= cfg_.eval_scenes;
    row.psnr_bicubic /= cfg_.eval_scenes;
    row.ssim_sr /= cfg_.eval_scenes;
    if (iou_count > 0) {
        row.mask_snap_frac /= iou_count;
        row.mean_iou /= iou_count;
    }
    return row;
}

SuperResolveResult Trainer::super_resolve(const Image& lr, int ddim_steps, double eta, Rng& rng) const {
    const int factor = cfg_.scale_total();
    if (lr.height * factor != cfg_.scene_size || lr.width * factor != cfg_.scene_size)
        throw std::invalid_argument("super_resolve: LR dims do not match the model's configured scene size");

    Mat cond = condition_tokens(lr);
    auto denoiser = [&](const Mat& z, int t) { return model_->forward(z, t, cond).eps_hat; };
    Mat z0 = diffusion::sample(schedule_, denoiser, model_->token_count(), cfg_.model_in_channels(), ddim_steps, eta,
                               rng);

    const int side = cfg_.grid_side();
    SuperResolveResult res;
    codec::Latent z_img;
    z_img.gh = z_img.gw = side;
    z_img.patch = cfg_.patch_size;
    if (cfg_.ablation_case == 2) {
        z_img.tokens = z0;
        res.sr = codec_.decode(z_img);
        res.sr.clamp01();
        return res;
    }
    z_img.tokens = z0.leftCols(cfg_.latent_channels());
    codec::Latent z_mask = z_img;
    z_mask.tokens = z0.rightCols(cfg_.latent_channels());

    res.sr = codec_.decode(z_img);
    res.sr.clamp01();
    Image mask_rgb = codec_.decode(z_mask);
    res.mask = synth::snap_mask_rgb(mask_rgb, cfg_.num_instances, &res.snap_fraction);
    return res;
}

void Trainer::run(const std::string& out_dir) {
    out_dir_ = out_dir;
    if (!out_dir_.empty())
        fs::create_directories(out_dir_);

    while (step_ < cfg_.steps) {
        step_once();
        if (cfg_.eval_every > 0 && step_ % cfg_.eval_every == 0)
            eval_log_.push_back(evaluate(cfg_.eval_ddim_steps));
        if (!out_dir_.empty() && cfg_.ckpt_every > 0 && step_ % cfg_.ckpt_every == 0 && step_ < cfg_.steps)
            save_checkpoint((fs::path(out_dir_) / ("ckpt_step" + std::to_string(step_) + ".irsr")).string());
    }
    if (cfg_.eval_every > 0 && (eval_log_.empty() || eval_log_.back().step != step_))
        eval_log_.push_back(evaluate(cfg_.eval_ddim_steps));

    if (!out_dir_.empty()) {
        save_checkpoint((fs::path(out_dir_) / "ckpt_final.irsr").string());
        write_logs(out_dir_);
    }
}

void Trainer::write_logs(const std::string& out_dir) const {
    {
        std::ofstream log(fs::path(out_dir) / "log.csv", std::ios::binary);
        log << "step,l_denoise,l_repa,l_is,l_total,gnorm_denoise,gnorm_repa,gnorm_is\n";
        for (const LossRow& r : loss_log_)
            log << r.step << ',' << fmt_double(r.report.l_denoise) << ',' << fmt_double(r.report.l_repa) << ','
                << fmt_double(r.report.l_is) << ',' << fmt_double(r.report.l_total) << ','
                << fmt_double(r.report.grad_norm_denoise) << ',' << fmt_double(r.report.grad_norm_repa) << ','
                << fmt_double(r.report.grad_norm_is) << '\n';
    }
    {
        std::ofstream ev(fs::path(out_dir) / "eval.csv", std::ios::binary);
        ev << "step,psnr_sr,psnr_bicubic,ssim_sr,mask_snap_frac,mean_iou\n";
        for (const EvalRow& r : eval_log_)
            ev << r.step << ',' << fmt_double(r.psnr_sr) << ',' << fmt_double(r.psnr_bicubic) << ','
               << fmt_double(r.ssim_sr) << ',' << fmt_double(r.mask_snap_frac) << ',' << fmt_double(r.mean_iou)
               << '\n';
    }
}

void Trainer::dump_nan_diagnostics(const std::string& out_dir, int step,
                                   const std::vector<SampleBatchEntry>& batch) const {
    std::string dir = out_dir.empty() ? "." : out_dir;
    fs::create_directories(dir);
    KvFile dump;
    dump.set_int("schema_version", 1);
    dump.set_int("step", step);
    dump.set_uint("seed", cfg_.seed);
    dump.set_int("case", cfg_.ablation_case);
    for (size_t i = 0; i < batch.size(); ++i) {
        dump.set_int("sample." + std::to_string(i) + ".scene", batch[i].scene_idx);
        dump.set_int("sample." + std::to_string(i) + ".t", batch[i].t);
        dump.set_double("sample." + std::to_string(i) + ".l_total", batch[i].l_total);
    }
    dump.save((fs::path(dir) / "nan_dump.txt").string());
}

uint64_t Trainer::full_checksum() {
    std::vector<nn::ParamRef> params = model_->params();
    for (auto& p : head_.params())
        params.push_back(p);
    return nn::param_checksum(params);
}

void Trainer::save_checkpoint(const std::string& path) {
    std::vector<nn::ParamRef> params = model_->params();
    for (auto& p : head_.params())
        params.push_back(p);

    std::vector<double> blob;
    ordered_json tensors = ordered_json::array();
    auto append = [&](const std::string& name, const Mat& m) {
        ordered_json t;
        t["name"] = name;
        t["rows"] = m.rows();
        t["cols"] = m.cols();
        t["offset"] = blob.size() * sizeof(double);
        tensors.push_back(t);
        blob.insert(blob.end(), m.data(), m.data() + m.size());
    };
    for (const nn::ParamRef& p : params)
        append(p.name, *p.value);
    auto& moments_m = adam_.first_moments();
    auto& moments_v = adam_.second_moments();
    for (size_t i = 0; i < params.size(); ++i)
        append("adam.m." + params[i].name, moments_m[i]);
    for (size_t i = 0; i < params.size(); ++i)
        append("adam.v." + params[i].name, moments_v[i]);

    const size_t blob_bytes = blob.size() * sizeof(double);
    ordered_json manifest;
    manifest["schema"] = 1;
    manifest["step"] = step_;
    manifest["adam_steps"] = adam_.steps_taken();
    manifest["rng_state"] = rng_.state();
    manifest["config_text"] = cfg_.to_kv().serialize();
    manifest["tensors"] = tensors;
    manifest["blob_bytes"] = blob_bytes;
    manifest["checksum"] = hex64(fnv1a64(blob.data(), blob_bytes));

    std::string mtext = manifest.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kCkptMagic, 8);
    uint64_t mlen = mtext.size();
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob_bytes));
    if (!out)
        throw std::runtime_error("short write on checkpoint: " + path);
}

std::unique_ptr<Trainer> Trainer::resume(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCkptMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    uint64_t mlen = 0;
    in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    if (!in || mlen > (1ULL << 30))
        throw std::runtime_error("corrupt checkpoint manifest length: " + path);
    std::string mtext(mlen, '\0');
    in.read(mtext.data(), static_cast<std::streamsize>(mlen));
    ordered_json manifest = ordered_json::parse(mtext, nullptr, /*allow_exceptions=*/true);
    if (manifest.value("schema", 0) != 1)
        throw std::runtime_error("unsupported checkpoint schema: " + path);

    const size_t blob_bytes = manifest.at("blob_bytes").get<size_t>();
    std::vector<double> blob(blob_bytes / sizeof(double));
    in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob_bytes));
    if (!in)
        throw std::runtime_error("truncated checkpoint blob: " + path);
    if (hex64(fnv1a64(blob.data(), blob_bytes)) != manifest.at("checksum").get<std::string>())
        throw std::runtime_error("checkpoint checksum mismatch: " + path);

    TrainConfig cfg = TrainConfig::from_kv(KvFile::parse(manifest.at("config_text").get<std::string>()));
    auto trainer = std::make_unique<Trainer>(cfg);

    std::vector<nn::ParamRef> params = trainer->model_->params();
    for (auto& p : trainer->head_.params())
        params.push_back(p);
    auto& moments_m = trainer->adam_.first_moments();
    auto& moments_v = trainer->adam_.second_moments();

    std::map<std::string, std::pair<size_t, std::pair<int64_t, int64_t>>> index;
    for (const auto& t : manifest.at("tensors"))
        index[t.at("name").get<std::string>()] = {t.at("offset").get<size_t>(),
                                                  {t.at("rows").get<int64_t>(), t.at("cols").get<int64_t>()}};

    auto restore = [&](const std::string& name, Mat& dst) {
        auto it = index.find(name);
        if (it == index.end())
            throw std::runtime_error("checkpoint is missing tensor: " + name);
        auto [offset, shape] = it->second;
        if (shape.first != dst.rows() || shape.second != dst.cols())
            throw std::runtime_error("checkpoint tensor shape mismatch: " + name);
        std::copy_n(blob.data() + offset / sizeof(double), dst.size(), dst.data());
    };
    for (nn::ParamRef& p : params)
        restore(p.name, *p.value);
    for (size_t i = 0; i < params.size(); ++i) {
        restore("adam.m." + params[i].name, moments_m[i]);
        restore("adam.v." + params[i].name, moments_v[i]);
    }
    trainer->adam_.set_steps_taken(manifest.at("adam_steps").get<int64_t>());
    trainer->rng_.set_state(manifest.at("rng_state").get<std::string>());
    trainer->step_ = manifest.at("step").get<int>();
    return trainer;
}

std::unique_ptr<Trainer> load_for_inference(const std::string& path) {
    return Trainer::resume(path);
}

void require_config_match(const TrainConfig& supplied, const TrainConfig& stored) {
    if (supplied.to_kv().serialize() != stored.to_kv().serialize())
        throw std::runtime_error("resume rejected: supplied config does not match the checkpoint's config");
}

}  // namespace irsr::train
