#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "irsr/codec/patch_codec.hpp"
#include "irsr/core/kv.hpp"
#include "irsr/degrade/degrade.hpp"
#include "irsr/diffusion/process.hpp"
#include "irsr/losses/losses.hpp"
#include "irsr/nn/backbone.hpp"
#include "irsr/synth/scene.hpp"
#include "irsr/teacher/teacher.hpp"

namespace irsr::train {

// Ablation cases: 0 = full objective, 1 = no representation learning
// (alignment weights forced to zero), 2 = no mask modeling (the model runs
// on image-latent channels only).
struct TrainConfig {
    int ablation_case = 0;
    int steps = 1200;
    int batch_size = 2;
    double lr = 1e-4;
    diffusion::ScheduleKind schedule = diffusion::ScheduleKind::Linear;
    int T = 1000;
    uint64_t seed = 0;
    int eval_every = 150;  // 0 disables periodic eval
    int ckpt_every = 0;    // 0 = final checkpoint only
    losses::LossWeights weights;

    // data
    int scene_size = 64;
    int num_instances = 5;
    int dataset_size = 64;  // distinct scenes cycled by the stream
    int patch_size = 4;
    int scale_1 = 2, scale_2 = 1;
    degrade::DegradationRanges deg;

    // model
    int depth = 4, width = 64, heads = 4;
    int tap_layer = 0;
    int n_inject = -1;
    int mlp_ratio = 4;

    // teacher / eval
    int teacher_dim = 32;
    int eval_scenes = 3;
    int eval_ddim_steps = 10;

    // optional file-backed data: scenes from data_dir (paired-file layout),
    // alignment targets from per-image feature dumps
    std::string data_dir;
    std::string teacher_features_dir;

    int scale_total() const { return scale_1 * scale_2; }
    int latent_channels() const { return 3 * patch_size * patch_size; }
    int model_in_channels() const { return ablation_case == 2 ? latent_channels() : 2 * latent_channels(); }
    int grid_side() const { return scene_size / patch_size; }

    void validate() const;
    TrainConfig normalized() const;  // applies the per-case forcing rules

    static TrainConfig from_kv(const KvFile& kv);
    static TrainConfig from_file(const std::string& path);
    KvFile to_kv() const;
};

struct LossRow {
    int step = 0;
    losses::LossReport report;
};

struct EvalRow {
    int step = 0;
    double psnr_sr = 0.0;
    double psnr_bicubic = 0.0;
    double ssim_sr = 0.0;
    double mask_snap_frac = 0.0;
    double mean_iou = 0.0;
};

// Inference bundle around a trained (or fresh) model.
struct SuperResolveResult {
    Image sr;
    IdMask mask;          // empty for case-2 models
    double snap_fraction = 0.0;
};

class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg);

    losses::LossReport step_once();
    // Runs the remaining steps; when out_dir is non-empty writes ckpt_final.irsr,
    // log.csv and eval.csv (plus periodic checkpoints when configured).
    void run(const std::string& out_dir);

    void save_checkpoint(const std::string& path);
    static std::unique_ptr<Trainer> resume(const std::string& path);

    EvalRow evaluate(int ddim_steps) const;
    SuperResolveResult super_resolve(const Image& lr, int ddim_steps, double eta, Rng& rng) const;

    const TrainConfig& config() const { return cfg_; }
    int current_step() const { return step_; }
    nn::DiffusionTransformer& model() { return *model_; }
    teacher::ProjectionHead& head() { return head_; }
    const teacher::TeacherEncoder& teacher_encoder() const { return *teacher_; }
    const std::vector<LossRow>& loss_log() const { return loss_log_; }
    const std::vector<EvalRow>& eval_log() const { return eval_log_; }
    const synth::SceneSample& training_scene(int scene_idx);  // cached, deterministic
    synth::SceneSample eval_scene(int j) const;
    degrade::DegradationConfig eval_degradation(int j) const;

    uint64_t model_checksum() { return model_->checksum(); }
    uint64_t full_checksum();  // model + head

    // diagnostics: scale targets drawn for the most recent training sample
    std::vector<double> last_scale_targets_;

private:
    struct SampleBatchEntry {
        int scene_idx;
        int t;
        double l_total;
    };

    losses::LossReport train_sample(int scene_idx, std::vector<SampleBatchEntry>& diag);
    Mat condition_tokens(const Image& lr) const;
    void write_logs(const std::string& out_dir) const;
    void dump_nan_diagnostics(const std::string& out_dir, int step, const std::vector<SampleBatchEntry>& batch) const;

    TrainConfig cfg_;
    diffusion::NoiseSchedule schedule_;
    codec::PatchCodec codec_;
    std::unique_ptr<teacher::TeacherEncoder> teacher_;
    std::unique_ptr<nn::DiffusionTransformer> model_;
    teacher::ProjectionHead head_;
    nn::AdamOptimizer adam_;
    Rng rng_;
    int step_ = 0;
    std::string out_dir_;

    std::vector<std::optional<synth::SceneSample>> scene_cache_;
    std::vector<std::string> data_names_;  // file-backed mode
    std::vector<LossRow> loss_log_;
    std::vector<EvalRow> eval_log_;

    friend std::unique_ptr<Trainer> load_for_inference(const std::string& path);
};

// Checkpoint loading without optimizer state, for sampling/probing tools.
std::unique_ptr<Trainer> load_for_inference(const std::string& path);

// Rejects a resume whose supplied config disagrees with the checkpoint's.
void require_config_match(const TrainConfig& supplied, const TrainConfig& stored);

}  // namespace irsr::train
