#pragma once

#include <cstdint>
#include <vector>

#include "irsr/core/image.hpp"
#include "irsr/core/mat.hpp"
#include "irsr/core/rng.hpp"
#include "irsr/teacher/teacher.hpp"

namespace irsr::losses {

struct LossWeights {
    double lambda_repa = 0.5;
    double lambda_is = 0.1;

    void validate() const;  // both must be >= 0
};

// Majority pixel vote over each patch footprint, ties broken toward the
// smaller ID; 0 marks background patches.
std::vector<int32_t> assign_patch_instances(const IdMask& mask, int patch_size);

// Per-patch instance assignment plus one scale target per instance.
// Background patches carry no target and are excluded from the loss.
struct InstanceScaleTargets {
    std::vector<int32_t> patch_instance;  // length N
    std::vector<double> target_by_id;     // index 0 unused (background)

    static InstanceScaleTargets build(const IdMask& mask, int patch_size, int num_instances, Rng& rng,
                                      double s_min = 0.5, double s_max = 2.0);
};

struct LossReport {
    double l_denoise = 0.0;
    double l_repa = 0.0;
    double l_is = 0.0;
    double l_total = 0.0;
    double grad_norm_denoise = 0.0;
    double grad_norm_repa = 0.0;
    double grad_norm_is = 0.0;
};

// Mean squared error over every element (mean reduction keeps the loss
// weights scale-stable across latent sizes).
double denoise_loss(const Mat& eps, const Mat& eps_hat);
Mat denoise_loss_grad(const Mat& eps, const Mat& eps_hat);  // d/d eps_hat

// Negative mean per-patch cosine similarity between teacher features and
// projected backbone features. The similarity denominator carries a 1e-8
// additive guard; an exactly zero-norm patch contributes similarity 0 and no
// gradient. Returns the loss; gradients (w.r.t. the head parameters and the
// raw features f) are produced by repa_loss_backward after a forward call on
// the same head.
double repa_loss(const Mat& d, const Mat& projected);
Mat repa_loss_grad_projected(const Mat& d, const Mat& projected);  // d/d projected

double repa_loss_through_head(const Mat& d, const Mat& f, teacher::ProjectionHead& head, Mat* d_f = nullptr,
                              double scale = 1.0);

// Mean over non-background patches of (||f_n|| - s_target)^2.
double instance_scale_loss(const Mat& f, const InstanceScaleTargets& targets);
Mat instance_scale_loss_grad(const Mat& f, const InstanceScaleTargets& targets);

double total_loss(const LossReport& r, const LossWeights& w);  // fills nothing; pure arithmetic

}  // namespace irsr::losses
