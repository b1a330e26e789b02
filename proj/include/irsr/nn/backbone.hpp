#pragma once

#include <cstdint>
#include <vector>

#include "irsr/nn/layers.hpp"

namespace irsr::nn {

struct BackboneConfig {
    int depth = 8;
    int width = 256;
    int heads = 4;
    int in_channels = 96;    // 2c for the joint latent
    int cond_channels = 48;  // c for the encoded LR latent; 0 disables the branch
    int grid_h = 16, grid_w = 16;
    int tap_layer = 0;       // 0 = derive the default from depth (see resolved_tap)
    int n_inject = -1;       // -1 = first half of the layers
    int mlp_ratio = 4;
    uint64_t seed = 0;

    // The reference 28-layer model peaks at layer 10; keep the same fractional
    // depth at toy scale: round(depth * 10 / 28), clamped to [1, depth].
    int resolved_tap() const;
    int resolved_inject() const;
    void validate() const;
};

// Epsilon-predicting transformer over joint-latent tokens. Conditioning
// enters through a shallow side branch whose per-layer injection projections
// start at zero, so a fresh model is exactly condition-independent.
class DiffusionTransformer {
public:
    explicit DiffusionTransformer(const BackboneConfig& cfg);

    struct Output {
        Mat eps_hat;   // N x in_channels
        Mat features;  // N x width, hidden state after the tap layer
    };

    // cond may be empty (0x0) to run unconditioned. Each forward() caches the
    // activations the next backward() consumes.
    Output forward(const Mat& z_t, int t, const Mat& cond);

    // d_eps: N x in_channels; d_features: N x width or empty.
    void backward(const Mat& d_eps, const Mat& d_features);

    // Hidden state after each block (1-indexed: result[L-1] is layer L's
    // output, identical to what forward() taps at tap_layer == L).
    std::vector<Mat> layer_features(const Mat& z_t, int t, const Mat& cond);

    std::vector<ParamRef> params();
    uint64_t checksum();

    const BackboneConfig& config() const { return cfg_; }
    int token_count() const { return cfg_.grid_h * cfg_.grid_w; }

private:
    Mat run_embed(const Mat& z_t, int t, const Mat& cond, std::vector<Mat>* branch_states);

    BackboneConfig cfg_;
    Linear token_in_;
    Linear time_fc1_, time_fc2_;
    Gelu time_act_;
    Mat pos_;  // fixed 2-D sincos, N x width

    std::vector<TransformerBlock> blocks_;

    // conditioning branch
    Linear cond_in_;
    std::vector<LayerNorm> cb_ln_;
    std::vector<Linear> cb_fc1_, cb_fc2_;
    std::vector<Gelu> cb_act_;
    std::vector<Linear> inject_;  // zero-initialized, bias-free

    LayerNorm out_ln_;
    Linear out_proj_;

    // forward caches for the branch backward pass
    std::vector<Mat> branch_states_;
    bool cond_active_ = false;
};

}  // namespace irsr::nn
