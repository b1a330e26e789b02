#include "irsr/nn/backbone.hpp"

#include <cmath>
#include <stdexcept>

namespace irsr::nn {

int BackboneConfig::resolved_tap() const {
    int tap = tap_layer > 0 ? tap_layer : static_cast<int>(std::llround(depth * 10.0 / 28.0));
    return std::max(1, std::min(tap, depth));
}

int BackboneConfig::resolved_inject() const {
    int k = n_inject >= 0 ? n_inject : depth / 2;
    return std::max(0, std::min(k, depth));
}

void BackboneConfig::validate() const {
    if (depth < 1)
        throw std::invalid_argument("backbone: depth must be >= 1");
    if (width % heads != 0)
        throw std::invalid_argument("backbone: width must be divisible by heads");
    if (width % 4 != 0)
        throw std::invalid_argument("backbone: width must be divisible by 4");
    if (in_channels < 1 || grid_h < 1 || grid_w < 1)
        throw std::invalid_argument("backbone: bad channel or grid configuration");
    if (tap_layer < 0 || tap_layer > depth)
        throw std::invalid_argument("backbone: tap_layer out of range");
}

DiffusionTransformer::DiffusionTransformer(const BackboneConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(cfg_.seed);

    token_in_.init(cfg_.in_channels, cfg_.width, rng);
    time_fc1_.init(cfg_.width, cfg_.width, rng);
    time_fc2_.init(cfg_.width, cfg_.width, rng);
    pos_ = pos_embedding_2d(cfg_.grid_h, cfg_.grid_w, cfg_.width);

    blocks_.resize(cfg_.depth);
    for (int i = 0; i < cfg_.depth; ++i)
        blocks_[i].init(cfg_.width, cfg_.heads, cfg_.mlp_ratio, rng);

    const int k = cfg_.resolved_inject();
    if (cfg_.cond_channels > 0 && k > 0) {
        cond_in_.init(cfg_.cond_channels, cfg_.width, rng);
        cb_ln_.resize(k);
        cb_fc1_.resize(k);
        cb_fc2_.resize(k);
        cb_act_.resize(k);
        inject_.resize(k);
        for (int i = 0; i < k; ++i) {
            cb_ln_[i].init(cfg_.width);
            cb_fc1_[i].init(cfg_.width, cfg_.width, rng);
            cb_fc2_[i].init(cfg_.width, cfg_.width, rng);
            inject_[i].init_zero(cfg_.width, cfg_.width, /*bias=*/false);
        }
    }

    out_ln_.init(cfg_.width);
    // zero-initialized output head: the fresh model predicts zero noise
    out_proj_.init_zero(cfg_.width, cfg_.in_channels);
}

Mat DiffusionTransformer::run_embed(const Mat& z_t, int t, const Mat& cond, std::vector<Mat>* branch_states) {
    const int n = token_count();
    if (z_t.rows() != n || z_t.cols() != cfg_.in_channels)
        throw std::invalid_argument("backbone: latent shape does not match the configured grid/channels");

    cond_active_ = cond.size() > 0 && !inject_.empty();
    if (cond.size() > 0 && (cond.rows() != n || cond.cols() != cfg_.cond_channels))
        throw std::invalid_argument("backbone: condition shape mismatch");

    Mat h = token_in_.forward(z_t);
    h += pos_;
    Vec sin_emb = timestep_embedding(static_cast<double>(t), cfg_.width);
    Mat temb = time_fc2_.forward(time_act_.forward(time_fc1_.forward(sin_emb.transpose())));
    h.rowwise() += temb.row(0);

    if (cond_active_ && branch_states) {
        branch_states->clear();
        Mat g = cond_in_.forward(cond) + pos_;
        branch_states->push_back(g);
        for (size_t i = 0; i < inject_.size(); ++i) {
            g = g + cb_fc2_[i].forward(cb_act_[i].forward(cb_fc1_[i].forward(cb_ln_[i].forward(g))));
            branch_states->push_back(g);
        }
    }
    return h;
}

DiffusionTransformer::Output DiffusionTransformer::forward(const Mat& z_t, int t, const Mat& cond) {
    Mat h = run_embed(z_t, t, cond, &branch_states_);
    const int tap = cfg_.resolved_tap();

    Output out;
    for (int i = 0; i < cfg_.depth; ++i) {
        if (cond_active_ && i < static_cast<int>(inject_.size()))
            h += inject_[i].forward(branch_states_[i + 1]);
        h = blocks_[i].forward(h);
        if (i + 1 == tap)
            out.features = h;
    }
    out.eps_hat = out_proj_.forward(out_ln_.forward(h));
    return out;
}

void DiffusionTransformer::backward(const Mat& d_eps, const Mat& d_features) {
    const int tap = cfg_.resolved_tap();
    Mat dh = out_ln_.backward(out_proj_.backward(d_eps));

    std::vector<Mat> d_branch(inject_.size() + 1);
    for (int i = cfg_.depth - 1; i >= 0; --i) {
        if (i + 1 == tap && d_features.size() > 0)
            dh += d_features;
        dh = blocks_[i].backward(dh);
        if (cond_active_ && i < static_cast<int>(inject_.size()))
            d_branch[i + 1] = inject_[i].backward(dh);
    }

    if (cond_active_) {
        Mat dg = Mat::Zero(dh.rows(), cfg_.width);
        for (int i = static_cast<int>(inject_.size()) - 1; i >= 0; --i) {
            if (d_branch[i + 1].size() > 0)
                dg += d_branch[i + 1];
            dg = dg + cb_ln_[i].backward(cb_fc1_[i].backward(cb_act_[i].backward(cb_fc2_[i].backward(dg))));
        }
        cond_in_.backward(dg);
    }

    // h0 = token_in(z) + pos + broadcast(temb)
    Mat d_temb = dh.colwise().sum();
    time_fc1_.backward(time_act_.backward(time_fc2_.backward(d_temb)));
    token_in_.backward(dh);
}

std::vector<Mat> DiffusionTransformer::layer_features(const Mat& z_t, int t, const Mat& cond) {
    Mat h = run_embed(z_t, t, cond, &branch_states_);
    std::vector<Mat> feats;
    feats.reserve(cfg_.depth);
    for (int i = 0; i < cfg_.depth; ++i) {
        if (cond_active_ && i < static_cast<int>(inject_.size()))
            h += inject_[i].forward(branch_states_[i + 1]);
        h = blocks_[i].forward(h);
        feats.push_back(h);
    }
    return feats;
}

std::vector<ParamRef> DiffusionTransformer::params() {
    std::vector<ParamRef> out;
    token_in_.collect("token_in", out);
    time_fc1_.collect("time.fc1", out);
    time_fc2_.collect("time.fc2", out);
    for (int i = 0; i < cfg_.depth; ++i)
        blocks_[i].collect("block" + std::to_string(i), out);
    if (!inject_.empty()) {
        cond_in_.collect("cond.in", out);
        for (size_t i = 0; i < inject_.size(); ++i) {
            std::string p = "cond.block" + std::to_string(i);
            cb_ln_[i].collect(p + ".ln", out);
            cb_fc1_[i].collect(p + ".fc1", out);
            cb_fc2_[i].collect(p + ".fc2", out);
            inject_[i].collect("cond.inject" + std::to_string(i), out);
        }
    }
    out_ln_.collect("out.ln", out);
    out_proj_.collect("out.proj", out);
    return out;
}

uint64_t DiffusionTransformer::checksum() {
    return param_checksum(params());
}

}  // namespace irsr::nn
