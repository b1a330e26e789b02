#pragma once

#include <cstdint>
#include <string>

#include "irsr/core/image.hpp"
#include "irsr/core/mat.hpp"
#include "irsr/core/rng.hpp"
#include "irsr/nn/layers.hpp"

namespace irsr::teacher {

struct TeacherConfig {
    int patch_size = 4;
    int dim = 64;  // feature dim D
    uint64_t seed = 0;
};

// Frozen per-patch feature extractor standing in for a pretrained encoder:
// an orthogonal patch projection followed by two fixed token-mixing layers
// (depthwise 3x3 grid convolution, pointwise mix, tanh). Parameters are
// drawn once from the seed and never change.
class TeacherEncoder {
public:
    explicit TeacherEncoder(const TeacherConfig& cfg);

    // x dims must divide by patch_size; one D-vector per patch, laid out in
    // grid row-major order. No gradients ever flow through this path.
    Mat features(const Image& x) const;

    int dim() const { return cfg_.dim; }
    int patch_size() const { return cfg_.patch_size; }
    const TeacherConfig& config() const { return cfg_; }
    uint64_t checksum() const;

private:
    Mat mix(const Mat& tokens, int gh, int gw, int layer) const;

    TeacherConfig cfg_;
    Mat embed_;               // 3p^2 x D, semi-orthogonal
    Mat conv_[2];             // D x 9 depthwise grid kernels
    Mat pointwise_[2];        // D x D
    Mat bias_[2];             // 1 x D
};

// Learnable head mapping backbone features onto the teacher feature space.
class ProjectionHead {
public:
    ProjectionHead() = default;
    void init(int width, int teacher_dim, Rng& rng);

    Mat forward(const Mat& f);            // N x width -> N x D
    Mat backward(const Mat& d_out);       // returns dL/df
    std::vector<nn::ParamRef> params();

    int out_dim() const { return out_dim_; }

    nn::Linear fc1, fc2;
    nn::Gelu act;

private:
    int out_dim_ = 0;
};

// Per-image feature files (N x D tensor container) for substituting real
// pretrained features without code changes.
void save_teacher_features(const std::string& dir, const std::string& name, const Mat& d);
Mat load_teacher_features(const std::string& dir, const std::string& name);

}  // namespace irsr::teacher
