#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irsr/core/mat.hpp"
#include "irsr/core/rng.hpp"

namespace irsr::nn {

// Named view onto a trainable tensor and its gradient accumulator. Collection
// order is fixed by construction so checkpoints and the optimizer state stay
// aligned.
struct ParamRef {
    std::string name;
    Mat* value = nullptr;
    Mat* grad = nullptr;
};

int64_t param_count(const std::vector<ParamRef>& params);
void zero_grads(const std::vector<ParamRef>& params);
uint64_t param_checksum(const std::vector<ParamRef>& params);

double gelu(double x);
double gelu_grad(double x);

// Affine layer, y = x W + b. backward() accumulates into the grad buffers and
// returns dL/dx; forward() must precede each backward().
class Linear {
public:
    Linear() = default;

    void init(int in, int out, Rng& rng, bool bias = true);  // Xavier-uniform
    void init_zero(int in, int out, bool bias = true);

    Mat forward(const Mat& x);
    Mat backward(const Mat& dy);

    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Mat W;  // in x out
    Mat b;  // 1 x out (empty when bias-free)
    Mat gW, gb;

private:
    bool bias_ = true;
    Mat x_;
};

class LayerNorm {
public:
    void init(int dim);
    Mat forward(const Mat& x);
    Mat backward(const Mat& dy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Mat gamma, beta;  // 1 x dim
    Mat g_gamma, g_beta;

private:
    Mat xhat_;
    Vec inv_std_;
    static constexpr double kEps = 1e-5;
};

class Gelu {
public:
    Mat forward(const Mat& x);
    Mat backward(const Mat& dy);

private:
    Mat x_;
};

class MultiHeadAttention {
public:
    void init(int dim, int heads, Rng& rng);
    Mat forward(const Mat& x);  // x: N x dim
    Mat backward(const Mat& dy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Linear qkv;   // dim -> 3*dim
    Linear proj;  // dim -> dim

private:
    int dim_ = 0, heads_ = 0, head_dim_ = 0;
    Mat q_, k_, v_;
    std::vector<Mat> attn_;  // per-head N x N softmax weights
};

// Pre-norm transformer block: x + attn(ln1(x)); x + mlp(ln2(x)).
class TransformerBlock {
public:
    void init(int dim, int heads, int mlp_ratio, Rng& rng);
    Mat forward(const Mat& x);
    Mat backward(const Mat& dy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    LayerNorm ln1, ln2;
    MultiHeadAttention attn;
    Linear fc1, fc2;
    Gelu act;
};

class AdamOptimizer {
public:
    AdamOptimizer(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void init(const std::vector<ParamRef>& params);
    void step(const std::vector<ParamRef>& params);

    double lr() const { return lr_; }
    int64_t steps_taken() const { return t_; }

    // exposed for checkpointing
    std::vector<Mat>& first_moments() { return m_; }
    std::vector<Mat>& second_moments() { return v_; }
    void set_steps_taken(int64_t t) { t_ = t; }

private:
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<Mat> m_, v_;
};

// Fixed (non-trainable) embeddings.
Vec timestep_embedding(double t, int dim);            // dim even
Mat pos_embedding_2d(int gh, int gw, int dim);        // dim divisible by 4

// Sanity probe: softmax attention commutes with token permutations when no
// positional information is present.
bool attention_permutation_equivariant(int dim, int heads, int tokens, uint64_t seed, double tol = 1e-9);

}  // namespace irsr::nn
