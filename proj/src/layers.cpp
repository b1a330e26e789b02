#include "irsr/nn/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "irsr/core/container.hpp"

namespace irsr::nn {

int64_t param_count(const std::vector<ParamRef>& params) {
    int64_t n = 0;
    for (const ParamRef& p : params)
        n += p.value->size();
    return n;
}

void zero_grads(const std::vector<ParamRef>& params) {
    for (const ParamRef& p : params)
        p.grad->setZero();
}

uint64_t param_checksum(const std::vector<ParamRef>& params) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const ParamRef& p : params)
        h = fnv1a64(p.value->data(), static_cast<size_t>(p.value->size()) * sizeof(double), h);
    return h;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x / M_SQRT2));
}

double gelu_grad(double x) {
    double cdf = 0.5 * (1.0 + std::erf(x / M_SQRT2));
    double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return cdf + x * pdf;
}

void Linear::init(int in, int out, Rng& rng, bool bias) {
    bias_ = bias;
    W.resize(in, out);
    const double limit = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < in; ++i)
        for (int j = 0; j < out; ++j)
            W(i, j) = rng.uniform(-limit, limit);
    gW = Mat::Zero(in, out);
    if (bias_) {
        b = Mat::Zero(1, out);
        gb = Mat::Zero(1, out);
    }
}

void Linear::init_zero(int in, int out, bool bias) {
    bias_ = bias;
    W = Mat::Zero(in, out);
    gW = Mat::Zero(in, out);
    if (bias_) {
        b = Mat::Zero(1, out);
        gb = Mat::Zero(1, out);
    }
}

Mat Linear::forward(const Mat& x) {
    if (x.cols() != W.rows())
        throw std::invalid_argument("Linear: input width does not match weight");
    x_ = x;
    Mat y = x * W;
    if (bias_)
        y.rowwise() += b.row(0);
    return y;
}

Mat Linear::backward(const Mat& dy) {
    gW.noalias() += x_.transpose() * dy;
    if (bias_)
        gb.row(0) += dy.colwise().sum();
    return dy * W.transpose();
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".W", &W, &gW});
    if (bias_)
        out.push_back({prefix + ".b", &b, &gb});
}

void LayerNorm::init(int dim) {
    gamma = Mat::Ones(1, dim);
    beta = Mat::Zero(1, dim);
    g_gamma = Mat::Zero(1, dim);
    g_beta = Mat::Zero(1, dim);
}

Mat LayerNorm::forward(const Mat& x) {
    const Eigen::Index n = x.rows(), d = x.cols();
    xhat_.resize(n, d);
    inv_std_.resize(n);
    Mat y(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = x.row(i).mean();
        const double var = (x.row(i).array() - mu).square().mean();
        const double is = 1.0 / std::sqrt(var + kEps);
        inv_std_(i) = is;
        xhat_.row(i) = (x.row(i).array() - mu) * is;
        y.row(i) = xhat_.row(i).cwiseProduct(gamma.row(0)) + beta.row(0);
    }
    return y;
}

Mat LayerNorm::backward(const Mat& dy) {
    const Eigen::Index n = dy.rows(), d = dy.cols();
    Mat dx(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::RowVectorXd dxhat = dy.row(i).cwiseProduct(gamma.row(0));
        const double m1 = dxhat.mean();
        const double m2 = dxhat.cwiseProduct(xhat_.row(i)).mean();
        dx.row(i) = (dxhat.array() - m1 - xhat_.row(i).array() * m2) * inv_std_(i);
        g_gamma.row(0) += dy.row(i).cwiseProduct(xhat_.row(i));
        g_beta.row(0) += dy.row(i);
    }
    return dx;
}

void LayerNorm::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".g", &gamma, &g_gamma});
    out.push_back({prefix + ".b", &beta, &g_beta});
}

Mat Gelu::forward(const Mat& x) {
    x_ = x;
    return x.unaryExpr([](double v) { return gelu(v); });
}

Mat Gelu::backward(const Mat& dy) {
    return dy.cwiseProduct(x_.unaryExpr([](double v) { return gelu_grad(v); }));
}

void MultiHeadAttention::init(int dim, int heads, Rng& rng) {
    if (dim % heads != 0)
        throw std::invalid_argument("MultiHeadAttention: dim must be divisible by heads");
    dim_ = dim;
    heads_ = heads;
    head_dim_ = dim / heads;
    qkv.init(dim, 3 * dim, rng);
    proj.init(dim, dim, rng);
}

Mat MultiHeadAttention::forward(const Mat& x) {
    const Eigen::Index n = x.rows();
    Mat fused = qkv.forward(x);  // N x 3dim
    q_ = fused.leftCols(dim_);
    k_ = fused.middleCols(dim_, dim_);
    v_ = fused.rightCols(dim_);

    attn_.assign(heads_, Mat());
    Mat out(n, dim_);
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
    for (int h = 0; h < heads_; ++h) {
        auto qh = q_.middleCols(h * head_dim_, head_dim_);
        auto kh = k_.middleCols(h * head_dim_, head_dim_);
        auto vh = v_.middleCols(h * head_dim_, head_dim_);
        Mat s = qh * kh.transpose() * scale;  // N x N
        // row softmax with max subtraction
        Mat a(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double mx = s.row(i).maxCoeff();
            a.row(i) = (s.row(i).array() - mx).exp();
            a.row(i) /= a.row(i).sum();
        }
        attn_[h] = a;
        out.middleCols(h * head_dim_, head_dim_) = a * vh;
    }
    return proj.forward(out);
}

Mat MultiHeadAttention::backward(const Mat& dy) {
    const Eigen::Index n = dy.rows();
    Mat d_out = proj.backward(dy);  // N x dim

    Mat d_fused(n, 3 * dim_);
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
    for (int h = 0; h < heads_; ++h) {
        auto qh = q_.middleCols(h * head_dim_, head_dim_);
        auto kh = k_.middleCols(h * head_dim_, head_dim_);
        auto vh = v_.middleCols(h * head_dim_, head_dim_);
        const Mat& a = attn_[h];
        Mat d_oh = d_out.middleCols(h * head_dim_, head_dim_);

        Mat d_a = d_oh * vh.transpose();        // N x N
        Mat d_vh = a.transpose() * d_oh;        // N x dh
        // softmax backward per row
        Mat d_s(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double dot = d_a.row(i).cwiseProduct(a.row(i)).sum();
            d_s.row(i) = (d_a.row(i).array() - dot) * a.row(i).array();
        }
        d_fused.middleCols(h * head_dim_, head_dim_) = d_s * kh * scale;
        d_fused.middleCols(dim_ + h * head_dim_, head_dim_) = d_s.transpose() * qh * scale;
        d_fused.middleCols(2 * dim_ + h * head_dim_, head_dim_) = d_vh;
    }
    return qkv.backward(d_fused);
}

void MultiHeadAttention::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    qkv.collect(prefix + ".qkv", out);
    proj.collect(prefix + ".proj", out);
}

void TransformerBlock::init(int dim, int heads, int mlp_ratio, Rng& rng) {
    ln1.init(dim);
    ln2.init(dim);
    attn.init(dim, heads, rng);
    fc1.init(dim, dim * mlp_ratio, rng);
    fc2.init(dim * mlp_ratio, dim, rng);
}

Mat TransformerBlock::forward(const Mat& x) {
    Mat h = x + attn.forward(ln1.forward(x));
    return h + fc2.forward(act.forward(fc1.forward(ln2.forward(h))));
}

Mat TransformerBlock::backward(const Mat& dy) {
    Mat dh = dy + ln2.backward(fc1.backward(act.backward(fc2.backward(dy))));
    return dh + ln1.backward(attn.backward(dh));
}

void TransformerBlock::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    ln1.collect(prefix + ".ln1", out);
    attn.collect(prefix + ".attn", out);
    ln2.collect(prefix + ".ln2", out);
    fc1.collect(prefix + ".fc1", out);
    fc2.collect(prefix + ".fc2", out);
}

void AdamOptimizer::init(const std::vector<ParamRef>& params) {
    m_.clear();
    v_.clear();
    for (const ParamRef& p : params) {
        m_.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
        v_.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
    }
    t_ = 0;
}

void AdamOptimizer::step(const std::vector<ParamRef>& params) {
    if (m_.size() != params.size())
        throw std::runtime_error("AdamOptimizer: state not initialized for this parameter set");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        const Mat& g = *params[i].grad;
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
        Mat mhat = m_[i] / bc1;
        Mat vhat = v_[i] / bc2;
        *params[i].value -= lr_ * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
    }
}

Vec timestep_embedding(double t, int dim) {
    if (dim % 2 != 0)
        throw std::invalid_argument("timestep_embedding: dim must be even");
    const int half = dim / 2;
    Vec e(dim);
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * i / half);
        e(i) = std::cos(t * freq);
        e(half + i) = std::sin(t * freq);
    }
    return e;
}

Mat pos_embedding_2d(int gh, int gw, int dim) {
    if (dim % 4 != 0)
        throw std::invalid_argument("pos_embedding_2d: dim must be divisible by 4");
    const int quarter = dim / 4;
    Mat e(gh * gw, dim);
    for (int y = 0; y < gh; ++y)
        for (int x = 0; x < gw; ++x) {
            int n = y * gw + x;
            for (int i = 0; i < quarter; ++i) {
                double freq = std::exp(-std::log(10000.0) * i / quarter);
                e(n, i) = std::sin(x * freq);
                e(n, quarter + i) = std::cos(x * freq);
                e(n, 2 * quarter + i) = std::sin(y * freq);
                e(n, 3 * quarter + i) = std::cos(y * freq);
            }
        }
    return e;
}

bool attention_permutation_equivariant(int dim, int heads, int tokens, uint64_t seed, double tol) {
    Rng rng(seed);
    MultiHeadAttention attn;
    attn.init(dim, heads, rng);

    Mat x(tokens, dim);
    for (int i = 0; i < tokens; ++i)
        for (int j = 0; j < dim; ++j)
            x(i, j) = rng.normal();

    std::vector<int> perm(tokens);
    for (int i = 0; i < tokens; ++i)
        perm[i] = i;
    for (int i = tokens - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.next_below(static_cast<uint64_t>(i + 1))]);

    Mat xp(tokens, dim);
    for (int i = 0; i < tokens; ++i)
        xp.row(i) = x.row(perm[i]);

    Mat y = attn.forward(x);
    Mat yp = attn.forward(xp);
    for (int i = 0; i < tokens; ++i)
        if ((yp.row(i) - y.row(perm[i])).cwiseAbs().maxCoeff() > tol)
            return false;
    return true;
}

}  // namespace irsr::nn
