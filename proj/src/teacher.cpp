#include "irsr/teacher/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "irsr/codec/patch_codec.hpp"
#include "irsr/core/container.hpp"

namespace fs = std::filesystem;

namespace irsr::teacher {

namespace {

Mat random_mat(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = scale * rng.normal();
    return m;
}

// semi-orthogonal in x D: orthonormal rows when in <= D, orthonormal columns otherwise
Mat semi_orthogonal(int in, int D, Rng& rng) {
    if (in <= D) {
        Mat g = random_mat(D, in, rng, 1.0);
        Eigen::HouseholderQR<Mat> qr(g);
        Mat q = qr.householderQ() * Mat::Identity(D, in);
        return q.transpose();
    }
    Mat g = random_mat(in, D, rng, 1.0);
    Eigen::HouseholderQR<Mat> qr(g);
    return qr.householderQ() * Mat::Identity(in, D);
}

}  // namespace

TeacherEncoder::TeacherEncoder(const TeacherConfig& cfg) : cfg_(cfg) {
    if (cfg_.patch_size < 1 || cfg_.dim < 1)
        throw std::invalid_argument("TeacherEncoder: bad configuration");
    Rng rng(mix64(cfg_.seed, 0x7465616368ULL));
    const int in = 3 * cfg_.patch_size * cfg_.patch_size;
    embed_ = semi_orthogonal(in, cfg_.dim, rng);
    for (int l = 0; l < 2; ++l) {
        conv_[l] = random_mat(cfg_.dim, 9, rng, 1.0 / 3.0);
        pointwise_[l] = random_mat(cfg_.dim, cfg_.dim, rng, 1.0 / std::sqrt(static_cast<double>(cfg_.dim)));
        bias_[l] = random_mat(1, cfg_.dim, rng, 0.5);
    }
}

Mat TeacherEncoder::mix(const Mat& tokens, int gh, int gw, int layer) const {
    const int D = cfg_.dim;
    Mat spatial(tokens.rows(), D);
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            const int n = gy * gw + gx;
            for (int d = 0; d < D; ++d) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int yy = gy + dy, xx = gx + dx;
                        if (yy < 0 || yy >= gh || xx < 0 || xx >= gw)
                            continue;  // zero padding at grid borders
                        acc += conv_[layer](d, (dy + 1) * 3 + (dx + 1)) * tokens(yy * gw + xx, d);
                    }
                spatial(n, d) = acc;
            }
        }
    Mat h = spatial * pointwise_[layer];
    h.rowwise() += bias_[layer].row(0);
    return h.unaryExpr([](double v) { return std::tanh(v); });
}

Mat TeacherEncoder::features(const Image& x) const {
    codec::PatchCodec pc{cfg_.patch_size};
    codec::Latent z = pc.encode(x);
    Mat e = z.tokens * embed_;
    e = mix(e, z.gh, z.gw, 0);
    e = mix(e, z.gh, z.gw, 1);
    return e;
}

uint64_t TeacherEncoder::checksum() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto add = [&](const Mat& m) { h = fnv1a64(m.data(), static_cast<size_t>(m.size()) * sizeof(double), h); };
    add(embed_);
    for (int l = 0; l < 2; ++l) {
        add(conv_[l]);
        add(pointwise_[l]);
        add(bias_[l]);
    }
    return h;
}

void ProjectionHead::init(int width, int teacher_dim, Rng& rng) {
    out_dim_ = teacher_dim;
    fc1.init(width, width, rng);
    fc2.init(width, teacher_dim, rng);
}

Mat ProjectionHead::forward(const Mat& f) {
    return fc2.forward(act.forward(fc1.forward(f)));
}

Mat ProjectionHead::backward(const Mat& d_out) {
    return fc1.backward(act.backward(fc2.backward(d_out)));
}

std::vector<nn::ParamRef> ProjectionHead::params() {
    std::vector<nn::ParamRef> out;
    fc1.collect("head.fc1", out);
    fc2.collect("head.fc2", out);
    return out;
}

void save_teacher_features(const std::string& dir, const std::string& name, const Mat& d) {
    fs::create_directories(dir);
    TensorFile t;
    t.shape = {d.rows(), d.cols()};
    t.data.assign(d.data(), d.data() + d.size());
    write_tensor_file((fs::path(dir) / (name + "_feat.bin")).string(), t);
}

Mat load_teacher_features(const std::string& dir, const std::string& name) {
    TensorFile t = read_tensor_file((fs::path(dir) / (name + "_feat.bin")).string());
    if (t.shape.size() != 2)
        throw std::runtime_error("teacher feature file must be 2-D: " + name);
    Mat m(t.shape[0], t.shape[1]);
    std::copy(t.data.begin(), t.data.end(), m.data());
    return m;
}

}  // namespace irsr::teacher
