#include "irsr/losses/losses.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace irsr::losses {

namespace {
constexpr double kCosEps = 1e-8;
constexpr double kNormFloor = 1e-12;
}  // namespace

void LossWeights::validate() const {
    if (lambda_repa < 0.0 || lambda_is < 0.0)
        throw std::invalid_argument("loss weights must be >= 0");
}

std::vector<int32_t> assign_patch_instances(const IdMask& mask, int patch_size) {
    if (patch_size < 1 || mask.height % patch_size != 0 || mask.width % patch_size != 0)
        throw std::invalid_argument("assign_patch_instances: mask dims not divisible by patch size");
    const int gh = mask.height / patch_size;
    const int gw = mask.width / patch_size;
    std::vector<int32_t> assign(static_cast<size_t>(gh) * gw, 0);
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            std::map<int32_t, int> votes;
            for (int dy = 0; dy < patch_size; ++dy)
                for (int dx = 0; dx < patch_size; ++dx)
                    ++votes[mask.at(gy * patch_size + dy, gx * patch_size + dx)];
            int32_t best_id = 0;
            int best_count = -1;
            for (const auto& [id, count] : votes) {
                if (count > best_count) {  // map iterates ascending: ties keep the smaller id
                    best_count = count;
                    best_id = id;
                }
            }
            assign[static_cast<size_t>(gy) * gw + gx] = best_id;
        }
    return assign;
}

InstanceScaleTargets InstanceScaleTargets::build(const IdMask& mask, int patch_size, int num_instances, Rng& rng,
                                                 double s_min, double s_max) {
    InstanceScaleTargets t;
    t.target_by_id.assign(static_cast<size_t>(num_instances) + 1, 0.0);
    for (int i = 1; i <= num_instances; ++i)
        t.target_by_id[i] = rng.uniform(s_min, s_max);
    t.patch_instance = assign_patch_instances(mask, patch_size);
    for (int32_t id : t.patch_instance)
        if (id > num_instances)
            throw std::invalid_argument("InstanceScaleTargets: mask id exceeds declared instance count");
    return t;
}

double denoise_loss(const Mat& eps, const Mat& eps_hat) {
    if (eps.rows() != eps_hat.rows() || eps.cols() != eps_hat.cols())
        throw std::invalid_argument("denoise_loss: shape mismatch");
    return (eps_hat - eps).squaredNorm() / static_cast<double>(eps.size());
}

Mat denoise_loss_grad(const Mat& eps, const Mat& eps_hat) {
    if (eps.rows() != eps_hat.rows() || eps.cols() != eps_hat.cols())
        throw std::invalid_argument("denoise_loss_grad: shape mismatch");
    return 2.0 / static_cast<double>(eps.size()) * (eps_hat - eps);
}

double repa_loss(const Mat& d, const Mat& projected) {
    if (d.rows() != projected.rows() || d.cols() != projected.cols())
        throw std::invalid_argument("repa_loss: per-patch grids do not match");
    const Eigen::Index n = d.rows();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double nu = d.row(i).norm();
        double nv = projected.row(i).norm();
        if (nu <= kNormFloor || nv <= kNormFloor)
            continue;  // similarity defined as 0
        acc += d.row(i).dot(projected.row(i)) / (nu * nv + kCosEps);
    }
    return -acc / static_cast<double>(n);
}

Mat repa_loss_grad_projected(const Mat& d, const Mat& projected) {
    if (d.rows() != projected.rows() || d.cols() != projected.cols())
        throw std::invalid_argument("repa_loss_grad_projected: shape mismatch");
    const Eigen::Index n = d.rows();
    Mat g = Mat::Zero(n, d.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        double nu = d.row(i).norm();
        double nv = projected.row(i).norm();
        if (nu <= kNormFloor || nv <= kNormFloor)
            continue;
        double denom = nu * nv + kCosEps;
        double dot = d.row(i).dot(projected.row(i));
        // d/dv [ dot/(||u|| ||v|| + eps) ]
        g.row(i) = -(d.row(i) / denom - dot * nu / (denom * denom) * projected.row(i) / nv) /
                   static_cast<double>(n);
    }
    return g;
}

double repa_loss_through_head(const Mat& d, const Mat& f, teacher::ProjectionHead& head, Mat* d_f, double scale) {
    if (f.rows() != d.rows())
        throw std::invalid_argument("repa_loss_through_head: feature grid does not match teacher grid");
    Mat projected = head.forward(f);
    double loss = repa_loss(d, projected);
    if (d_f) {
        Mat d_proj = scale * repa_loss_grad_projected(d, projected);
        *d_f = head.backward(d_proj);
    }
    return loss;
}

double instance_scale_loss(const Mat& f, const InstanceScaleTargets& targets) {
    if (static_cast<size_t>(f.rows()) != targets.patch_instance.size())
        throw std::invalid_argument("instance_scale_loss: assignment length does not match feature rows");
    double acc = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        int32_t id = targets.patch_instance[i];
        if (id == 0)
            continue;
        double diff = f.row(i).norm() - targets.target_by_id[id];
        acc += diff * diff;
        ++count;
    }
    return count > 0 ? acc / count : 0.0;
}

Mat instance_scale_loss_grad(const Mat& f, const InstanceScaleTargets& targets) {
    if (static_cast<size_t>(f.rows()) != targets.patch_instance.size())
        throw std::invalid_argument("instance_scale_loss_grad: assignment length mismatch");
    Mat g = Mat::Zero(f.rows(), f.cols());
    int count = 0;
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        if (targets.patch_instance[i] != 0)
            ++count;
    if (count == 0)
        return g;
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        int32_t id = targets.patch_instance[i];
        if (id == 0)
            continue;
        double norm = f.row(i).norm();
        if (norm <= kNormFloor)
            continue;  // kink at the origin; subgradient 0
        g.row(i) = 2.0 * (norm - targets.target_by_id[id]) / (norm * count) * f.row(i);
    }
    return g;
}

double total_loss(const LossReport& r, const LossWeights& w) {
    return r.l_denoise + w.lambda_repa * r.l_repa + w.lambda_is * r.l_is;
}

}  // namespace irsr::losses
