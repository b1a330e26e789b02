#include "irsr/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

namespace irsr::evalkit {

namespace {

// edge-inclusive reflection, matching the degradation module's padding
inline int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0)
            i = -i - 1;
        if (i >= n)
            i = 2 * n - i - 1;
    }
    return i;
}

std::vector<double> gaussian_window(int radius, double sigma) {
    std::vector<double> w(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        w[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += w[i + radius];
    }
    for (double& v : w)
        v /= sum;
    return w;
}

// separable Gaussian filtering of a single-channel plane
std::vector<double> blur_plane(const std::vector<double>& src, int h, int w, const std::vector<double>& win) {
    const int radius = static_cast<int>(win.size()) / 2;
    std::vector<double> tmp(src.size()), out(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += win[k + radius] * src[static_cast<size_t>(y) * w + reflect(x + k, w)];
            tmp[static_cast<size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += win[k + radius] * tmp[static_cast<size_t>(reflect(y + k, h)) * w + x];
            out[static_cast<size_t>(y) * w + x] = acc;
        }
    return out;
}

double cubic_kernel(double x) {
    // Catmull-Rom (a = -0.5)
    const double a = -0.5;
    x = std::abs(x);
    if (x < 1.0)
        return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
    if (x < 2.0)
        return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
    return 0.0;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
    require_same_shape(a, b, "psnr");
    double se = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        se += d * d;
    }
    double mse = se / static_cast<double>(a.data.size());
    if (mse <= 0.0)
        return kPsnrCap;
    return std::min(10.0 * std::log10(1.0 / mse), kPsnrCap);
}

double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b, "ssim");
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const std::vector<double> win = gaussian_window(5, 1.5);
    const int h = a.height, w = a.width;
    const size_t plane = static_cast<size_t>(h) * w;

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> pa(plane), pb(plane), paa(plane), pbb(plane), pab(plane);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                size_t i = static_cast<size_t>(y) * w + x;
                pa[i] = a.at(y, x, c);
                pb[i] = b.at(y, x, c);
                paa[i] = pa[i] * pa[i];
                pbb[i] = pb[i] * pb[i];
                pab[i] = pa[i] * pb[i];
            }
        auto mu_a = blur_plane(pa, h, w, win);
        auto mu_b = blur_plane(pb, h, w, win);
        auto m_aa = blur_plane(paa, h, w, win);
        auto m_bb = blur_plane(pbb, h, w, win);
        auto m_ab = blur_plane(pab, h, w, win);

        double acc = 0.0;
        for (size_t i = 0; i < plane; ++i) {
            double va = m_aa[i] - mu_a[i] * mu_a[i];
            double vb = m_bb[i] - mu_b[i] * mu_b[i];
            double cov = m_ab[i] - mu_a[i] * mu_b[i];
            double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
            double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
            acc += num / den;
        }
        total += acc / static_cast<double>(plane);
    }
    return total / 3.0;
}

std::map<int32_t, double> mask_iou(const IdMask& pred, const IdMask& gt) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw std::invalid_argument("mask_iou: mask shapes differ");
    std::set<int32_t> ids;
    for (int32_t v : pred.data)
        if (v != 0)
            ids.insert(v);
    for (int32_t v : gt.data)
        if (v != 0)
            ids.insert(v);

    std::map<int32_t, double> out;
    for (int32_t id : ids) {
        int64_t inter = 0, uni = 0;
        for (size_t i = 0; i < gt.data.size(); ++i) {
            bool p = pred.data[i] == id, g = gt.data[i] == id;
            inter += p && g;
            uni += p || g;
        }
        out[id] = uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
    }
    return out;
}

double mean_mask_iou(const IdMask& pred, const IdMask& gt) {
    auto per_id = mask_iou(pred, gt);
    std::set<int32_t> gt_ids;
    for (int32_t v : gt.data)
        if (v != 0)
            gt_ids.insert(v);
    if (gt_ids.empty())
        return 0.0;
    double acc = 0.0;
    for (int32_t id : gt_ids)
        acc += per_id[id];
    return acc / static_cast<double>(gt_ids.size());
}

double feature_dist(const Image& a, const Image& b, const teacher::TeacherEncoder& enc) {
    require_same_shape(a, b, "feature_dist");
    Mat fa = enc.features(a);
    Mat fb = enc.features(b);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < fa.rows(); ++i) {
        double na = fa.row(i).norm(), nb = fb.row(i).norm();
        double cos = na > 1e-12 && nb > 1e-12 ? fa.row(i).dot(fb.row(i)) / (na * nb) : 0.0;
        acc += 1.0 - cos;
    }
    return acc / static_cast<double>(fa.rows());
}

Image bicubic_upsample(const Image& x, int factor) {
    if (factor < 1)
        throw std::invalid_argument("bicubic_upsample: factor must be >= 1");
    if (factor == 1)
        return x;
    Image out(x.height * factor, x.width * factor);
    for (int y = 0; y < out.height; ++y)
        for (int px = 0; px < out.width; ++px) {
            // align sample positions with area-downsampling block centers
            double sy = (y + 0.5) / factor - 0.5;
            double sx = (px + 0.5) / factor - 0.5;
            int iy = static_cast<int>(std::floor(sy));
            int ix = static_cast<int>(std::floor(sx));
            double fy = sy - iy, fx = sx - ix;
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int m = -1; m <= 2; ++m) {
                    double wy = cubic_kernel(m - fy);
                    if (wy == 0.0)
                        continue;
                    for (int n = -1; n <= 2; ++n) {
                        double wx = cubic_kernel(n - fx);
                        if (wx == 0.0)
                            continue;
                        acc += wy * wx * x.at(reflect(iy + m, x.height), reflect(ix + n, x.width), c);
                    }
                }
                out.at(y, px, c) = std::clamp(acc, 0.0, 1.0);
            }
        }
    return out;
}

}  // namespace irsr::evalkit
