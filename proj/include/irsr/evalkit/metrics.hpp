#pragma once

#include <map>

#include "irsr/core/image.hpp"
#include "irsr/teacher/teacher.hpp"

namespace irsr::evalkit {

inline constexpr double kPsnrCap = 99.0;  // reported for identical images

double psnr(const Image& a, const Image& b);

// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), K1/K2 = 0.01/0.03
// over unit dynamic range, averaged over pixels and channels.
double ssim(const Image& a, const Image& b);

// IoU per instance ID over the union of IDs present in either mask
// (background excluded). mean_iou averages over the ground-truth IDs.
std::map<int32_t, double> mask_iou(const IdMask& pred, const IdMask& gt);
double mean_mask_iou(const IdMask& pred, const IdMask& gt);

// Mean per-patch cosine distance between teacher features of the two images.
double feature_dist(const Image& a, const Image& b, const teacher::TeacherEncoder& enc);

// Catmull-Rom bicubic upsampling; the non-learned reference point.
Image bicubic_upsample(const Image& x, int factor);

}  // namespace irsr::evalkit
