#pragma once

#include <string>

#include "irsr/core/image.hpp"

namespace irsr {

// 8-bit RGB PNG round trip. Values are mapped [0,1] <-> [0,255] by rounding;
// fixed encoder settings keep the byte stream identical across reruns.
void write_png_rgb8(const std::string& path, const Image& img);
Image read_png_rgb8(const std::string& path);

}  // namespace irsr
