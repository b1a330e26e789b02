#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace irsr {

// H x W x 3 image, values in [0,1], row-major, channel-interleaved.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data;  // size height*width*3

    Image() = default;
    Image(int h, int w, double fill = 0.0) : height(h), width(w), data(static_cast<size_t>(h) * w * 3, fill) {}

    double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    double at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }

    size_t size() const { return data.size(); }

    void clamp01() {
        for (double& v : data)
            v = std::clamp(v, 0.0, 1.0);
    }

    bool same_shape(const Image& o) const { return height == o.height && width == o.width; }
};

// H x W map of instance IDs; 0 is background.
struct IdMask {
    int height = 0;
    int width = 0;
    std::vector<int32_t> data;

    IdMask() = default;
    IdMask(int h, int w, int32_t fill = 0) : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    int32_t& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    int32_t at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }

    int32_t max_id() const {
        int32_t m = 0;
        for (int32_t v : data)
            m = std::max(m, v);
        return m;
    }
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": image shapes differ");
}

}  // namespace irsr
