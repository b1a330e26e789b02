#include "irsr/io/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace irsr {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png_rgb8(const std::string& path, const Image& img) {
    if (img.height <= 0 || img.width <= 0)
        throw std::invalid_argument("write_png_rgb8: empty image");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw std::runtime_error("cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png write error: " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    // no timestamp or text chunks, so identical pixels give identical bytes
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = std::clamp(img.at(y, x, c), 0.0, 1.0);
                row[static_cast<size_t>(x) * 3 + c] = static_cast<png_byte>(std::lround(v * 255.0));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png_rgb8(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw std::runtime_error("cannot open: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("png read error: " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    png_byte color_type = png_get_color_type(png, info);
    png_byte bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16)
        png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Image img(static_cast<int>(h), static_cast<int>(w));
    std::vector<png_byte> row(png_get_rowbytes(png, info));
    if (row.size() < static_cast<size_t>(w) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("unexpected png row size: " + path);
    }
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(static_cast<int>(y), static_cast<int>(x), c) = row[static_cast<size_t>(x) * 3 + c] / 255.0;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace irsr
