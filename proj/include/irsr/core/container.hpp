#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace irsr {

uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL);

std::string hex64(uint64_t v);

// Flat binary tensor container used for feature dumps, golden fixtures and
// external teacher features: magic, u32 ndim, i64 dims, f64 payload.
struct TensorFile {
    std::vector<int64_t> shape;
    std::vector<double> data;

    int64_t count() const {
        int64_t n = 1;
        for (int64_t d : shape)
            n *= d;
        return n;
    }
};

void write_tensor_file(const std::string& path, const TensorFile& t);
TensorFile read_tensor_file(const std::string& path);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const void* data, size_t n);

}  // namespace irsr
