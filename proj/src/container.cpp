#include "irsr/core/container.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace irsr {

namespace {
constexpr char kTensorMagic[8] = {'I', 'R', 'S', 'R', 'T', 'E', 'N', '1'};
}

uint64_t fnv1a64(const void* data, size_t n, uint64_t h) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_tensor_file(const std::string& path, const TensorFile& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write tensor file: " + path);
    out.write(kTensorMagic, 8);
    uint32_t ndim = static_cast<uint32_t>(t.shape.size());
    out.write(reinterpret_cast<const char*>(&ndim), sizeof(ndim));
    out.write(reinterpret_cast<const char*>(t.shape.data()), static_cast<std::streamsize>(ndim * sizeof(int64_t)));
    out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!out)
        throw std::runtime_error("short write on tensor file: " + path);
}

TensorFile read_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open tensor file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kTensorMagic, 8) != 0)
        throw std::runtime_error("not a tensor file: " + path);
    uint32_t ndim = 0;
    in.read(reinterpret_cast<char*>(&ndim), sizeof(ndim));
    if (!in || ndim > 8)
        throw std::runtime_error("corrupt tensor header: " + path);
    TensorFile t;
    t.shape.resize(ndim);
    in.read(reinterpret_cast<char*>(t.shape.data()), static_cast<std::streamsize>(ndim * sizeof(int64_t)));
    int64_t n = t.count();
    if (!in || n < 0)
        throw std::runtime_error("corrupt tensor shape: " + path);
    t.data.resize(static_cast<size_t>(n));
    in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in)
        throw std::runtime_error("truncated tensor file: " + path);
    return t;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open file: " + path);
    in.seekg(0, std::ios::end);
    std::streamsize n = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<uint8_t> bytes(static_cast<size_t>(n));
    in.read(reinterpret_cast<char*>(bytes.data()), n);
    if (!in)
        throw std::runtime_error("short read: " + path);
    return bytes;
}

void write_file_bytes(const std::string& path, const void* data, size_t n) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write file: " + path);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out)
        throw std::runtime_error("short write: " + path);
}

}  // namespace irsr
