#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace semiseg::npy {

// Minimal NPY v1.0 reader/writer for float32 and uint8 arrays. This is
// the exchange format for precomputed provider outputs (feature maps,
// segment masks, text embeddings) exported from external model runs.

struct FloatArray {
    std::vector<std::size_t> shape;
    std::vector<float> data;
};

struct ByteArray {
    std::vector<std::size_t> shape;
    std::vector<std::uint8_t> data;
};

void write(const std::filesystem::path& path, const FloatArray& array);
void write(const std::filesystem::path& path, const ByteArray& array);

FloatArray read_float(const std::filesystem::path& path);
ByteArray read_bytes(const std::filesystem::path& path);

} // namespace semiseg::npy
