#pragma once

#include <filesystem>

#include "semiseg/core/types.hpp"

namespace semiseg {

// 8-bit RGB PNG -> float image in [0, 1].
Image read_image_png(const std::filesystem::path& path);
void write_image_png(const std::filesystem::path& path, const Image& image);

// 8-bit single-channel indexed mask; ids stored verbatim.
LabelMap read_label_png(const std::filesystem::path& path);
void write_label_png(const std::filesystem::path& path, const LabelMap& map);

} // namespace semiseg
