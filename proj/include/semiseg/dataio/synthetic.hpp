#pragma once

#include <cstdint>
#include <filesystem>

#include "semiseg/dataio/dataset.hpp"

namespace semiseg {

struct SyntheticConfig {
    std::uint64_t seed = 7;
    int train_images = 48;
    int val_images = 12;
    int num_classes = 4; // includes the background class
    int size = 64;
    int min_shapes = 1;
    int max_shapes = 3;
    double noise_sigma = 0.02; // per-pixel color jitter, small vs palette spacing
};

// Class 0 is "background"; classes 1.. are named shapes with saturated,
// well-separated palette colors.
std::vector<std::string> synthetic_class_names(int num_classes);
std::vector<Rgb> synthetic_palette(int num_classes);

// Writes images/, labels/, dataset.json and id lists under root. Images
// are colored shapes over a textured background; the masks come from the
// same rasterization, so ground truth is pixel-exact. Same seed, same
// bytes.
DatasetDescriptor generate_synthetic_dataset(const std::filesystem::path& root,
                                             const SyntheticConfig& config);

} // namespace semiseg
