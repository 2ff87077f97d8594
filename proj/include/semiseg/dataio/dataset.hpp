#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "semiseg/core/types.hpp"

namespace semiseg {

using Rgb = std::array<float, 3>;

// On-disk dataset: root/dataset.json names the vocabulary, palette and id
// lists; images/<id>.png and labels/<id>.png hold the pixels.
struct DatasetDescriptor {
    std::string name;
    std::filesystem::path root;
    ClassVocabulary vocab;
    std::vector<Rgb> palette; // one reference color per class
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;

    std::filesystem::path image_path(const std::string& id) const;
    std::filesystem::path label_path(const std::string& id) const;
};

// Parses root/dataset.json and verifies that every id resolves to an
// existing image and every train/val id to a label file.
DatasetDescriptor load_descriptor(const std::filesystem::path& root);

void save_descriptor(const DatasetDescriptor& descriptor); // writes dataset.json + id lists

enum class SplitFraction {
    f1_512,
    f1_256,
    f1_128,
    f1_64,
    f1_16,
    f1_8,
    f1_4,
    f1_2,
    full,
};

SplitFraction parse_fraction(const std::string& text); // "1/16", "full", ...
std::string fraction_name(SplitFraction fraction);     // inverse of parse_fraction
int fraction_denominator(SplitFraction fraction);      // full -> 1

struct SplitSpec {
    SplitFraction fraction = SplitFraction::full;
    std::uint64_t seed = 0;
    std::vector<std::string> labeled_ids;
    std::vector<std::string> unlabeled_ids;
};

// Number of labeled images for a train pool of size n: ceil(n / denom).
std::size_t labeled_count(std::size_t pool_size, SplitFraction fraction);

// Deterministic split of the train pool, persisted under root/splits/ as
// one-id-per-line text files; an existing persisted split is reloaded
// verbatim. `full_unlabeled_from_train` keeps the whole train pool as the
// unlabeled set under SplitFraction::full (otherwise it is empty).
SplitSpec load_split(const DatasetDescriptor& descriptor, SplitFraction fraction,
                     std::uint64_t seed, bool full_unlabeled_from_train = false);

std::vector<std::string> read_id_list(const std::filesystem::path& path);
void write_id_list(const std::filesystem::path& path, const std::vector<std::string>& ids);

// Image plus (optionally) its ground-truth mask, validated against the
// vocabulary.
std::pair<Image, std::optional<LabelMap>> load_sample(const DatasetDescriptor& descriptor,
                                                      const std::string& id, bool want_label);

// Converts an RGB-coded mask to class ids via exact palette match; pixels
// matching no palette entry become ignore_id.
LabelMap indexed_from_rgb(const Image& rgb_mask, const std::vector<Rgb>& palette,
                          ClassId ignore_id);

} // namespace semiseg
