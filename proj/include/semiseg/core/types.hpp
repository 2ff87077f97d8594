#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semiseg/core/error.hpp"

namespace semiseg {

using ClassId = std::int32_t;

constexpr ClassId kDefaultIgnoreId = 255;

enum class BackgroundPolicy {
    // Class 0 is an explicit "background" class; segments with no label
    // above the similarity threshold are painted with it.
    explicit_background,
    // No background class; unassigned segments become ignore_id.
    unassigned_is_ignore,
};

// Ordered class vocabulary. C = names.size(); ignore_id is reserved for
// void pixels and must lie outside [0, C).
class ClassVocabulary {
public:
    ClassVocabulary(std::vector<std::string> names, BackgroundPolicy policy,
                    ClassId ignore_id = kDefaultIgnoreId);

    int num_classes() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(ClassId c) const { return names_.at(static_cast<std::size_t>(c)); }
    BackgroundPolicy background_policy() const { return policy_; }
    ClassId ignore_id() const { return ignore_id_; }

    // Fill value for pixels with no segment / no assigned class.
    ClassId unassigned_fill() const {
        return policy_ == BackgroundPolicy::explicit_background ? 0 : ignore_id_;
    }

private:
    std::vector<std::string> names_;
    BackgroundPolicy policy_;
    ClassId ignore_id_;
};

enum class LabelProvenance { ground_truth, pseudo, enhanced };

// Per-pixel class ids, row-major. Ids are in [0, C) or ignore_id; the
// 8-bit on-disk format is handled by dataio.
struct LabelMap {
    int height = 0;
    int width = 0;
    std::vector<ClassId> ids;
    LabelProvenance provenance = LabelProvenance::ground_truth;

    LabelMap() = default;
    LabelMap(int h, int w, ClassId fill, LabelProvenance prov)
        : height(h), width(w), ids(static_cast<std::size_t>(h) * w, fill), provenance(prov) {}

    ClassId& at(int r, int c) { return ids[static_cast<std::size_t>(r) * width + c]; }
    ClassId at(int r, int c) const { return ids[static_cast<std::size_t>(r) * width + c]; }
    std::size_t pixels() const { return ids.size(); }
};

// Binary mask for one proposed segment.
struct SegmentMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;

    SegmentMask() = default;
    SegmentMask(int h, int w) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t& at(int r, int c) { return bits[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return bits[static_cast<std::size_t>(r) * width + c]; }
    std::size_t area() const;
};

// H x W x D patch-embedding grid in the joint image-text space.
struct FeatureMap {
    int height = 0;
    int width = 0;
    int dim = 0;
    std::vector<float> values; // (r * width + c) * dim + d

    FeatureMap() = default;
    FeatureMap(int h, int w, int d)
        : height(h), width(w), dim(d), values(static_cast<std::size_t>(h) * w * d, 0.f) {}

    float* at(int r, int c) { return values.data() + (static_cast<std::size_t>(r) * width + c) * dim; }
    const float* at(int r, int c) const {
        return values.data() + (static_cast<std::size_t>(r) * width + c) * dim;
    }
};

// H x W x C per-pixel class probabilities; each pixel row lies on the
// probability simplex (validated to 1e-5).
struct ConfidenceMap {
    int height = 0;
    int width = 0;
    int num_classes = 0;
    std::vector<float> probs; // (r * width + c) * num_classes + k

    ConfidenceMap() = default;
    ConfidenceMap(int h, int w, int c)
        : height(h), width(w), num_classes(c), probs(static_cast<std::size_t>(h) * w * c, 0.f) {}

    float* at(int r, int c) {
        return probs.data() + (static_cast<std::size_t>(r) * width + c) * num_classes;
    }
    const float* at(int r, int c) const {
        return probs.data() + (static_cast<std::size_t>(r) * width + c) * num_classes;
    }
};

// H x W x 3 image, channel values in [0, 1] unless a provider documents
// otherwise.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> values; // (r * width + c) * 3 + ch

    Image() = default;
    Image(int h, int w) : height(h), width(w), values(static_cast<std::size_t>(h) * w * 3, 0.f) {}

    float* at(int r, int c) { return values.data() + (static_cast<std::size_t>(r) * width + c) * 3; }
    const float* at(int r, int c) const {
        return values.data() + (static_cast<std::size_t>(r) * width + c) * 3;
    }
};

// Throws DataError naming the first offending pixel and id.
void validate_label_map(const LabelMap& map, const ClassVocabulary& vocab);

// Throws NumericError if any pixel row leaves the simplex by more than 1e-5.
void validate_confidence_map(const ConfidenceMap& map);

// Throws DataError on an empty mask or non-finite values.
void validate_segment_mask(const SegmentMask& mask);
void validate_feature_map(const FeatureMap& map);
void validate_image(const Image& image);

} // namespace semiseg
