#pragma once

#include <optional>

#include "semiseg/providers/providers.hpp"

namespace semiseg {

// Per-segment scoring record: cosine similarity against every class and
// the resulting assignment. assigned_class is empty when no similarity
// reaches the threshold.
struct SegmentAnnotation {
    int segment_index = 0;
    std::vector<double> similarities;
    std::optional<ClassId> assigned_class;
};

struct AnnotationResult {
    LabelMap map;
    std::vector<SegmentAnnotation> segments;
    bool no_segments = false;
    // Fraction of pixels carrying a class id (ignore_id excluded).
    double labeled_fraction = 0.0;
};

// Masked spatial mean of the feature map over one segment.
std::vector<float> pool_segment_embedding(const FeatureMap& features, const SegmentMask& mask);

// Cosine similarity of a segment embedding against each class embedding.
std::vector<double> class_similarities(const std::vector<float>& segment_embedding,
                                       const std::vector<std::vector<float>>& class_embeddings);

// Bilinear resample of a feature grid to the mask resolution.
FeatureMap resample_feature_map(const FeatureMap& features, int out_height, int out_width);

// Zero-shot annotation of one image: propose segments, pool embeddings,
// score against class embeddings, threshold, and paint. Segments are
// painted in descending area order so finer masks overwrite coarser ones;
// unassigned segments and uncovered pixels get the vocabulary's
// background/ignore fill.
AnnotationResult annotate_image(const Image& image, const SegmentProposer& proposer,
                                const PatchFeatureProvider& features,
                                const std::vector<std::vector<float>>& class_embeddings,
                                double sim_threshold, const ClassVocabulary& vocab,
                                const std::string& sample_id = {});

} // namespace semiseg
