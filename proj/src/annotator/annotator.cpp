#include "semiseg/annotator/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semiseg/core/error.hpp"

namespace semiseg {

std::vector<float> pool_segment_embedding(const FeatureMap& features, const SegmentMask& mask) {
    if (features.height != mask.height || features.width != mask.width) {
        throw DataError("feature map and segment mask shapes disagree");
    }
    const std::size_t area = mask.area();
    if (area == 0) throw DataError("cannot pool over an empty segment mask");

    std::vector<double> acc(static_cast<std::size_t>(features.dim), 0.0);
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            if (!mask.at(r, c)) continue;
            const float* f = features.at(r, c);
            for (int d = 0; d < features.dim; ++d) acc[static_cast<std::size_t>(d)] += f[d];
        }
    }
    std::vector<float> out(static_cast<std::size_t>(features.dim));
    for (int d = 0; d < features.dim; ++d) {
        out[static_cast<std::size_t>(d)] = static_cast<float>(acc[static_cast<std::size_t>(d)] /
                                                              static_cast<double>(area));
    }
    return out;
}

std::vector<double> class_similarities(const std::vector<float>& segment_embedding,
                                       const std::vector<std::vector<float>>& class_embeddings) {
    double f_norm2 = 0.0;
    for (float v : segment_embedding) f_norm2 += static_cast<double>(v) * v;
    if (f_norm2 <= 0.0) throw NumericError("segment embedding has zero norm");
    const double f_norm = std::sqrt(f_norm2);

    std::vector<double> sims;
    sims.reserve(class_embeddings.size());
    for (std::size_t c = 0; c < class_embeddings.size(); ++c) {
        const auto& t = class_embeddings[c];
        if (t.size() != segment_embedding.size()) {
            throw DataError("class embedding dimension does not match the segment embedding");
        }
        double dot = 0.0;
        double t_norm2 = 0.0;
        for (std::size_t d = 0; d < t.size(); ++d) {
            dot += static_cast<double>(segment_embedding[d]) * t[d];
            t_norm2 += static_cast<double>(t[d]) * t[d];
        }
        if (t_norm2 <= 0.0) {
            throw NumericError("class embedding " + std::to_string(c) + " has zero norm");
        }
        sims.push_back(dot / (f_norm * std::sqrt(t_norm2)));
    }
    return sims;
}

FeatureMap resample_feature_map(const FeatureMap& features, int out_height, int out_width) {
    if (features.height == out_height && features.width == out_width) return features;
    FeatureMap out(out_height, out_width, features.dim);
    const double sr = static_cast<double>(features.height) / out_height;
    const double sc = static_cast<double>(features.width) / out_width;
    for (int r = 0; r < out_height; ++r) {
        double src_r = (r + 0.5) * sr - 0.5;
        src_r = std::clamp(src_r, 0.0, static_cast<double>(features.height - 1));
        const int r0 = static_cast<int>(std::floor(src_r));
        const int r1 = std::min(r0 + 1, features.height - 1);
        const double fr = src_r - r0;
        for (int c = 0; c < out_width; ++c) {
            double src_c = (c + 0.5) * sc - 0.5;
            src_c = std::clamp(src_c, 0.0, static_cast<double>(features.width - 1));
            const int c0 = static_cast<int>(std::floor(src_c));
            const int c1 = std::min(c0 + 1, features.width - 1);
            const double fc = src_c - c0;

            const float* p00 = features.at(r0, c0);
            const float* p01 = features.at(r0, c1);
            const float* p10 = features.at(r1, c0);
            const float* p11 = features.at(r1, c1);
            float* dst = out.at(r, c);
            for (int d = 0; d < features.dim; ++d) {
                const double top = p00[d] * (1.0 - fc) + p01[d] * fc;
                const double bot = p10[d] * (1.0 - fc) + p11[d] * fc;
                dst[d] = static_cast<float>(top * (1.0 - fr) + bot * fr);
            }
        }
    }
    return out;
}

AnnotationResult annotate_image(const Image& image, const SegmentProposer& proposer,
                                const PatchFeatureProvider& features,
                                const std::vector<std::vector<float>>& class_embeddings,
                                double sim_threshold, const ClassVocabulary& vocab,
                                const std::string& sample_id) {
    if (static_cast<int>(class_embeddings.size()) != vocab.num_classes()) {
        throw ConfigError("class embedding count does not match the vocabulary");
    }

    AnnotationResult result;
    result.map = LabelMap(image.height, image.width, vocab.unassigned_fill(),
                          LabelProvenance::pseudo);

    const auto labeled_fraction = [&vocab](const LabelMap& map) {
        std::size_t labeled = 0;
        for (ClassId id : map.ids) {
            if (id != vocab.ignore_id()) ++labeled;
        }
        return static_cast<double>(labeled) / static_cast<double>(map.pixels());
    };

    auto proposals = proposer.propose_for(sample_id, image);
    if (proposals.empty()) {
        // Every pixel is uncovered; the map keeps the policy fill.
        result.no_segments = true;
        result.labeled_fraction = labeled_fraction(result.map);
        return result;
    }

    FeatureMap grid = features.features_for(sample_id, image);
    if (static_cast<int>(grid.dim) != static_cast<int>(class_embeddings.front().size())) {
        throw ProviderError("feature and text embedding dimensions disagree");
    }
    grid = resample_feature_map(grid, image.height, image.width);

    // Score every proposal at its proposer-given index.
    result.segments.reserve(proposals.size());
    for (std::size_t k = 0; k < proposals.size(); ++k) {
        validate_segment_mask(proposals[k].mask);
        if (proposals[k].mask.height != image.height || proposals[k].mask.width != image.width) {
            throw ProviderError("segment mask shape does not match the image");
        }
        SegmentAnnotation ann;
        ann.segment_index = static_cast<int>(k);
        const auto pooled = pool_segment_embedding(grid, proposals[k].mask);
        ann.similarities = class_similarities(pooled, class_embeddings);
        const auto best =
            std::max_element(ann.similarities.begin(), ann.similarities.end());
        if (*best >= sim_threshold) {
            ann.assigned_class = static_cast<ClassId>(best - ann.similarities.begin());
        }
        result.segments.push_back(std::move(ann));
    }

    // Paint largest-first so finer segments overwrite coarser ones.
    std::vector<std::size_t> order(proposals.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return proposals[a].area > proposals[b].area;
    });
    for (std::size_t k : order) {
        const ClassId id = result.segments[k].assigned_class.value_or(vocab.unassigned_fill());
        const SegmentMask& mask = proposals[k].mask;
        for (std::size_t p = 0; p < mask.bits.size(); ++p) {
            if (mask.bits[p]) result.map.ids[p] = id;
        }
    }

    result.labeled_fraction = labeled_fraction(result.map);
    return result;
}

} // namespace semiseg
