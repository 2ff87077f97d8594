#include "semiseg/core/types.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace semiseg {

ClassVocabulary::ClassVocabulary(std::vector<std::string> names, BackgroundPolicy policy,
                                 ClassId ignore_id)
    : names_(std::move(names)), policy_(policy), ignore_id_(ignore_id) {
    if (names_.size() < 2) {
        throw ConfigError("vocabulary needs at least 2 classes, got " +
                          std::to_string(names_.size()));
    }
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (n.empty()) throw ConfigError("vocabulary contains an empty class name");
        if (!seen.insert(n).second) throw ConfigError("duplicate class name: " + n);
    }
    if (ignore_id_ >= 0 && ignore_id_ < num_classes()) {
        throw ConfigError("ignore_id " + std::to_string(ignore_id_) +
                          " collides with class ids [0, " + std::to_string(num_classes()) + ")");
    }
}

std::size_t SegmentMask::area() const {
    return static_cast<std::size_t>(std::accumulate(bits.begin(), bits.end(), std::size_t{0}));
}

void validate_label_map(const LabelMap& map, const ClassVocabulary& vocab) {
    const int c = vocab.num_classes();
    const ClassId ignore = vocab.ignore_id();
    if (map.ids.size() != static_cast<std::size_t>(map.height) * map.width) {
        throw DataError("label map buffer does not match its shape");
    }
    for (int r = 0; r < map.height; ++r) {
        for (int col = 0; col < map.width; ++col) {
            const ClassId id = map.at(r, col);
            if (id == ignore) continue;
            if (id < 0 || id >= c) {
                std::ostringstream msg;
                msg << "label map id " << id << " at (" << r << ", " << col
                    << ") is outside [0, " << c << ") and is not ignore_id " << ignore;
                throw DataError(msg.str());
            }
        }
    }
}

void validate_confidence_map(const ConfidenceMap& map) {
    constexpr double kTol = 1e-5;
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            const float* p = map.at(r, c);
            double sum = 0.0;
            for (int k = 0; k < map.num_classes; ++k) {
                if (!std::isfinite(p[k]) || p[k] < 0.f) {
                    throw NumericError("confidence map has a negative or non-finite entry at (" +
                                       std::to_string(r) + ", " + std::to_string(c) + ")");
                }
                sum += p[k];
            }
            if (std::abs(sum - 1.0) > kTol) {
                throw NumericError("confidence map row at (" + std::to_string(r) + ", " +
                                   std::to_string(c) + ") sums to " + std::to_string(sum));
            }
        }
    }
}

void validate_segment_mask(const SegmentMask& mask) {
    if (mask.bits.size() != static_cast<std::size_t>(mask.height) * mask.width) {
        throw DataError("segment mask buffer does not match its shape");
    }
    if (mask.area() == 0) throw DataError("segment mask is empty");
}

void validate_feature_map(const FeatureMap& map) {
    if (map.dim <= 0) throw DataError("feature map dimension must be positive");
    for (float v : map.values) {
        if (!std::isfinite(v)) throw NumericError("feature map contains a non-finite value");
    }
}

void validate_image(const Image& image) {
    if (image.height < 1 || image.width < 1) throw DataError("image must be at least 1x1");
    for (float v : image.values) {
        if (!std::isfinite(v)) throw NumericError("image contains a non-finite value");
    }
}

} // namespace semiseg
