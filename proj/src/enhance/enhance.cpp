#include "semiseg/enhance/enhance.hpp"

#include <string>

#include "semiseg/core/error.hpp"

namespace semiseg {

void validate(const EnhancementConfig& config) {
    if (!(config.tau > 0.0) || config.tau > 1.0) {
        throw ConfigError("tau must lie in (0, 1], got " + std::to_string(config.tau));
    }
}

namespace {

void check_aligned(const ConfidenceMap& p_w, const LabelMap& l_p) {
    if (p_w.height != l_p.height || p_w.width != l_p.width) {
        throw DataError("enhance: prediction " + std::to_string(p_w.height) + "x" +
                        std::to_string(p_w.width) + " vs pseudo-label " +
                        std::to_string(l_p.height) + "x" + std::to_string(l_p.width));
    }
    if (p_w.num_classes < 2) throw DataError("enhance: prediction needs at least two classes");
}

struct PixelChoice {
    bool model_branch;
    ClassId model_class;
};

PixelChoice choose(const ConfidenceMap& p_w, std::size_t pixel, double tau) {
    const float* probs = &p_w.probs[pixel * p_w.num_classes];
    int best = 0;
    float best_p = probs[0];
    for (int c = 1; c < p_w.num_classes; ++c) {
        if (probs[c] > best_p) {
            best_p = probs[c];
            best = c;
        }
    }
    return {best_p >= tau, best};
}

} // namespace

LabelMap enhance_labels(const ConfidenceMap& p_w, const LabelMap& l_p, double tau) {
    check_aligned(p_w, l_p);
    LabelMap out;
    out.height = l_p.height;
    out.width = l_p.width;
    out.provenance = LabelProvenance::enhanced;
    out.ids.resize(l_p.ids.size());
    for (std::size_t i = 0; i < l_p.ids.size(); ++i) {
        const PixelChoice pick = choose(p_w, i, tau);
        // Low-confidence pixels inherit the pseudo-label, including its
        // ignore_id marks, so unassigned pseudo pixels stay ignored.
        out.ids[i] = pick.model_branch ? pick.model_class : l_p.ids[i];
    }
    return out;
}

EnhancementStats enhancement_stats(const ConfidenceMap& p_w, const LabelMap& l_p, double tau,
                                   ClassId ignore_id) {
    check_aligned(p_w, l_p);
    std::size_t from_pseudo = 0, from_model = 0, ignored = 0;
    for (std::size_t i = 0; i < l_p.ids.size(); ++i) {
        if (choose(p_w, i, tau).model_branch) {
            ++from_model;
        } else if (l_p.ids[i] == ignore_id) {
            ++ignored;
        } else {
            ++from_pseudo;
        }
    }
    const double total = static_cast<double>(l_p.ids.size());
    return {from_pseudo / total, from_model / total, ignored / total};
}

} // namespace semiseg
