#pragma once

// Reference implementations of the math under test, written as direct
// per-pixel loops with no shared code or helpers from the library. Kept
// deliberately naive so a disagreement points at the production code.

#include <cmath>
#include <cstddef>
#include <vector>

#include "semiseg/core/types.hpp"

namespace oracle {

using semiseg::ClassId;
using semiseg::ConfidenceMap;
using semiseg::FeatureMap;
using semiseg::LabelMap;
using semiseg::SegmentMask;

// Mean of the patch embeddings selected by a binary mask.
inline std::vector<float> masked_mean(const FeatureMap& f, const SegmentMask& m) {
    std::vector<double> sum(static_cast<std::size_t>(f.dim), 0.0);
    double count = 0.0;
    for (int r = 0; r < f.height; ++r) {
        for (int c = 0; c < f.width; ++c) {
            if (!m.at(r, c)) continue;
            count += 1.0;
            for (int d = 0; d < f.dim; ++d) {
                sum[static_cast<std::size_t>(d)] += f.at(r, c)[d];
            }
        }
    }
    std::vector<float> out(static_cast<std::size_t>(f.dim));
    for (int d = 0; d < f.dim; ++d) {
        out[static_cast<std::size_t>(d)] =
            static_cast<float>(sum[static_cast<std::size_t>(d)] / count);
    }
    return out;
}

inline double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Confidence-gated label fusion: model argmax when the best probability
// reaches tau, otherwise the pseudo-label pixel.
inline LabelMap enhance(const ConfidenceMap& p, const LabelMap& lp, double tau) {
    LabelMap out = lp;
    out.provenance = semiseg::LabelProvenance::enhanced;
    for (int r = 0; r < p.height; ++r) {
        for (int c = 0; c < p.width; ++c) {
            const float* probs = p.at(r, c);
            int best = 0;
            for (int k = 1; k < p.num_classes; ++k) {
                if (probs[k] > probs[best]) best = k;
            }
            if (probs[best] >= tau) out.at(r, c) = best;
        }
    }
    return out;
}

// Label-smoothed cross-entropy averaged over non-ignored pixels.
inline double smoothed_ce(const ConfidenceMap& p, const LabelMap& t, double eps, ClassId ignore,
                          std::size_t* valid_out = nullptr) {
    const int num_classes = p.num_classes;
    double total = 0.0;
    std::size_t valid = 0;
    for (int r = 0; r < p.height; ++r) {
        for (int c = 0; c < p.width; ++c) {
            const ClassId target = t.at(r, c);
            if (target == ignore) continue;
            ++valid;
            const float* probs = p.at(r, c);
            double pixel = 0.0;
            for (int k = 0; k < num_classes; ++k) {
                const double w =
                    k == target ? 1.0 - eps : eps / static_cast<double>(num_classes - 1);
                const double q = std::max(static_cast<double>(probs[k]), 1e-12);
                pixel -= w * std::log(q);
            }
            total += pixel;
        }
    }
    if (valid_out) *valid_out = valid;
    return valid == 0 ? 0.0 : total / static_cast<double>(valid);
}

inline double unlabeled(const ConfidenceMap& p_fp, const LabelMap& l_fp, const ConfidenceMap& p_s1,
                        const LabelMap& l_s1, const ConfidenceMap& p_s2, const LabelMap& l_s2,
                        double eps, ClassId ignore) {
    return smoothed_ce(p_fp, l_fp, eps, ignore) + smoothed_ce(p_s1, l_s1, eps, ignore) +
           smoothed_ce(p_s2, l_s2, eps, ignore);
}

inline double total(double l_s, double l_u) { return (l_s + l_u) / 2.0; }

// Mean IoU over the classes that appear at all; gt/pred pairs share one
// global confusion count.
inline double miou(const std::vector<LabelMap>& gts, const std::vector<LabelMap>& preds,
                   int num_classes, ClassId ignore) {
    std::vector<double> tp(static_cast<std::size_t>(num_classes), 0.0);
    std::vector<double> fp(static_cast<std::size_t>(num_classes), 0.0);
    std::vector<double> fn(static_cast<std::size_t>(num_classes), 0.0);
    for (std::size_t i = 0; i < gts.size(); ++i) {
        for (int r = 0; r < gts[i].height; ++r) {
            for (int c = 0; c < gts[i].width; ++c) {
                const ClassId g = gts[i].at(r, c);
                if (g == ignore) continue;
                const ClassId q = preds[i].at(r, c);
                if (g == q) {
                    tp[static_cast<std::size_t>(g)] += 1.0;
                } else {
                    fn[static_cast<std::size_t>(g)] += 1.0;
                    fp[static_cast<std::size_t>(q)] += 1.0;
                }
            }
        }
    }
    double sum = 0.0;
    int defined = 0;
    for (int k = 0; k < num_classes; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double denom = tp[i] + fp[i] + fn[i];
        if (denom == 0.0) continue;
        sum += tp[i] / denom;
        ++defined;
    }
    return sum / static_cast<double>(defined);
}

// align_corners=false bilinear sampling of one channel, matching the
// resize convention used across the code base.
inline float bilinear_at(const float* plane, int in_h, int in_w, int out_h, int out_w, int r,
                         int c) {
    const double sy = static_cast<double>(in_h) / out_h;
    const double sx = static_cast<double>(in_w) / out_w;
    double fy = (r + 0.5) * sy - 0.5;
    double fx = (c + 0.5) * sx - 0.5;
    fy = std::min(std::max(fy, 0.0), static_cast<double>(in_h - 1));
    fx = std::min(std::max(fx, 0.0), static_cast<double>(in_w - 1));
    const int y0 = static_cast<int>(fy);
    const int x0 = static_cast<int>(fx);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const int x1 = std::min(x0 + 1, in_w - 1);
    const double wy = fy - y0;
    const double wx = fx - x0;
    const double top = plane[y0 * in_w + x0] * (1.0 - wx) + plane[y0 * in_w + x1] * wx;
    const double bottom = plane[y1 * in_w + x0] * (1.0 - wx) + plane[y1 * in_w + x1] * wx;
    return static_cast<float>(top * (1.0 - wy) + bottom * wy);
}

// Nearest-neighbor source index for label resizes.
inline int nearest_index(int dst, int in_size, int out_size) {
    const double src = (dst + 0.5) * static_cast<double>(in_size) / out_size;
    int idx = static_cast<int>(src); // floor for non-negative src
    if (idx > in_size - 1) idx = in_size - 1;
    return idx;
}

} // namespace oracle
