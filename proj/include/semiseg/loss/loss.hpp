#pragma once

#include <cstddef>

#include "semiseg/core/types.hpp"

namespace semiseg {

enum class SmoothingRule { inverse_class_count, fixed };

struct SmoothingConfig {
    SmoothingRule rule = SmoothingRule::inverse_class_count;
    double epsilon = 0.0; // used only under SmoothingRule::fixed
};

void validate(const SmoothingConfig& config);
double resolve_epsilon(const SmoothingConfig& config, int num_classes);

struct LossValue {
    double value = 0.0;
    std::size_t valid_pixels = 0; // pixels that contributed to the mean

    bool no_supervision() const { return valid_pixels == 0; }
};

// Label-smoothed cross-entropy, mean over non-ignored pixels:
//   -[(1-eps) log p_t + sum_{c != t} eps/(C-1) log p_c]
// Probabilities are floored at 1e-12 before the log. All pixels ignored
// yields value 0 with valid_pixels == 0.
LossValue smoothed_ce(const ConfidenceMap& p, const LabelMap& target, double eps,
                      ClassId ignore_id);

// Same loss evaluated from raw scores (softmax applied internally).
// `logits` and `grad_out` are pixel-major (height*width) x num_classes.
// When grad_out is non-null it receives d(loss)/d(logits): per valid pixel
// (softmax - smoothed one-hot) / N, zero at ignored pixels.
LossValue smoothed_ce_logits(const float* logits, int height, int width, int num_classes,
                             const LabelMap& target, double eps, ClassId ignore_id,
                             float* grad_out = nullptr);

// Plain cross-entropy on labeled data (no smoothing).
LossValue supervised_loss(const ConfidenceMap& p, const LabelMap& gt, ClassId ignore_id);

// Sum of the three branch losses against one shared enhanced label.
LossValue unlabeled_loss(const ConfidenceMap& p_fp, const ConfidenceMap& p_s1,
                         const ConfidenceMap& p_s2, const LabelMap& l_e, double eps,
                         ClassId ignore_id);

// Per-branch enhanced labels: the feature branch keeps the unmixed map
// while each strong branch uses its own CutMix-mixed copy.
LossValue unlabeled_loss(const ConfidenceMap& p_fp, const LabelMap& l_e_fp,
                         const ConfidenceMap& p_s1, const LabelMap& l_e_s1,
                         const ConfidenceMap& p_s2, const LabelMap& l_e_s2, double eps,
                         ClassId ignore_id);

// (L_s + L_u) / 2; throws NumericError on non-finite input.
double total_loss(double l_s, double l_u);

} // namespace semiseg
