#pragma once

#include "semiseg/core/types.hpp"

namespace semiseg {

struct EnhancementConfig {
    double tau = 0.7;
};

void validate(const EnhancementConfig& config); // tau in (0, 1]

// Per pixel: the model branch (argmax_c p_w, ties to the lowest index)
// when max_c p_w >= tau, otherwise the pseudo-label branch. Pseudo pixels
// that are unassigned (ignore_id) under low confidence stay ignore_id.
// tau is deliberately unrestricted here so callers can sweep it; the
// config type enforces the valid range.
LabelMap enhance_labels(const ConfidenceMap& p_w, const LabelMap& l_p, double tau);

struct EnhancementStats {
    double frac_from_pseudo = 0.0;
    double frac_from_model = 0.0;
    double frac_ignore = 0.0;
};

EnhancementStats enhancement_stats(const ConfidenceMap& p_w, const LabelMap& l_p, double tau,
                                   ClassId ignore_id);

} // namespace semiseg
