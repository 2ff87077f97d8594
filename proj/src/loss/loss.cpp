#include "semiseg/loss/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "semiseg/core/error.hpp"

namespace semiseg {

namespace {

constexpr double kProbFloor = 1e-12;

void check_pair(int p_h, int p_w, int num_classes, const LabelMap& target) {
    if (p_h != target.height || p_w != target.width) {
        throw DataError("loss: prediction " + std::to_string(p_h) + "x" + std::to_string(p_w) +
                        " vs target " + std::to_string(target.height) + "x" +
                        std::to_string(target.width));
    }
    if (num_classes < 2) throw DataError("loss: need at least two classes");
}

void check_epsilon(double eps) {
    if (eps < 0.0 || eps >= 1.0) {
        throw ConfigError("smoothing epsilon must lie in [0, 1), got " + std::to_string(eps));
    }
}

ClassId checked_target(const LabelMap& target, std::size_t pixel, int num_classes,
                       ClassId ignore_id) {
    const ClassId id = target.ids[pixel];
    if (id != ignore_id && (id < 0 || id >= num_classes)) {
        throw DataError("loss: target id " + std::to_string(id) + " out of range at pixel " +
                        std::to_string(pixel));
    }
    return id;
}

} // namespace

void validate(const SmoothingConfig& config) {
    if (config.rule == SmoothingRule::fixed) check_epsilon(config.epsilon);
}

double resolve_epsilon(const SmoothingConfig& config, int num_classes) {
    if (num_classes < 2) throw ConfigError("smoothing needs at least two classes");
    if (config.rule == SmoothingRule::inverse_class_count) return 1.0 / num_classes;
    check_epsilon(config.epsilon);
    return config.epsilon;
}

LossValue smoothed_ce(const ConfidenceMap& p, const LabelMap& target, double eps,
                      ClassId ignore_id) {
    check_pair(p.height, p.width, p.num_classes, target);
    check_epsilon(eps);
    const int C = p.num_classes;
    const double off = eps / (C - 1);
    double sum = 0.0;
    std::size_t valid = 0;
    const std::size_t pixels = target.ids.size();
    for (std::size_t i = 0; i < pixels; ++i) {
        const ClassId t = checked_target(target, i, C, ignore_id);
        if (t == ignore_id) continue;
        const float* probs = &p.probs[i * C];
        double pixel_loss = 0.0;
        for (int c = 0; c < C; ++c) {
            const double logp = std::log(std::max(static_cast<double>(probs[c]), kProbFloor));
            pixel_loss -= (c == t ? 1.0 - eps : off) * logp;
        }
        sum += pixel_loss;
        ++valid;
    }
    return {valid == 0 ? 0.0 : sum / static_cast<double>(valid), valid};
}

LossValue smoothed_ce_logits(const float* logits, int height, int width, int num_classes,
                             const LabelMap& target, double eps, ClassId ignore_id,
                             float* grad_out) {
    check_pair(height, width, num_classes, target);
    check_epsilon(eps);
    const int C = num_classes;
    const double off = eps / (C - 1);
    const std::size_t pixels = static_cast<std::size_t>(height) * width;
    if (grad_out) std::fill_n(grad_out, pixels * C, 0.0f);

    // First pass counts the valid pixels so the gradient already carries 1/N.
    std::size_t valid = 0;
    for (std::size_t i = 0; i < pixels; ++i) {
        if (checked_target(target, i, C, ignore_id) != ignore_id) ++valid;
    }
    if (valid == 0) return {0.0, 0};

    const double inv_n = 1.0 / static_cast<double>(valid);
    double sum = 0.0;
    std::vector<double> softmax(C);
    for (std::size_t i = 0; i < pixels; ++i) {
        const ClassId t = target.ids[i];
        if (t == ignore_id) continue;
        const float* row = logits + i * C;
        double row_max = row[0];
        for (int c = 1; c < C; ++c) row_max = std::max(row_max, static_cast<double>(row[c]));
        double z = 0.0;
        for (int c = 0; c < C; ++c) {
            softmax[c] = std::exp(row[c] - row_max);
            z += softmax[c];
        }
        double pixel_loss = 0.0;
        for (int c = 0; c < C; ++c) {
            softmax[c] /= z;
            const double logp = std::log(std::max(softmax[c], kProbFloor));
            const double weight = c == t ? 1.0 - eps : off;
            pixel_loss -= weight * logp;
            if (grad_out) {
                grad_out[i * C + c] = static_cast<float>((softmax[c] - weight) * inv_n);
            }
        }
        sum += pixel_loss;
    }
    return {sum * inv_n, valid};
}

LossValue supervised_loss(const ConfidenceMap& p, const LabelMap& gt, ClassId ignore_id) {
    return smoothed_ce(p, gt, 0.0, ignore_id);
}

LossValue unlabeled_loss(const ConfidenceMap& p_fp, const ConfidenceMap& p_s1,
                         const ConfidenceMap& p_s2, const LabelMap& l_e, double eps,
                         ClassId ignore_id) {
    return unlabeled_loss(p_fp, l_e, p_s1, l_e, p_s2, l_e, eps, ignore_id);
}

LossValue unlabeled_loss(const ConfidenceMap& p_fp, const LabelMap& l_e_fp,
                         const ConfidenceMap& p_s1, const LabelMap& l_e_s1,
                         const ConfidenceMap& p_s2, const LabelMap& l_e_s2, double eps,
                         ClassId ignore_id) {
    const LossValue fp = smoothed_ce(p_fp, l_e_fp, eps, ignore_id);
    const LossValue s1 = smoothed_ce(p_s1, l_e_s1, eps, ignore_id);
    const LossValue s2 = smoothed_ce(p_s2, l_e_s2, eps, ignore_id);
    return {fp.value + s1.value + s2.value, fp.valid_pixels + s1.valid_pixels + s2.valid_pixels};
}

double total_loss(double l_s, double l_u) {
    if (!std::isfinite(l_s) || !std::isfinite(l_u)) {
        throw NumericError("total_loss: non-finite input");
    }
    return (l_s + l_u) / 2.0;
}

} // namespace semiseg
