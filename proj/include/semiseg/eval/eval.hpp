#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "semiseg/core/types.hpp"

namespace semiseg {

// Rows index ground truth, columns index predictions; ignored ground-truth
// pixels are never counted.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes);

    int num_classes() const { return num_classes_; }
    std::uint64_t at(int gt, int pred) const;
    std::uint64_t& at(int gt, int pred);
    std::uint64_t total() const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);

private:
    int num_classes_;
    std::vector<std::uint64_t> counts_;
};

// Adds one aligned (prediction, ground truth) pair. Predictions must be
// real classes; ground-truth ignore_id pixels are skipped.
void confusion_accumulate(const LabelMap& pred, const LabelMap& gt, ClassId ignore_id,
                          ConfusionMatrix& cm);

struct IouReport {
    std::vector<double> iou;   // 0.0 placeholder where undefined
    std::vector<bool> defined; // false when tp + fp + fn == 0
};

// IoU_c = tp / (tp + fp + fn); classes absent from both gt and pred are
// flagged undefined.
IouReport iou_per_class(const ConfusionMatrix& cm);

// Mean over defined classes only; throws NumericError when none is defined.
double miou(const ConfusionMatrix& cm);

LabelMap argmax_map(const ConfidenceMap& probs); // ties to the lowest index

struct EvalResult {
    double miou = 0.0;
    double pixel_accuracy = 0.0;
    std::vector<double> per_class_iou;
    std::vector<bool> iou_defined;
    std::uint64_t evaluated_pixels = 0;
};

// Runs `predict` over `count` samples served by `load` (image at native
// resolution plus aligned ground truth) and aggregates one global
// confusion matrix.
EvalResult evaluate(const std::function<LabelMap(const Image&)>& predict,
                    const std::function<std::pair<Image, LabelMap>(std::size_t)>& load,
                    std::size_t count, const ClassVocabulary& vocab);

} // namespace semiseg
