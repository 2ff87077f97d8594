#include "semiseg/eval/eval.hpp"

#include <numeric>
#include <string>

#include "semiseg/core/error.hpp"

namespace semiseg {

ConfusionMatrix::ConfusionMatrix(int num_classes) : num_classes_(num_classes) {
    if (num_classes < 2) throw ConfigError("confusion matrix needs at least two classes");
    counts_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
}

std::uint64_t ConfusionMatrix::at(int gt, int pred) const {
    return counts_[static_cast<std::size_t>(gt) * num_classes_ + pred];
}

std::uint64_t& ConfusionMatrix::at(int gt, int pred) {
    return counts_[static_cast<std::size_t>(gt) * num_classes_ + pred];
}

std::uint64_t ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (other.num_classes_ != num_classes_) {
        throw DataError("confusion matrix size mismatch in merge");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

void confusion_accumulate(const LabelMap& pred, const LabelMap& gt, ClassId ignore_id,
                          ConfusionMatrix& cm) {
    if (pred.height != gt.height || pred.width != gt.width) {
        throw DataError("confusion_accumulate: prediction and ground truth shapes differ");
    }
    const int C = cm.num_classes();
    for (std::size_t i = 0; i < gt.ids.size(); ++i) {
        const ClassId g = gt.ids[i];
        if (g == ignore_id) continue;
        const ClassId p = pred.ids[i];
        if (g < 0 || g >= C) {
            throw DataError("confusion_accumulate: ground-truth id " + std::to_string(g) +
                            " out of range");
        }
        if (p < 0 || p >= C) {
            throw DataError("confusion_accumulate: prediction id " + std::to_string(p) +
                            " out of range (ignore_id is not a valid prediction)");
        }
        ++cm.at(g, p);
    }
}

IouReport iou_per_class(const ConfusionMatrix& cm) {
    const int C = cm.num_classes();
    IouReport report;
    report.iou.assign(C, 0.0);
    report.defined.assign(C, false);
    for (int c = 0; c < C; ++c) {
        const std::uint64_t tp = cm.at(c, c);
        std::uint64_t fp = 0, fn = 0;
        for (int o = 0; o < C; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
        const std::uint64_t denom = tp + fp + fn;
        if (denom == 0) continue;
        report.iou[c] = static_cast<double>(tp) / static_cast<double>(denom);
        report.defined[c] = true;
    }
    return report;
}

double miou(const ConfusionMatrix& cm) {
    const IouReport report = iou_per_class(cm);
    double sum = 0.0;
    int defined = 0;
    for (int c = 0; c < cm.num_classes(); ++c) {
        if (!report.defined[c]) continue;
        sum += report.iou[c];
        ++defined;
    }
    if (defined == 0) throw NumericError("mIoU undefined: no class appears in gt or pred");
    return sum / defined;
}

LabelMap argmax_map(const ConfidenceMap& probs) {
    LabelMap map;
    map.height = probs.height;
    map.width = probs.width;
    map.provenance = LabelProvenance::pseudo;
    const std::size_t pixels = static_cast<std::size_t>(probs.height) * probs.width;
    map.ids.resize(pixels);
    const int C = probs.num_classes;
    for (std::size_t i = 0; i < pixels; ++i) {
        const float* row = &probs.probs[i * C];
        int best = 0;
        for (int c = 1; c < C; ++c) {
            if (row[c] > row[best]) best = c;
        }
        map.ids[i] = best;
    }
    return map;
}

EvalResult evaluate(const std::function<LabelMap(const Image&)>& predict,
                    const std::function<std::pair<Image, LabelMap>(std::size_t)>& load,
                    std::size_t count, const ClassVocabulary& vocab) {
    if (count == 0) throw DataError("evaluate: empty dataset");
    ConfusionMatrix cm(vocab.num_classes());
    for (std::size_t i = 0; i < count; ++i) {
        auto [image, gt] = load(i);
        const LabelMap pred = predict(image);
        confusion_accumulate(pred, gt, vocab.ignore_id(), cm);
    }
    EvalResult result;
    result.miou = miou(cm);
    const IouReport report = iou_per_class(cm);
    result.per_class_iou = report.iou;
    result.iou_defined = report.defined;
    result.evaluated_pixels = cm.total();
    std::uint64_t correct = 0;
    for (int c = 0; c < cm.num_classes(); ++c) correct += cm.at(c, c);
    result.pixel_accuracy = result.evaluated_pixels == 0
                                ? 0.0
                                : static_cast<double>(correct) /
                                      static_cast<double>(result.evaluated_pixels);
    return result;
}

} // namespace semiseg
