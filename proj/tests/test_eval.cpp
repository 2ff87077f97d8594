#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "semiseg/core/rng.hpp"
#include "semiseg/eval/eval.hpp"

using namespace semiseg;

namespace {

LabelMap labels_from(const std::vector<std::vector<int>>& rows) {
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows[0].size());
    LabelMap map(h, w, 0, LabelProvenance::ground_truth);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) map.at(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return map;
}

} // namespace

TEST_CASE("confusion counts a hand example and skips ignored pixels") {
    const LabelMap gt = labels_from({{0, 0, 1}, {1, 255, 2}});
    const LabelMap pred = labels_from({{0, 1, 1}, {0, 2, 2}});
    ConfusionMatrix cm(3);
    confusion_accumulate(pred, gt, 255, cm);
    CHECK(cm.total() == 5); // the 255 pixel is skipped
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 1) == 1);
    CHECK(cm.at(1, 0) == 1);
    CHECK(cm.at(2, 2) == 1);

    ConfusionMatrix other(3);
    confusion_accumulate(pred, gt, 255, other);
    other += cm;
    CHECK(other.total() == 10);
    CHECK(other.at(0, 1) == 2);
}

TEST_CASE("out-of-range ids are data errors") {
    const LabelMap gt = labels_from({{0, 1}});
    const LabelMap bad_pred = labels_from({{0, 255}});
    ConfusionMatrix cm(2);
    CHECK_THROWS_AS(confusion_accumulate(bad_pred, gt, 255, cm), DataError);

    const LabelMap bad_gt = labels_from({{0, 9}});
    const LabelMap pred = labels_from({{0, 1}});
    CHECK_THROWS_AS(confusion_accumulate(pred, bad_gt, 255, cm), DataError);

    const LabelMap short_pred = labels_from({{0}});
    CHECK_THROWS_AS(confusion_accumulate(short_pred, gt, 255, cm), DataError);
}

TEST_CASE("iou per class from hand counts") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 10; cm.at(0, 1) = 2;  // class 0: tp 10, fn 2
    cm.at(1, 1) = 5;  cm.at(1, 0) = 3;  // class 1: tp 5, fn 3, fp 2 (from gt 0)
    // class 2 never appears
    const IouReport report = iou_per_class(cm);
    CHECK(report.defined[0]);
    CHECK(report.defined[1]);
    CHECK_FALSE(report.defined[2]);
    CHECK(report.iou[0] == doctest::Approx(10.0 / (10 + 3 + 2)));
    CHECK(report.iou[1] == doctest::Approx(5.0 / (5 + 2 + 3)));
    CHECK(miou(cm) == doctest::Approx((10.0 / 15 + 5.0 / 10) / 2.0));
}

TEST_CASE("undefined classes are excluded, never averaged as zero") {
    ConfusionMatrix cm(4);
    cm.at(1, 1) = 8;
    CHECK(miou(cm) == doctest::Approx(1.0));

    ConfusionMatrix empty(3);
    CHECK_THROWS_AS(miou(empty), NumericError);
}

TEST_CASE("a class predicted but absent from gt counts as defined with zero iou") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 4;
    cm.at(0, 2) = 4; // class 2 exists only as false positives
    const IouReport report = iou_per_class(cm);
    CHECK(report.defined[2]);
    CHECK(report.iou[2] == 0.0);
    CHECK(miou(cm) == doctest::Approx((0.5 + 0.0) / 2.0));
}

TEST_CASE("miou matches the oracle on random pairs") {
    Rng rng(71);
    for (int trial = 0; trial < 100; ++trial) {
        const int h = 1 + static_cast<int>(rng.uniform_int(16));
        const int w = 1 + static_cast<int>(rng.uniform_int(16));
        const int classes = 2 + static_cast<int>(rng.uniform_int(4));
        std::vector<LabelMap> gts, preds;
        const int images = 1 + static_cast<int>(rng.uniform_int(3));
        for (int i = 0; i < images; ++i) {
            LabelMap gt(h, w, 0, LabelProvenance::ground_truth);
            LabelMap pred(h, w, 0, LabelProvenance::ground_truth);
            for (std::size_t k = 0; k < gt.ids.size(); ++k) {
                gt.ids[k] = rng.bernoulli(0.1) ? kDefaultIgnoreId
                                               : static_cast<ClassId>(rng.uniform_int(
                                                     static_cast<std::uint64_t>(classes)));
                pred.ids[k] =
                    static_cast<ClassId>(rng.uniform_int(static_cast<std::uint64_t>(classes)));
            }
            gts.push_back(std::move(gt));
            preds.push_back(std::move(pred));
        }
        ConfusionMatrix cm(classes);
        for (int i = 0; i < images; ++i) confusion_accumulate(preds[static_cast<std::size_t>(i)], gts[static_cast<std::size_t>(i)], kDefaultIgnoreId, cm);
        if (cm.total() == 0) continue;
        CHECK(miou(cm) ==
              doctest::Approx(oracle::miou(gts, preds, classes, kDefaultIgnoreId)).epsilon(1e-9));
    }
}

TEST_CASE("argmax map takes the lowest index on ties") {
    ConfidenceMap probs(1, 2, 3);
    float* a = probs.at(0, 0);
    a[0] = 0.2f; a[1] = 0.4f; a[2] = 0.4f;
    float* b = probs.at(0, 1);
    b[0] = 0.5f; b[1] = 0.25f; b[2] = 0.25f;
    const LabelMap map = argmax_map(probs);
    CHECK(map.at(0, 0) == 1);
    CHECK(map.at(0, 1) == 0);
}

TEST_CASE("evaluate aggregates one global confusion over all samples") {
    const ClassVocabulary vocab({"background", "thing"}, BackgroundPolicy::explicit_background);
    // Sample 0 (width 2): gt [1,1], pred [1,0]. Sample 1 (width 3): all
    // class 0, predicted perfectly. Scores must pool pixels globally, not
    // average per-image IoUs.
    const EvalResult result = evaluate(
        [&](const Image& image) {
            return image.width == 2 ? labels_from({{1, 0}}) : labels_from({{0, 0, 0}});
        },
        [&](std::size_t i) {
            Image image(1, i == 0 ? 2 : 3);
            LabelMap gt = i == 0 ? labels_from({{1, 1}}) : labels_from({{0, 0, 0}});
            return std::make_pair(std::move(image), std::move(gt));
        },
        2, vocab);

    // class 0: tp 3, fp 1, fn 0 -> 3/4. class 1: tp 1, fn 1 -> 1/2.
    CHECK(result.per_class_iou[0] == doctest::Approx(0.75));
    CHECK(result.per_class_iou[1] == doctest::Approx(0.5));
    CHECK(result.miou == doctest::Approx((0.75 + 0.5) / 2));
    CHECK(result.pixel_accuracy == doctest::Approx(4.0 / 5.0));
    CHECK(result.evaluated_pixels == 5);

    CHECK_THROWS_AS(evaluate([](const Image&) { return LabelMap(); },
                             [](std::size_t) { return std::pair<Image, LabelMap>(); }, 0, vocab),
                    DataError);
}
