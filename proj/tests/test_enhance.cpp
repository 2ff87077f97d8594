#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "semiseg/core/rng.hpp"
#include "semiseg/enhance/enhance.hpp"

using namespace semiseg;

namespace {

ConfidenceMap random_probs(int h, int w, int num_classes, Rng& rng) {
    ConfidenceMap map(h, w, num_classes);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            float* p = map.at(r, c);
            double sum = 0.0;
            for (int k = 0; k < num_classes; ++k) {
                p[k] = static_cast<float>(-std::log(1.0 - rng.uniform()));
                sum += p[k];
            }
            for (int k = 0; k < num_classes; ++k) p[k] = static_cast<float>(p[k] / sum);
        }
    }
    return map;
}

LabelMap random_labels(int h, int w, int num_classes, double ignore_p, Rng& rng) {
    LabelMap map(h, w, 0, LabelProvenance::pseudo);
    for (ClassId& id : map.ids) {
        id = rng.bernoulli(ignore_p) ? kDefaultIgnoreId
                                     : static_cast<ClassId>(rng.uniform_int(
                                           static_cast<std::uint64_t>(num_classes)));
    }
    return map;
}

} // namespace

TEST_CASE("hand-built fusion picks the confident model pixels") {
    ConfidenceMap p(2, 2, 3);
    // (0,0): confident class 2; (0,1): flat; (1,0): confident class 0;
    // (1,1): just under the threshold.
    float* a = p.at(0, 0); a[0] = 0.05f; a[1] = 0.15f; a[2] = 0.80f;
    float* b = p.at(0, 1); b[0] = 0.34f; b[1] = 0.33f; b[2] = 0.33f;
    float* c = p.at(1, 0); c[0] = 0.90f; c[1] = 0.05f; c[2] = 0.05f;
    float* d = p.at(1, 1); d[0] = 0.69f; d[1] = 0.21f; d[2] = 0.10f;

    LabelMap pseudo(2, 2, 1, LabelProvenance::pseudo);
    pseudo.at(1, 1) = kDefaultIgnoreId;

    const LabelMap out = enhance_labels(p, pseudo, 0.7);
    CHECK(out.at(0, 0) == 2);              // model wins
    CHECK(out.at(0, 1) == 1);              // pseudo wins
    CHECK(out.at(1, 0) == 0);              // model wins
    CHECK(out.at(1, 1) == kDefaultIgnoreId); // unassigned stays ignored
    CHECK(out.provenance == LabelProvenance::enhanced);
}

TEST_CASE("threshold zero reduces to the model argmax") {
    Rng rng(51);
    const ConfidenceMap p = random_probs(6, 5, 4, rng);
    const LabelMap pseudo = random_labels(6, 5, 4, 0.3, rng);
    const LabelMap out = enhance_labels(p, pseudo, 0.0);
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 5; ++c) {
            const float* probs = p.at(r, c);
            int best = 0;
            for (int k = 1; k < 4; ++k)
                if (probs[k] > probs[best]) best = k;
            CHECK(out.at(r, c) == best);
        }
    }
}

TEST_CASE("an unreachable threshold passes the pseudo-labels through") {
    Rng rng(52);
    const ConfidenceMap p = random_probs(4, 4, 3, rng);
    const LabelMap pseudo = random_labels(4, 4, 3, 0.25, rng);
    const LabelMap out = enhance_labels(p, pseudo, 1.5);
    CHECK(out.ids == pseudo.ids);
}

TEST_CASE("argmax ties resolve to the lowest class index") {
    ConfidenceMap p(1, 1, 4);
    float* a = p.at(0, 0);
    a[0] = 0.2f; a[1] = 0.3f; a[2] = 0.3f; a[3] = 0.2f;
    const LabelMap pseudo(1, 1, 3, LabelProvenance::pseudo);
    CHECK(enhance_labels(p, pseudo, 0.0).at(0, 0) == 1);
}

TEST_CASE("fusion agrees with the oracle on random instances") {
    Rng rng(53);
    for (int trial = 0; trial < 100; ++trial) {
        const int h = 1 + static_cast<int>(rng.uniform_int(8));
        const int w = 1 + static_cast<int>(rng.uniform_int(8));
        const int classes = 2 + static_cast<int>(rng.uniform_int(3));
        const double tau = rng.uniform();
        const ConfidenceMap p = random_probs(h, w, classes, rng);
        const LabelMap pseudo = random_labels(h, w, classes, 0.2, rng);
        const LabelMap got = enhance_labels(p, pseudo, tau);
        const LabelMap want = oracle::enhance(p, pseudo, tau);
        CHECK(got.ids == want.ids);
    }
}

TEST_CASE("stats buckets partition the pixels") {
    Rng rng(54);
    const ConfidenceMap p = random_probs(10, 10, 3, rng);
    const LabelMap pseudo = random_labels(10, 10, 3, 0.3, rng);
    const double tau = 0.6;
    const EnhancementStats stats = enhancement_stats(p, pseudo, tau, kDefaultIgnoreId);
    CHECK(stats.frac_from_model + stats.frac_from_pseudo + stats.frac_ignore ==
          doctest::Approx(1.0).epsilon(1e-9));

    // Recount by hand.
    const LabelMap out = enhance_labels(p, pseudo, tau);
    int model = 0, from_pseudo = 0, ignored = 0;
    for (int r = 0; r < 10; ++r) {
        for (int c = 0; c < 10; ++c) {
            const float* probs = p.at(r, c);
            float best = probs[0];
            for (int k = 1; k < 3; ++k) best = std::max(best, probs[k]);
            if (best >= tau) {
                ++model;
            } else if (pseudo.at(r, c) == kDefaultIgnoreId) {
                ++ignored;
                CHECK(out.at(r, c) == kDefaultIgnoreId);
            } else {
                ++from_pseudo;
            }
        }
    }
    CHECK(stats.frac_from_model == doctest::Approx(model / 100.0));
    CHECK(stats.frac_from_pseudo == doctest::Approx(from_pseudo / 100.0));
    CHECK(stats.frac_ignore == doctest::Approx(ignored / 100.0));
}

TEST_CASE("monotone threshold sweep moves pixels from model to pseudo") {
    Rng rng(55);
    const ConfidenceMap p = random_probs(12, 12, 4, rng);
    const LabelMap pseudo = random_labels(12, 12, 4, 0.2, rng);
    double last_model = 2.0;
    for (double tau = 0.1; tau < 0.95; tau += 0.1) {
        const EnhancementStats stats = enhancement_stats(p, pseudo, tau, kDefaultIgnoreId);
        CHECK(stats.frac_from_model <= last_model + 1e-12);
        last_model = stats.frac_from_model;
    }
}

TEST_CASE("config validation bounds tau") {
    EnhancementConfig config;
    config.tau = 0.7;
    CHECK_NOTHROW(validate(config));
    config.tau = 1.0;
    CHECK_NOTHROW(validate(config));
    config.tau = 0.0;
    CHECK_THROWS_AS(validate(config), ConfigError);
    config.tau = 1.2;
    CHECK_THROWS_AS(validate(config), ConfigError);
}

TEST_CASE("shape mismatches are data errors") {
    Rng rng(56);
    const ConfidenceMap p = random_probs(4, 4, 3, rng);
    const LabelMap pseudo = random_labels(4, 5, 3, 0.0, rng);
    CHECK_THROWS_AS(enhance_labels(p, pseudo, 0.5), DataError);
}
