#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "semiseg/annotator/annotator.hpp"
#include "semiseg/core/rng.hpp"
#include "semiseg/providers/mock.hpp"

using namespace semiseg;

namespace {

ClassVocabulary test_vocab() {
    return ClassVocabulary({"background", "circle", "square"},
                           BackgroundPolicy::explicit_background);
}

Palette test_palette() {
    return {{0.3f, 0.3f, 0.3f}, {0.9f, 0.1f, 0.1f}, {0.1f, 0.1f, 0.9f}};
}

FeatureMap random_features(int h, int w, int dim, Rng& rng) {
    FeatureMap f(h, w, dim);
    for (float& v : f.values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return f;
}

SegmentMask random_mask(int h, int w, Rng& rng) {
    SegmentMask m(h, w);
    bool any = false;
    for (auto& bit : m.bits) {
        bit = rng.bernoulli(0.4) ? 1 : 0;
        any |= bit != 0;
    }
    if (!any) m.bits[0] = 1;
    return m;
}

// Two rectangles of palette classes 1 and 2 over background.
Image scene_image() {
    Image image(32, 32);
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) {
            float* px = image.at(r, c);
            px[0] = 0.3f;
            px[1] = 0.3f;
            px[2] = 0.3f;
        }
    }
    for (int r = 4; r < 16; ++r) {
        for (int c = 4; c < 16; ++c) {
            float* px = image.at(r, c);
            px[0] = 0.9f;
            px[1] = 0.1f;
            px[2] = 0.1f;
        }
    }
    for (int r = 20; r < 30; ++r) {
        for (int c = 18; c < 30; ++c) {
            float* px = image.at(r, c);
            px[0] = 0.1f;
            px[1] = 0.1f;
            px[2] = 0.9f;
        }
    }
    return image;
}

LabelMap scene_truth() {
    LabelMap truth(32, 32, 0, LabelProvenance::ground_truth);
    for (int r = 4; r < 16; ++r)
        for (int c = 4; c < 16; ++c) truth.at(r, c) = 1;
    for (int r = 20; r < 30; ++r)
        for (int c = 18; c < 30; ++c) truth.at(r, c) = 2;
    return truth;
}

} // namespace

TEST_CASE("segment pooling equals the explicit masked mean") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const FeatureMap f = random_features(6, 7, 5, rng);
        const SegmentMask m = random_mask(6, 7, rng);
        const auto got = pool_segment_embedding(f, m);
        const auto want = oracle::masked_mean(f, m);
        REQUIRE(got.size() == want.size());
        for (std::size_t d = 0; d < got.size(); ++d) {
            CHECK(got[d] == doctest::Approx(want[d]).epsilon(1e-6));
        }
    }
}

TEST_CASE("pooling rejects empty masks and shape mismatches") {
    Rng rng(3);
    const FeatureMap f = random_features(4, 4, 3, rng);
    SegmentMask empty(4, 4);
    CHECK_THROWS_AS(pool_segment_embedding(f, empty), DataError);
    SegmentMask wrong(3, 4);
    wrong.bits[0] = 1;
    CHECK_THROWS_AS(pool_segment_embedding(f, wrong), DataError);
}

TEST_CASE("class similarities match the explicit cosine") {
    Rng rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<float> seg(8);
        for (float& v : seg) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        std::vector<std::vector<float>> classes(3, std::vector<float>(8));
        for (auto& e : classes)
            for (float& v : e) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        const auto sims = class_similarities(seg, classes);
        REQUIRE(sims.size() == 3);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(sims[c] == doctest::Approx(oracle::cosine(seg, classes[c])).epsilon(1e-9));
            CHECK(sims[c] >= -1.0 - 1e-12);
            CHECK(sims[c] <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("feature resampling uses the shared bilinear convention") {
    Rng rng(23);
    const FeatureMap f = random_features(4, 5, 3, rng);
    const FeatureMap up = resample_feature_map(f, 9, 11);
    REQUIRE(up.height == 9);
    REQUIRE(up.width == 11);
    std::vector<float> plane(4 * 5);
    for (int d = 0; d < 3; ++d) {
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 5; ++c) plane[static_cast<std::size_t>(r) * 5 + c] = f.at(r, c)[d];
        for (int r = 0; r < 9; ++r) {
            for (int c = 0; c < 11; ++c) {
                const float want = oracle::bilinear_at(plane.data(), 4, 5, 9, 11, r, c);
                CHECK(up.at(r, c)[d] == doctest::Approx(want).epsilon(1e-5));
            }
        }
    }
    // Identity when the size already matches.
    const FeatureMap same = resample_feature_map(f, 4, 5);
    CHECK(same.values == f.values);
}

TEST_CASE("zero-shot annotation recovers the synthetic scene") {
    const ClassVocabulary vocab = test_vocab();
    const MockJointSpace space(vocab, 16, 7);
    const ColorRegionProposer proposer(test_palette());
    const MockPatchFeatureProvider features(space, test_palette(), MockFeatureConfig{});
    const MockTextEmbedder embedder(space);
    const auto class_embeddings =
        build_text_embeddings(vocab, "a photo of a {classlabel}", embedder);

    const AnnotationResult result =
        annotate_image(scene_image(), proposer, features, class_embeddings, 0.0, vocab);
    CHECK_FALSE(result.no_segments);
    CHECK(result.labeled_fraction == 1.0);
    CHECK(result.map.provenance == LabelProvenance::pseudo);
    REQUIRE(result.segments.size() == 3);

    const LabelMap truth = scene_truth();
    std::size_t agree = 0;
    for (std::size_t i = 0; i < truth.ids.size(); ++i) {
        agree += result.map.ids[i] == truth.ids[i] ? 1 : 0;
    }
    // Patch quantization can blur the rectangle borders; the interior must
    // be recovered.
    CHECK(static_cast<double>(agree) / static_cast<double>(truth.ids.size()) > 0.9);
    CHECK(result.map.at(8, 8) == 1);
    CHECK(result.map.at(24, 24) == 2);
    CHECK(result.map.at(0, 0) == 0);
}

TEST_CASE("an unreachable threshold leaves segments unassigned") {
    const ClassVocabulary vocab = test_vocab();
    const MockJointSpace space(vocab, 16, 7);
    const ColorRegionProposer proposer(test_palette());
    const MockPatchFeatureProvider features(space, test_palette(), MockFeatureConfig{});
    const MockTextEmbedder embedder(space);
    const auto class_embeddings =
        build_text_embeddings(vocab, "a photo of a {classlabel}", embedder);

    const AnnotationResult result =
        annotate_image(scene_image(), proposer, features, class_embeddings, 1.5, vocab);
    for (const auto& seg : result.segments) CHECK_FALSE(seg.assigned_class.has_value());
    // Explicit-background vocabularies paint unassigned pixels as class 0.
    for (const ClassId id : result.map.ids) CHECK(id == 0);
    CHECK(result.labeled_fraction == 1.0);

    const ClassVocabulary strict({"circle", "square"}, BackgroundPolicy::unassigned_is_ignore);
    const MockJointSpace space2(strict, 16, 7);
    const MockTextEmbedder embedder2(space2);
    const Palette two_colors = {test_palette()[1], test_palette()[2]};
    const MockPatchFeatureProvider features2(space2, two_colors, MockFeatureConfig{});
    const auto embeddings2 = build_text_embeddings(strict, "a photo of a {classlabel}", embedder2);
    const AnnotationResult ignored =
        annotate_image(scene_image(), proposer, features2, embeddings2, 1.5, strict);
    for (const ClassId id : ignored.map.ids) CHECK(id == strict.ignore_id());
    CHECK(ignored.labeled_fraction == 0.0);
}

TEST_CASE("no proposals yields an all-unassigned map") {
    const ClassVocabulary vocab = test_vocab();
    const MockJointSpace space(vocab, 16, 7);
    // A proposer with a minimum area larger than the image cannot propose.
    const ColorRegionProposer proposer(test_palette(), 100000);
    const MockPatchFeatureProvider features(space, test_palette(), MockFeatureConfig{});
    const MockTextEmbedder embedder(space);
    const auto class_embeddings =
        build_text_embeddings(vocab, "a photo of a {classlabel}", embedder);

    const AnnotationResult result =
        annotate_image(scene_image(), proposer, features, class_embeddings, 0.0, vocab);
    CHECK(result.no_segments);
    CHECK(result.segments.empty());
    for (const ClassId id : result.map.ids) CHECK(id == vocab.unassigned_fill());
}

TEST_CASE("finer segments overwrite coarser ones") {
    // One segment covering everything scored against class 1, another
    // small inner square of class 2: painting order is by descending area.
    const ClassVocabulary vocab = test_vocab();
    const MockJointSpace space(vocab, 16, 7);
    const MockTextEmbedder embedder(space);
    const auto class_embeddings =
        build_text_embeddings(vocab, "a photo of a {classlabel}", embedder);

    // Handmade proposer output via the precomputed-style structs.
    struct FixedProposer : SegmentProposer {
        std::vector<SegmentProposal> proposals;
        std::vector<SegmentProposal> propose(const Image&) const override { return proposals; }
        ProviderIdentity identity() const override { return {"fixed", "0"}; }
    };
    struct FixedFeatures : PatchFeatureProvider {
        FeatureMap map;
        FeatureMap features(const Image&) const override { return map; }
        std::pair<int, int> native_grid(int, int) const override { return {map.height, map.width}; }
        int embedding_dim() const override { return map.dim; }
        ProviderIdentity identity() const override { return {"fixed", "0"}; }
    };

    const int size = 8;
    FixedProposer proposer;
    SegmentProposal whole;
    whole.mask = SegmentMask(size, size);
    for (auto& b : whole.mask.bits) b = 1;
    whole.area = 64;
    whole.score = 1.0;
    SegmentProposal inner;
    inner.mask = SegmentMask(size, size);
    for (int r = 2; r < 5; ++r)
        for (int c = 2; c < 5; ++c) inner.mask.at(r, c) = 1;
    inner.area = 9;
    inner.score = 0.9;
    proposer.proposals = {whole, inner};

    FixedFeatures features;
    features.map = FeatureMap(size, size, 16);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const auto& anchor =
                (r >= 2 && r < 5 && c >= 2 && c < 5) ? space.anchor(2) : space.anchor(1);
            for (int d = 0; d < 16; ++d) features.map.at(r, c)[d] = anchor[static_cast<std::size_t>(d)];
        }
    }

    const Image canvas(size, size);
    const AnnotationResult result =
        annotate_image(canvas, proposer, features, class_embeddings, 0.0, vocab);
    CHECK(result.map.at(3, 3) == 2); // inner mask painted last
    CHECK(result.map.at(0, 0) == 1);
}
