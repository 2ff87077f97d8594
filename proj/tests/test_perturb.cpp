#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "semiseg/core/rng.hpp"
#include "semiseg/perturb/perturb.hpp"

using namespace semiseg;

namespace {

Image ramp_image(int h, int w) {
    Image image(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            float* px = image.at(r, c);
            px[0] = static_cast<float>(c) / static_cast<float>(w);
            px[1] = static_cast<float>(r) / static_cast<float>(h);
            px[2] = 0.5f;
        }
    }
    return image;
}

LabelMap block_labels(int h, int w, int block) {
    LabelMap map(h, w, 0, LabelProvenance::ground_truth);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            map.at(r, c) = (r / block) * (w / block) + (c / block);
        }
    }
    return map;
}

PerturbConfig small_config(int crop) {
    PerturbConfig config;
    config.crop_size = crop;
    return config;
}

StrongParams neutral_params() {
    StrongParams params;
    params.jitter.apply = true;
    params.jitter.brightness = 1.0;
    params.jitter.contrast = 1.0;
    params.jitter.saturation = 1.0;
    params.jitter.hue_shift = 0.0;
    return params;
}

} // namespace

TEST_CASE("sampled geometry is always feasible") {
    Rng rng(31);
    const PerturbConfig config = small_config(24);
    for (int trial = 0; trial < 500; ++trial) {
        const GeometricRecord rec = sample_geometric(40, 64, config, rng);
        CHECK(rec.resize_scale <= config.scale_max * (1.0 + 1e-6));
        CHECK(rec.resize_scale >= config.scale_min);
        const int rh = static_cast<int>(std::lround(40 * rec.resize_scale));
        const int rw = static_cast<int>(std::lround(64 * rec.resize_scale));
        CHECK(rec.crop.h == 24);
        CHECK(rec.crop.w == 24);
        CHECK(rec.crop.y >= 0);
        CHECK(rec.crop.x >= 0);
        CHECK(rec.crop.y + rec.crop.h <= rh);
        CHECK(rec.crop.x + rec.crop.w <= rw);
    }
}

TEST_CASE("scale draws are clamped up when the crop needs it") {
    Rng rng(32);
    PerturbConfig config = small_config(64); // crop == min side: scale must be >= 1
    for (int trial = 0; trial < 200; ++trial) {
        const GeometricRecord rec = sample_geometric(64, 96, config, rng);
        CHECK(rec.resize_scale >= 1.0);
    }
}

TEST_CASE("an impossible crop is a config error") {
    Rng rng(33);
    PerturbConfig config = small_config(321); // 2.0 * 64 < 321
    CHECK_THROWS_AS(sample_geometric(64, 64, config, rng), ConfigError);
    config.crop_size = 0;
    CHECK_THROWS_AS(sample_geometric(64, 64, config, rng), ConfigError);
    config.crop_size = 8;
    config.scale_min = -0.5;
    CHECK_THROWS_AS(sample_geometric(64, 64, config, rng), ConfigError);
}

TEST_CASE("apply_geometric rejects crops outside the resized bounds") {
    const Image image = ramp_image(16, 16);
    GeometricRecord rec;
    rec.resize_scale = 1.0;
    rec.crop = {10, 10, 8, 8}; // 10 + 8 > 16
    CHECK_THROWS_AS(apply_geometric(image, rec), ConfigError);
    rec.crop = {0, 0, 20, 20}; // larger than the image itself
    CHECK_THROWS_AS(apply_geometric(image, rec), ConfigError);
    rec.crop = {0, 0, 8, 8};
    rec.resize_scale = 0.25; // resized to 4x4, crop 8 no longer fits
    CHECK_THROWS_AS(apply_geometric(image, rec), ConfigError);
}

TEST_CASE("identity record copies pixels and flip mirrors them") {
    const Image image = ramp_image(12, 12);
    GeometricRecord rec;
    rec.resize_scale = 1.0;
    rec.crop = {0, 0, 12, 12};
    const Image same = apply_geometric(image, rec);
    CHECK(same.values == image.values);

    rec.hflip = true;
    const Image flipped = apply_geometric(image, rec);
    for (int r = 0; r < 12; ++r) {
        for (int c = 0; c < 12; ++c) {
            CHECK(flipped.at(r, c)[0] == image.at(r, 11 - c)[0]);
            CHECK(flipped.at(r, c)[1] == image.at(r, 11 - c)[1]);
        }
    }
}

TEST_CASE("image resize matches the bilinear oracle") {
    const Image image = ramp_image(7, 9);
    GeometricRecord rec;
    rec.resize_scale = 1.7;
    const int rh = static_cast<int>(std::lround(7 * 1.7));  // 12
    const int rw = static_cast<int>(std::lround(9 * 1.7));  // 15
    rec.crop = {2, 3, 8, 8};

    const Image out = apply_geometric(image, rec);
    std::vector<float> plane(7 * 9);
    for (int ch = 0; ch < 3; ++ch) {
        for (int r = 0; r < 7; ++r)
            for (int c = 0; c < 9; ++c)
                plane[static_cast<std::size_t>(r) * 9 + c] = image.at(r, c)[ch];
        for (int r = 0; r < 8; ++r) {
            for (int c = 0; c < 8; ++c) {
                const float want =
                    oracle::bilinear_at(plane.data(), 7, 9, rh, rw, rec.crop.y + r, rec.crop.x + c);
                CHECK(out.at(r, c)[ch] == doctest::Approx(want).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("label resize matches the nearest-neighbor oracle") {
    const LabelMap map = block_labels(8, 8, 2);
    GeometricRecord rec;
    rec.resize_scale = 2.3;
    const int rh = static_cast<int>(std::lround(8 * 2.3)); // 18
    rec.crop = {1, 2, 14, 14};
    rec.hflip = true;

    const LabelMap out = apply_geometric(map, rec);
    REQUIRE(out.height == 14);
    for (int r = 0; r < 14; ++r) {
        for (int c = 0; c < 14; ++c) {
            const int rc = 13 - c; // undo the flip
            const int sr = oracle::nearest_index(rec.crop.y + r, 8, rh);
            const int sc = oracle::nearest_index(rec.crop.x + rc, 8, rh);
            CHECK(out.at(r, c) == map.at(sr, sc));
        }
    }
}

TEST_CASE("weak view applies its own record to image and maps") {
    const Image image = ramp_image(32, 48);
    const LabelMap labels = block_labels(32, 48, 4);
    Rng rng(35);
    const PerturbConfig config = small_config(16);
    const WeakView view = weak_view(image, {labels}, config, rng);

    REQUIRE(view.maps.size() == 1);
    CHECK(view.image.height == 16);
    CHECK(view.maps[0].height == 16);
    const Image replay_image = apply_geometric(image, view.record);
    const LabelMap replay_labels = apply_geometric(labels, view.record);
    CHECK(view.image.values == replay_image.values);
    CHECK(view.maps[0].ids == replay_labels.ids);

    LabelMap misaligned = block_labels(16, 48, 4);
    CHECK_THROWS_AS(weak_view(image, {misaligned}, config, rng), DataError);
}

TEST_CASE("coordinate probe stays aligned through a weak view") {
    // Image channels encode normalized source coordinates; labels encode a
    // coarse block id of the same coordinates. After any weak view, the
    // coordinates recovered from the image must fall in (or next to) the
    // block named by the label.
    const int h = 40, w = 40, block = 5;
    const Image image = ramp_image(h, w);
    const LabelMap labels = block_labels(h, w, block);
    Rng rng(36);
    const PerturbConfig config = small_config(24);
    for (int trial = 0; trial < 25; ++trial) {
        const WeakView view = weak_view(image, {labels}, config, rng);
        for (int r = 0; r < view.image.height; r += 3) {
            for (int c = 0; c < view.image.width; c += 3) {
                const double x_src = view.image.at(r, c)[0] * w;
                const double y_src = view.image.at(r, c)[1] * h;
                const ClassId id = view.maps[0].at(r, c);
                const int bx = (id % (w / block)) * block;
                const int by = (id / (w / block)) * block;
                // Bilinear vs nearest can disagree by at most one source
                // pixel plus the in-block spread.
                const double slack = block + 1.5;
                CHECK(x_src >= bx - 1.5);
                CHECK(x_src <= bx + slack);
                CHECK(y_src >= by - 1.5);
                CHECK(y_src <= by + slack);
            }
        }
    }
}

TEST_CASE("neutral photometric params are an identity") {
    const Image image = ramp_image(10, 10);
    const Image out = photometric_view(image, neutral_params());
    for (std::size_t i = 0; i < image.values.size(); ++i) {
        CHECK(std::abs(out.values[i] - image.values[i]) < 1e-6f);
    }
}

TEST_CASE("saturation zero and grayscale both level the channels") {
    const Image image = ramp_image(6, 6);
    StrongParams desat = neutral_params();
    desat.jitter.saturation = 0.0;
    const Image a = photometric_view(image, desat);
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c) {
            CHECK(a.at(r, c)[0] == doctest::Approx(a.at(r, c)[1]).epsilon(1e-6));
            CHECK(a.at(r, c)[1] == doctest::Approx(a.at(r, c)[2]).epsilon(1e-6));
        }
    }

    StrongParams gray;
    gray.grayscale = true;
    const Image b = photometric_view(image, gray);
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c) {
            CHECK(b.at(r, c)[0] == b.at(r, c)[1]);
            CHECK(b.at(r, c)[1] == b.at(r, c)[2]);
        }
    }
}

TEST_CASE("brightness scales and clamps") {
    Image image(2, 2);
    for (std::size_t i = 0; i < image.values.size(); ++i) image.values[i] = 0.6f;
    StrongParams params = neutral_params();
    params.jitter.brightness = 0.5;
    const Image dimmed = photometric_view(image, params);
    CHECK(dimmed.values[0] == doctest::Approx(0.3f));
    params.jitter.brightness = 2.0;
    const Image bright = photometric_view(image, params);
    CHECK(bright.values[0] == 1.0f); // clamped
}

TEST_CASE("hue shift preserves value and is invertible") {
    Image image(1, 2);
    image.at(0, 0)[0] = 0.8f; image.at(0, 0)[1] = 0.2f; image.at(0, 0)[2] = 0.3f;
    image.at(0, 1)[0] = 0.1f; image.at(0, 1)[1] = 0.7f; image.at(0, 1)[2] = 0.5f;

    StrongParams fwd = neutral_params();
    fwd.jitter.hue_shift = 0.2;
    StrongParams bwd = neutral_params();
    bwd.jitter.hue_shift = -0.2;

    const Image shifted = photometric_view(image, fwd);
    // Max channel (HSV value) is invariant under a pure hue rotation.
    for (int c = 0; c < 2; ++c) {
        const float* in = image.at(0, c);
        const float* out = shifted.at(0, c);
        CHECK(std::max({out[0], out[1], out[2]}) ==
              doctest::Approx(std::max({in[0], in[1], in[2]})).epsilon(1e-5));
    }
    const Image back = photometric_view(shifted, bwd);
    for (std::size_t i = 0; i < image.values.size(); ++i) {
        CHECK(back.values[i] == doctest::Approx(image.values[i]).epsilon(2e-3));
    }
}

TEST_CASE("blur keeps constants and smooths a checkerboard") {
    Image flat(8, 8);
    for (float& v : flat.values) v = 0.5f;
    StrongParams params;
    params.gaussian_blur = true;
    params.blur_sigma = 1.3;
    const Image still = photometric_view(flat, params);
    for (float v : still.values) CHECK(v == doctest::Approx(0.5f).epsilon(1e-6));

    Image checker(16, 16);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) {
            const float v = (r + c) % 2 == 0 ? 1.0f : 0.0f;
            float* px = checker.at(r, c);
            px[0] = px[1] = px[2] = v;
        }
    const Image blurred = photometric_view(checker, params);
    auto variance = [](const Image& im) {
        double mean = 0.0;
        for (float v : im.values) mean += v;
        mean /= static_cast<double>(im.values.size());
        double var = 0.0;
        for (float v : im.values) var += (v - mean) * (v - mean);
        return var / static_cast<double>(im.values.size());
    };
    CHECK(variance(blurred) < 0.05 * variance(checker));
}

TEST_CASE("strong param draws respect the configured rates and ranges") {
    Rng rng(37);
    PerturbConfig config = small_config(64);
    int jitter = 0, gray = 0, blur = 0, cut = 0;
    const int trials = 4000;
    for (int i = 0; i < trials; ++i) {
        const StrongParams p = sample_strong_params(config, 64, 64, rng);
        jitter += p.jitter.apply ? 1 : 0;
        gray += p.grayscale ? 1 : 0;
        blur += p.gaussian_blur ? 1 : 0;
        cut += p.cutmix_box.empty() ? 0 : 1;
        if (p.jitter.apply) {
            CHECK(p.jitter.brightness >= 0.5);
            CHECK(p.jitter.brightness <= 1.5);
            CHECK(p.jitter.hue_shift >= -0.25);
            CHECK(p.jitter.hue_shift <= 0.25);
            std::array<int, 4> sorted = p.jitter.order;
            std::sort(sorted.begin(), sorted.end());
            CHECK(sorted == std::array<int, 4>{0, 1, 2, 3});
        }
        if (p.gaussian_blur) {
            CHECK(p.blur_sigma >= 0.1);
            CHECK(p.blur_sigma <= 2.0);
        }
        if (!p.cutmix_box.empty()) {
            const CropBox& b = p.cutmix_box;
            CHECK(b.x >= 0);
            CHECK(b.y >= 0);
            CHECK(b.x + b.w <= 64);
            CHECK(b.y + b.h <= 64);
            const double frac = static_cast<double>(b.h) * b.w / (64.0 * 64.0);
            CHECK(frac > 0.005); // integer truncation can undershoot 0.02 slightly
            CHECK(frac < 0.45);
        }
    }
    CHECK(jitter > trials * 0.76);
    CHECK(jitter < trials * 0.84);
    CHECK(gray > trials * 0.16);
    CHECK(gray < trials * 0.24);
    CHECK(blur > trials * 0.45);
    CHECK(blur < trials * 0.55);
    CHECK(cut > trials * 0.45);
    CHECK(cut < trials * 0.55);
}

TEST_CASE("cutmix pastes the partner inside the box") {
    Image self(8, 8);
    for (float& v : self.values) v = 0.25f;
    Image partner(8, 8);
    for (float& v : partner.values) v = 0.75f;

    StrongParams params; // photometrically neutral: no jitter/gray/blur
    params.cutmix_box = {2, 3, 4, 5};

    const Image mixed = strong_view(self, params, partner);
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 8; ++c) {
            const bool inside = r >= 3 && r < 7 && c >= 2 && c < 7;
            CHECK(mixed.at(r, c)[0] == (inside ? 0.75f : 0.25f));
        }
    }

    Image small(4, 4);
    CHECK_THROWS_AS(strong_view(self, params, small), DataError);
    params.cutmix_box = {6, 6, 4, 4};
    CHECK_THROWS_AS(strong_view(self, params, partner), ConfigError);
}

TEST_CASE("both cutmix partners receive the same photometric draws") {
    Rng rng(38);
    const Image a = ramp_image(12, 12);
    Image b = ramp_image(12, 12);
    for (float& v : b.values) v = 1.0f - v;

    StrongParams params = sample_strong_params(small_config(12), 12, 12, rng);
    params.cutmix_box = {0, 0, 12, 6};
    const Image mixed = strong_view(a, params, b);
    const Image b_photo = photometric_view(b, params);
    for (int r = 0; r < 12; ++r) {
        for (int c = 0; c < 6; ++c) {
            CHECK(mixed.at(r, c)[0] == b_photo.at(r, c)[0]);
            CHECK(mixed.at(r, c)[2] == b_photo.at(r, c)[2]);
        }
    }
}

TEST_CASE("cutmix labels take provenance from the box exactly") {
    const LabelMap base(6, 6, 1, LabelProvenance::enhanced);
    const LabelMap inside(6, 6, 2, LabelProvenance::enhanced);
    const CropBox box{1, 2, 3, 4};
    const LabelMap mixed = cutmix_labels(base, inside, box);
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c) {
            const bool in = r >= 2 && r < 5 && c >= 1 && c < 5;
            CHECK(mixed.at(r, c) == (in ? 2 : 1));
        }
    }
    const LabelMap untouched = cutmix_labels(base, inside, CropBox{});
    CHECK(untouched.ids == base.ids);
    CHECK_THROWS_AS(cutmix_labels(base, inside, CropBox{4, 4, 4, 4}), ConfigError);
    const LabelMap other(5, 6, 2, LabelProvenance::enhanced);
    CHECK_THROWS_AS(cutmix_labels(base, other, box), DataError);
}

TEST_CASE("feature dropout zeroes whole channels and rescales the rest") {
    Rng rng(39);
    const int channels = 32;
    const std::size_t per_channel = 16;
    std::vector<float> data(channels * per_channel, 2.0f);
    std::vector<std::uint8_t> kept;
    feature_dropout(data.data(), channels, per_channel, 0.5, rng, &kept);
    REQUIRE(kept.size() == channels);
    for (int ch = 0; ch < channels; ++ch) {
        const float* row = data.data() + static_cast<std::size_t>(ch) * per_channel;
        for (std::size_t i = 0; i < per_channel; ++i) {
            CHECK(row[i] == (kept[static_cast<std::size_t>(ch)] ? 4.0f : 0.0f));
        }
    }
}

TEST_CASE("feature dropout is unbiased in expectation") {
    Rng rng(40);
    const int channels = 10;
    double sum = 0.0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        std::vector<float> data(channels, 1.0f);
        feature_dropout(data.data(), channels, 1, 0.5, rng, nullptr);
        for (float v : data) sum += v;
    }
    const double mean = sum / (trials * channels);
    CHECK(mean > 0.95);
    CHECK(mean < 1.05);
}

TEST_CASE("feature dropout probability is validated") {
    Rng rng(41);
    std::vector<float> data(4, 1.0f);
    CHECK_THROWS_AS(feature_dropout(data.data(), 4, 1, 1.0, rng, nullptr), ConfigError);
    CHECK_THROWS_AS(feature_dropout(data.data(), 4, 1, -0.1, rng, nullptr), ConfigError);
    feature_dropout(data.data(), 4, 1, 0.0, rng, nullptr);
    CHECK(data == std::vector<float>(4, 1.0f)); // p = 0 is an identity
}
