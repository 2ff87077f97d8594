#include "semiseg/dataio/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>

#include "semiseg/core/error.hpp"
#include "semiseg/core/rng.hpp"
#include "semiseg/dataio/image_io.hpp"

namespace semiseg {

namespace {

const char* kShapeNames[] = {"circle", "square",  "triangle", "stripe",
                             "blob",   "diamond", "crescent", "wedge"};

Rgb hsv_color(double h, double s, double v) {
    const double hh = h * 6.0;
    const int sector = std::min(5, static_cast<int>(hh));
    const double f = hh - sector;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: return {static_cast<float>(v), static_cast<float>(t), static_cast<float>(p)};
        case 1: return {static_cast<float>(q), static_cast<float>(v), static_cast<float>(p)};
        case 2: return {static_cast<float>(p), static_cast<float>(v), static_cast<float>(t)};
        case 3: return {static_cast<float>(p), static_cast<float>(q), static_cast<float>(v)};
        case 4: return {static_cast<float>(t), static_cast<float>(p), static_cast<float>(v)};
        default: return {static_cast<float>(v), static_cast<float>(p), static_cast<float>(q)};
    }
}

struct Shape {
    int kind; // 0 rect, 1 circle, 2 triangle
    int cy, cx, extent;
    ClassId cls;

    bool covers(int r, int c) const {
        const int dy = r - cy, dx = c - cx;
        switch (kind) {
            case 0: return std::abs(dy) <= extent && std::abs(dx) <= extent;
            case 1: return dy * dy + dx * dx <= extent * extent;
            default: // upward triangle: |dx| grows with depth below the apex
                return dy >= -extent && dy <= extent && std::abs(dx) <= (dy + extent) / 2;
        }
    }
};

void render(const SyntheticConfig& config, const std::vector<Rgb>& palette, Rng& rng,
            Image& image, LabelMap& mask) {
    const int n = config.size;
    image = Image(n, n);
    mask = LabelMap(n, n, 0, LabelProvenance::ground_truth);

    Rng noise = rng.substream(0x401);
    // Textured background: a soft diagonal ramp plus per-pixel jitter, all
    // kept well inside the palette's color spacing.
    const Rgb base = palette[0];
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const float ramp = 0.04f * (static_cast<float>(r + c) / (2 * n) - 0.5f);
            float* px = image.at(r, c);
            for (int ch = 0; ch < 3; ++ch) {
                const double v = base[ch] + ramp + config.noise_sigma * noise.normal();
                px[ch] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }

    const int shape_count =
        config.min_shapes + rng.uniform_int(config.max_shapes - config.min_shapes + 1);
    for (int s = 0; s < shape_count; ++s) {
        Shape shape;
        shape.kind = rng.uniform_int(3);
        shape.cls = 1 + rng.uniform_int(config.num_classes - 1);
        shape.extent = n / 8 + rng.uniform_int(std::max(1, n / 8));
        const int margin = shape.extent + 1;
        shape.cy = margin + rng.uniform_int(std::max(1, n - 2 * margin));
        shape.cx = margin + rng.uniform_int(std::max(1, n - 2 * margin));

        const Rgb color = palette[shape.cls];
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                if (!shape.covers(r, c)) continue;
                mask.at(r, c) = shape.cls;
                float* px = image.at(r, c);
                for (int ch = 0; ch < 3; ++ch) {
                    const double v = color[ch] + config.noise_sigma * noise.normal();
                    px[ch] = static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
            }
        }
    }
}

} // namespace

std::vector<std::string> synthetic_class_names(int num_classes) {
    if (num_classes < 2) throw ConfigError("synthetic dataset needs at least two classes");
    std::vector<std::string> names{"background"};
    constexpr int kBank = static_cast<int>(std::size(kShapeNames));
    for (int c = 1; c < num_classes; ++c) {
        if (c - 1 < kBank) {
            names.emplace_back(kShapeNames[c - 1]);
        } else {
            names.push_back("entity" + std::to_string(c));
        }
    }
    return names;
}

std::vector<Rgb> synthetic_palette(int num_classes) {
    if (num_classes < 2) throw ConfigError("synthetic dataset needs at least two classes");
    std::vector<Rgb> palette;
    palette.push_back({0.35f, 0.35f, 0.35f});
    for (int c = 1; c < num_classes; ++c) {
        palette.push_back(hsv_color(static_cast<double>(c - 1) / (num_classes - 1), 0.85, 0.9));
    }
    return palette;
}

DatasetDescriptor generate_synthetic_dataset(const std::filesystem::path& root,
                                             const SyntheticConfig& config) {
    if (config.num_classes < 2) throw ConfigError("synthetic dataset needs at least two classes");
    if (config.size < 16) throw ConfigError("synthetic images must be at least 16x16");
    if (config.train_images < 1 || config.val_images < 1) {
        throw ConfigError("synthetic dataset needs at least one train and one val image");
    }
    if (config.min_shapes < 1 || config.max_shapes < config.min_shapes) {
        throw ConfigError("invalid shape-count range");
    }

    const std::vector<Rgb> palette = synthetic_palette(config.num_classes);
    DatasetDescriptor descriptor{
        "synthetic",
        root,
        ClassVocabulary(synthetic_class_names(config.num_classes),
                        BackgroundPolicy::explicit_background),
        palette,
        {},
        {},
    };

    Rng master(config.seed);
    auto emit = [&](const std::string& id, std::uint64_t salt) {
        Rng rng = master.substream(salt);
        Image image;
        LabelMap mask;
        render(config, palette, rng, image, mask);
        write_image_png(descriptor.image_path(id), image);
        write_label_png(descriptor.label_path(id), mask);
    };

    char buf[32];
    for (int i = 0; i < config.train_images; ++i) {
        std::snprintf(buf, sizeof buf, "train_%04d", i);
        descriptor.train_ids.emplace_back(buf);
        emit(descriptor.train_ids.back(), 0x1000000ULL + i);
    }
    for (int i = 0; i < config.val_images; ++i) {
        std::snprintf(buf, sizeof buf, "val_%04d", i);
        descriptor.val_ids.emplace_back(buf);
        emit(descriptor.val_ids.back(), 0x2000000ULL + i);
    }

    save_descriptor(descriptor);
    return descriptor;
}

} // namespace semiseg
