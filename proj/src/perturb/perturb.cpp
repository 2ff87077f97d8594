#include "semiseg/perturb/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semiseg/core/error.hpp"

namespace semiseg {

namespace {

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

// Rec.601 luma, the convention used by common image pipelines.
double luma(const float* rgb) {
    return 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
}

Image resize_bilinear(const Image& src, int out_h, int out_w) {
    if (out_h == src.height && out_w == src.width) return src;
    Image dst;
    dst.height = out_h;
    dst.width = out_w;
    dst.values.resize(static_cast<std::size_t>(out_h) * out_w * 3);
    const double sy = static_cast<double>(src.height) / out_h;
    const double sx = static_cast<double>(src.width) / out_w;
    for (int r = 0; r < out_h; ++r) {
        double fy = (r + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int c = 0; c < out_w; ++c) {
            double fx = (c + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            float* out = dst.at(r, c);
            for (int ch = 0; ch < 3; ++ch) {
                const double top = src.at(y0, x0)[ch] * (1.0 - wx) + src.at(y0, x1)[ch] * wx;
                const double bot = src.at(y1, x0)[ch] * (1.0 - wx) + src.at(y1, x1)[ch] * wx;
                out[ch] = static_cast<float>(top * (1.0 - wy) + bot * wy);
            }
        }
    }
    return dst;
}

LabelMap resize_nearest(const LabelMap& src, int out_h, int out_w) {
    if (out_h == src.height && out_w == src.width) return src;
    LabelMap dst;
    dst.height = out_h;
    dst.width = out_w;
    dst.provenance = src.provenance;
    dst.ids.resize(static_cast<std::size_t>(out_h) * out_w);
    const double sy = static_cast<double>(src.height) / out_h;
    const double sx = static_cast<double>(src.width) / out_w;
    for (int r = 0; r < out_h; ++r) {
        const int y = std::min(static_cast<int>((r + 0.5) * sy), src.height - 1);
        for (int c = 0; c < out_w; ++c) {
            const int x = std::min(static_cast<int>((c + 0.5) * sx), src.width - 1);
            dst.at(r, c) = src.at(y, x);
        }
    }
    return dst;
}

std::pair<int, int> resized_dims(int height, int width, double scale) {
    const int rh = std::max(1, static_cast<int>(std::lround(height * scale)));
    const int rw = std::max(1, static_cast<int>(std::lround(width * scale)));
    return {rh, rw};
}

void check_crop(const CropBox& box, int resized_h, int resized_w) {
    if (box.empty()) throw ConfigError("geometric record has an empty crop box");
    if (box.h > resized_h || box.w > resized_w) {
        throw ConfigError("crop " + std::to_string(box.h) + "x" + std::to_string(box.w) +
                          " is larger than the resized image " + std::to_string(resized_h) +
                          "x" + std::to_string(resized_w));
    }
    if (box.x < 0 || box.y < 0 || box.y + box.h > resized_h || box.x + box.w > resized_w) {
        throw ConfigError("crop box [" + std::to_string(box.x) + "," + std::to_string(box.y) +
                          "," + std::to_string(box.h) + "," + std::to_string(box.w) +
                          "] exceeds resized bounds " + std::to_string(resized_h) + "x" +
                          std::to_string(resized_w));
    }
}

} // namespace

GeometricRecord sample_geometric(int height, int width, const PerturbConfig& config, Rng& rng) {
    if (height <= 0 || width <= 0) throw DataError("sample_geometric: empty input");
    if (config.crop_size <= 0) throw ConfigError("crop_size must be positive");
    if (!(config.scale_min > 0.0) || config.scale_max < config.scale_min) {
        throw ConfigError("invalid resize scale range");
    }
    // The crop must fit inside the resized image, so the scale draw is
    // clamped from below when the raw range would make it infeasible.
    const double feasible = static_cast<double>(config.crop_size) / std::min(height, width);
    if (feasible > config.scale_max) {
        throw ConfigError("crop_size " + std::to_string(config.crop_size) +
                          " cannot fit a " + std::to_string(height) + "x" +
                          std::to_string(width) + " image at scale_max");
    }
    GeometricRecord record;
    record.resize_scale = std::max(rng.uniform(config.scale_min, config.scale_max), feasible);
    auto [rh, rw] = resized_dims(height, width, record.resize_scale);
    while (rh < config.crop_size || rw < config.crop_size) { // rounding edge
        record.resize_scale *= 1.0 + 1e-9;
        std::tie(rh, rw) = resized_dims(height, width, record.resize_scale);
    }
    record.crop.h = config.crop_size;
    record.crop.w = config.crop_size;
    record.crop.y = rng.uniform_int(rh - config.crop_size + 1);
    record.crop.x = rng.uniform_int(rw - config.crop_size + 1);
    record.hflip = rng.bernoulli(config.hflip_p);
    return record;
}

Image apply_geometric(const Image& image, const GeometricRecord& record) {
    validate_image(image);
    const auto [rh, rw] = resized_dims(image.height, image.width, record.resize_scale);
    check_crop(record.crop, rh, rw);
    const Image resized = resize_bilinear(image, rh, rw);

    Image out;
    out.height = record.crop.h;
    out.width = record.crop.w;
    out.values.resize(static_cast<std::size_t>(out.height) * out.width * 3);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            const int dc = record.hflip ? out.width - 1 - c : c;
            std::copy_n(resized.at(record.crop.y + r, record.crop.x + c), 3, out.at(r, dc));
        }
    }
    return out;
}

LabelMap apply_geometric(const LabelMap& map, const GeometricRecord& record) {
    if (map.height <= 0 || map.width <= 0) throw DataError("apply_geometric: empty label map");
    const auto [rh, rw] = resized_dims(map.height, map.width, record.resize_scale);
    check_crop(record.crop, rh, rw);
    const LabelMap resized = resize_nearest(map, rh, rw);

    LabelMap out;
    out.height = record.crop.h;
    out.width = record.crop.w;
    out.provenance = map.provenance;
    out.ids.resize(static_cast<std::size_t>(out.height) * out.width);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            const int dc = record.hflip ? out.width - 1 - c : c;
            out.at(r, dc) = resized.at(record.crop.y + r, record.crop.x + c);
        }
    }
    return out;
}

WeakView weak_view(const Image& image, const std::vector<LabelMap>& aligned_maps,
                   const PerturbConfig& config, Rng& rng) {
    for (const LabelMap& map : aligned_maps) {
        if (map.height != image.height || map.width != image.width) {
            throw DataError("weak_view: label map is not aligned with the image");
        }
    }
    WeakView view;
    view.record = sample_geometric(image.height, image.width, config, rng);
    view.image = apply_geometric(image, view.record);
    view.maps.reserve(aligned_maps.size());
    for (const LabelMap& map : aligned_maps) {
        view.maps.push_back(apply_geometric(map, view.record));
    }
    return view;
}

namespace {

CropBox sample_cutmix_box(int height, int width, const PerturbConfig& config, Rng& rng) {
    const double area = rng.uniform(config.cutmix_area_min, config.cutmix_area_max) *
                        static_cast<double>(height) * width;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double ratio = rng.uniform(config.cutmix_ratio, 1.0 / config.cutmix_ratio);
        const int bh = std::max(1, static_cast<int>(std::sqrt(area * ratio)));
        const int bw = std::max(1, static_cast<int>(std::sqrt(area / ratio)));
        if (bh > height || bw > width) continue;
        const int y = rng.uniform_int(height - bh + 1);
        const int x = rng.uniform_int(width - bw + 1);
        return {x, y, bh, bw};
    }
    // Unreachable in practice; fall back to a centered square of the drawn area.
    const int side = std::max(1, std::min({static_cast<int>(std::sqrt(area)), height, width}));
    return {(width - side) / 2, (height - side) / 2, side, side};
}

} // namespace

StrongParams sample_strong_params(const PerturbConfig& config, int crop_h, int crop_w, Rng& rng) {
    if (crop_h <= 0 || crop_w <= 0) throw DataError("sample_strong_params: empty view");
    StrongParams params;
    params.jitter.apply = rng.bernoulli(config.color_jitter_p);
    if (params.jitter.apply) {
        std::iota(params.jitter.order.begin(), params.jitter.order.end(), 0);
        rng.shuffle(params.jitter.order);
        params.jitter.brightness = rng.uniform(std::max(0.0, 1.0 - config.brightness),
                                               1.0 + config.brightness);
        params.jitter.contrast = rng.uniform(std::max(0.0, 1.0 - config.contrast),
                                             1.0 + config.contrast);
        params.jitter.saturation = rng.uniform(std::max(0.0, 1.0 - config.saturation),
                                               1.0 + config.saturation);
        params.jitter.hue_shift = rng.uniform(-config.hue, config.hue);
    }
    params.grayscale = rng.bernoulli(config.grayscale_p);
    params.gaussian_blur = rng.bernoulli(config.blur_p);
    if (params.gaussian_blur) {
        params.blur_sigma = rng.uniform(config.blur_sigma_min, config.blur_sigma_max);
    }
    if (rng.bernoulli(config.cutmix_p)) {
        params.cutmix_box = sample_cutmix_box(crop_h, crop_w, config, rng);
    }
    return params;
}

namespace {

void adjust_brightness(Image& image, double factor) {
    for (float& v : image.values) v = clamp01(v * factor);
}

void adjust_contrast(Image& image, double factor) {
    double mean = 0.0;
    const std::size_t pixels = image.values.size() / 3;
    for (std::size_t i = 0; i < pixels; ++i) mean += luma(&image.values[i * 3]);
    mean /= static_cast<double>(pixels);
    for (float& v : image.values) v = clamp01(factor * v + (1.0 - factor) * mean);
}

void adjust_saturation(Image& image, double factor) {
    const std::size_t pixels = image.values.size() / 3;
    for (std::size_t i = 0; i < pixels; ++i) {
        float* px = &image.values[i * 3];
        const double gray = luma(px);
        for (int ch = 0; ch < 3; ++ch) px[ch] = clamp01(factor * px[ch] + (1.0 - factor) * gray);
    }
}

void adjust_hue(Image& image, double shift) {
    const std::size_t pixels = image.values.size() / 3;
    for (std::size_t i = 0; i < pixels; ++i) {
        float* px = &image.values[i * 3];
        const double r = px[0], g = px[1], b = px[2];
        const double maxc = std::max({r, g, b});
        const double minc = std::min({r, g, b});
        const double delta = maxc - minc;
        double h = 0.0;
        if (delta > 0.0) {
            if (maxc == r) h = std::fmod((g - b) / delta, 6.0);
            else if (maxc == g) h = (b - r) / delta + 2.0;
            else h = (r - g) / delta + 4.0;
            h /= 6.0;
        }
        h = std::fmod(h + shift + 1.0, 1.0);
        const double s = maxc > 0.0 ? delta / maxc : 0.0;
        const double v = maxc;
        const double hh = h * 6.0;
        const int sector = std::min(5, static_cast<int>(hh));
        const double f = hh - sector;
        const double p = v * (1.0 - s);
        const double q = v * (1.0 - s * f);
        const double t = v * (1.0 - s * (1.0 - f));
        double out[3];
        switch (sector) {
            case 0: out[0] = v; out[1] = t; out[2] = p; break;
            case 1: out[0] = q; out[1] = v; out[2] = p; break;
            case 2: out[0] = p; out[1] = v; out[2] = t; break;
            case 3: out[0] = p; out[1] = q; out[2] = v; break;
            case 4: out[0] = t; out[1] = p; out[2] = v; break;
            default: out[0] = v; out[1] = p; out[2] = q; break;
        }
        for (int ch = 0; ch < 3; ++ch) px[ch] = clamp01(out[ch]);
    }
}

void to_grayscale(Image& image) {
    const std::size_t pixels = image.values.size() / 3;
    for (std::size_t i = 0; i < pixels; ++i) {
        float* px = &image.values[i * 3];
        const float gray = clamp01(luma(px));
        px[0] = px[1] = px[2] = gray;
    }
}

void gaussian_blur(Image& image, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    const int h = image.height, w = image.width;
    std::vector<float> tmp(image.values.size());
    // Horizontal pass with edge replication.
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int ch = 0; ch < 3; ++ch) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    const int sc = std::clamp(c + k, 0, w - 1);
                    acc += kernel[k + radius] * image.at(r, sc)[ch];
                }
                tmp[(static_cast<std::size_t>(r) * w + c) * 3 + ch] = static_cast<float>(acc);
            }
        }
    }
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int ch = 0; ch < 3; ++ch) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    const int sr = std::clamp(r + k, 0, h - 1);
                    acc += kernel[k + radius] * tmp[(static_cast<std::size_t>(sr) * w + c) * 3 + ch];
                }
                image.at(r, c)[ch] = clamp01(acc);
            }
        }
    }
}

} // namespace

Image photometric_view(const Image& image, const StrongParams& params) {
    validate_image(image);
    Image out = image;
    if (params.jitter.apply) {
        for (int op : params.jitter.order) {
            switch (op) {
                case 0: adjust_brightness(out, params.jitter.brightness); break;
                case 1: adjust_contrast(out, params.jitter.contrast); break;
                case 2: adjust_saturation(out, params.jitter.saturation); break;
                default: adjust_hue(out, params.jitter.hue_shift); break;
            }
        }
    }
    if (params.grayscale) to_grayscale(out);
    if (params.gaussian_blur) gaussian_blur(out, params.blur_sigma);
    return out;
}

Image strong_view(const Image& weak_image, const StrongParams& params,
                  const Image& partner_weak_image) {
    Image out = photometric_view(weak_image, params);
    const CropBox& box = params.cutmix_box;
    if (box.empty()) return out;
    if (partner_weak_image.height != weak_image.height ||
        partner_weak_image.width != weak_image.width) {
        throw DataError("strong_view: partner shape mismatch");
    }
    if (box.y + box.h > out.height || box.x + box.w > out.width || box.x < 0 || box.y < 0) {
        throw ConfigError("strong_view: cutmix box exceeds view bounds");
    }
    const Image partner = photometric_view(partner_weak_image, params);
    for (int r = box.y; r < box.y + box.h; ++r) {
        for (int c = box.x; c < box.x + box.w; ++c) {
            std::copy_n(partner.at(r, c), 3, out.at(r, c));
        }
    }
    return out;
}

LabelMap cutmix_labels(const LabelMap& base, const LabelMap& inside, const CropBox& box) {
    if (base.height != inside.height || base.width != inside.width) {
        throw DataError("cutmix_labels: shape mismatch");
    }
    LabelMap out = base;
    if (box.empty()) return out;
    if (box.x < 0 || box.y < 0 || box.y + box.h > base.height || box.x + box.w > base.width) {
        throw ConfigError("cutmix_labels: box exceeds map bounds");
    }
    for (int r = box.y; r < box.y + box.h; ++r) {
        for (int c = box.x; c < box.x + box.w; ++c) out.at(r, c) = inside.at(r, c);
    }
    return out;
}

void feature_dropout(float* data, int channels, std::size_t per_channel, double p, Rng& rng,
                     std::vector<std::uint8_t>* kept) {
    if (p < 0.0 || p >= 1.0) throw ConfigError("feature dropout probability must be in [0, 1)");
    if (channels <= 0) throw DataError("feature_dropout: no channels");
    const float scale = static_cast<float>(1.0 / (1.0 - p));
    if (kept) kept->assign(channels, 1);
    for (int ch = 0; ch < channels; ++ch) {
        float* row = data + static_cast<std::size_t>(ch) * per_channel;
        if (rng.bernoulli(p)) {
            std::fill_n(row, per_channel, 0.0f);
            if (kept) (*kept)[ch] = 0;
        } else if (p > 0.0) {
            for (std::size_t i = 0; i < per_channel; ++i) row[i] *= scale;
        }
    }
}

} // namespace semiseg
