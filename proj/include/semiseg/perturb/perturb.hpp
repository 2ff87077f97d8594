#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "semiseg/core/rng.hpp"
#include "semiseg/core/types.hpp"

namespace semiseg {

struct CropBox {
    int x = 0; // column of the top-left corner
    int y = 0; // row of the top-left corner
    int h = 0;
    int w = 0;

    bool empty() const { return h <= 0 || w <= 0; }
    bool operator==(const CropBox&) const = default;
};

// Full description of one weak (geometric) view: resize by `resize_scale`,
// crop, then optional horizontal flip. The crop box must lie inside the
// resized bounds. Applying the same record to an image and its label maps
// keeps them pixel-aligned.
struct GeometricRecord {
    double resize_scale = 1.0;
    CropBox crop;
    bool hflip = false;

    bool operator==(const GeometricRecord&) const = default;
};

struct ColorJitterDraw {
    bool apply = false;
    std::array<int, 4> order = {0, 1, 2, 3}; // over {brightness, contrast, saturation, hue}
    double brightness = 1.0;
    double contrast = 1.0;
    double saturation = 1.0;
    double hue_shift = 0.0; // fraction of the hue circle, in [-0.5, 0.5]
};

// All random draws behind one strong view, fixed at sampling time so the
// view can be re-applied bit-identically.
struct StrongParams {
    ColorJitterDraw jitter;
    bool grayscale = false;
    bool gaussian_blur = false;
    double blur_sigma = 0.0;
    CropBox cutmix_box;      // zero-area when CutMix was not drawn
    int cutmix_partner = -1; // batch index, assigned by the batch builder
};

struct PerturbConfig {
    double scale_min = 0.5;
    double scale_max = 2.0;
    int crop_size = 321;
    double hflip_p = 0.5;

    double color_jitter_p = 0.8;
    double brightness = 0.5;
    double contrast = 0.5;
    double saturation = 0.5;
    double hue = 0.25;
    double grayscale_p = 0.2;
    double blur_p = 0.5;
    double blur_sigma_min = 0.1;
    double blur_sigma_max = 2.0;

    double cutmix_p = 0.5;
    double cutmix_area_min = 0.02;
    double cutmix_area_max = 0.4;
    double cutmix_ratio = 0.3; // aspect sampled from [ratio, 1/ratio]

    double feature_dropout_p = 0.5;
};

GeometricRecord sample_geometric(int height, int width, const PerturbConfig& config, Rng& rng);

// Bilinear for images. Throws ConfigError if the crop box leaves the
// resized bounds.
Image apply_geometric(const Image& image, const GeometricRecord& record);

// Nearest-neighbor for label maps.
LabelMap apply_geometric(const LabelMap& map, const GeometricRecord& record);

struct WeakView {
    Image image;
    std::vector<LabelMap> maps;
    GeometricRecord record;
};

// One weak view: a single sampled geometry applied to the image and every
// aligned label map.
WeakView weak_view(const Image& image, const std::vector<LabelMap>& aligned_maps,
                   const PerturbConfig& config, Rng& rng);

StrongParams sample_strong_params(const PerturbConfig& config, int crop_h, int crop_w, Rng& rng);

// Photometric part of a strong view; pixel positions never move.
Image photometric_view(const Image& image, const StrongParams& params);

// Photometric ops on the weak view (the partner gets the same draws),
// then the cutmix box is replaced by the partner's pixels.
Image strong_view(const Image& weak_image, const StrongParams& params,
                  const Image& partner_weak_image);

// Label counterpart of CutMix: inside the box ids come from `inside`,
// outside from `base`.
LabelMap cutmix_labels(const LabelMap& base, const LabelMap& inside, const CropBox& box);

// Channel dropout over a (channels x per_channel) contiguous grid: each
// channel is zeroed independently with probability p and survivors are
// scaled by 1/(1-p). `kept` (when given) receives the per-channel keep
// mask for gradient replay.
void feature_dropout(float* data, int channels, std::size_t per_channel, double p, Rng& rng,
                     std::vector<std::uint8_t>* kept = nullptr);

} // namespace semiseg
