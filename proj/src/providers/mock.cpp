#include "semiseg/providers/mock.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "semiseg/core/error.hpp"
#include "semiseg/core/rng.hpp"
#include "semiseg/util/fnv.hpp"

namespace semiseg {

MockJointSpace::MockJointSpace(const ClassVocabulary& vocab, int dim, std::uint64_t seed)
    : dim_(dim), seed_(seed), names_(vocab.names()) {
    const int c = vocab.num_classes();
    if (dim_ < c) {
        throw ConfigError("mock joint space dim " + std::to_string(dim_) +
                          " is smaller than the class count " + std::to_string(c));
    }
    Rng rng(seed);
    anchors_.reserve(static_cast<std::size_t>(c));
    for (int k = 0; k < c; ++k) {
        std::vector<float> v(static_cast<std::size_t>(dim_));
        double norm2 = 0.0;
        while (true) {
            for (auto& x : v) x = static_cast<float>(rng.normal());
            // Gram-Schmidt against the accepted anchors.
            for (const auto& a : anchors_) {
                double dot = 0.0;
                for (int d = 0; d < dim_; ++d) dot += static_cast<double>(v[d]) * a[d];
                for (int d = 0; d < dim_; ++d) v[d] -= static_cast<float>(dot * a[d]);
            }
            norm2 = 0.0;
            for (float x : v) norm2 += static_cast<double>(x) * x;
            if (norm2 > 1e-6) break; // redraw on (vanishingly unlikely) degeneracy
        }
        const float inv = static_cast<float>(1.0 / std::sqrt(norm2));
        for (auto& x : v) x *= inv;
        anchors_.push_back(std::move(v));
    }
}

std::vector<std::vector<float>> MockTextEmbedder::embed(
    const std::vector<std::string>& prompts) const {
    std::vector<std::vector<float>> out;
    out.reserve(prompts.size());
    for (const auto& prompt : prompts) {
        int best = -1;
        std::size_t best_len = 0;
        const auto& names = space_.class_names();
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (names[c].size() > best_len && prompt.find(names[c]) != std::string::npos) {
                best = static_cast<int>(c);
                best_len = names[c].size();
            }
        }
        if (best >= 0) {
            out.push_back(space_.anchor(best));
        } else {
            Rng rng(fnv1a64(prompt, space_.seed() + 0x7e7));
            std::vector<float> v(static_cast<std::size_t>(space_.dim()));
            double norm2 = 0.0;
            for (auto& x : v) {
                x = static_cast<float>(rng.normal());
                norm2 += static_cast<double>(x) * x;
            }
            const float inv = static_cast<float>(1.0 / std::sqrt(std::max(norm2, 1e-12)));
            for (auto& x : v) x *= inv;
            out.push_back(std::move(v));
        }
    }
    return out;
}

ProviderIdentity MockTextEmbedder::identity() const {
    std::ostringstream cfg;
    cfg << "mock-text dim=" << space_.dim() << " seed=" << space_.seed();
    for (const auto& n : space_.class_names()) cfg << ' ' << n;
    return {"mock-text", hex_digest(fnv1a64(cfg.str()))};
}

int nearest_palette_color(const Palette& palette, const float* rgb) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < palette.size(); ++i) {
        double d = 0.0;
        for (int ch = 0; ch < 3; ++ch) {
            const double diff = static_cast<double>(rgb[ch]) - palette[i][static_cast<std::size_t>(ch)];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

MockPatchFeatureProvider::MockPatchFeatureProvider(MockJointSpace space, Palette palette,
                                                   MockFeatureConfig config)
    : space_(std::move(space)), palette_(std::move(palette)), config_(config) {
    if (config_.patch_size < 1) throw ConfigError("patch_size must be >= 1");
    if (palette_.size() != space_.class_names().size()) {
        throw ConfigError("palette size does not match the vocabulary");
    }
}

std::pair<int, int> MockPatchFeatureProvider::native_grid(int image_height,
                                                          int image_width) const {
    return {(image_height + config_.patch_size - 1) / config_.patch_size,
            (image_width + config_.patch_size - 1) / config_.patch_size};
}

TokenMatrix MockPatchFeatureProvider::raw_tokens(const Image& image) const {
    validate_image(image);
    const auto [gh, gw] = native_grid(image.height, image.width);
    TokenMatrix tokens(static_cast<Eigen::Index>(gh) * gw, space_.dim());
    Rng noise_root = Rng(config_.seed).substream(0x70f);
    for (int gr = 0; gr < gh; ++gr) {
        for (int gc = 0; gc < gw; ++gc) {
            // Mean color over the patch.
            double mean[3] = {0, 0, 0};
            int count = 0;
            for (int r = gr * config_.patch_size;
                 r < std::min((gr + 1) * config_.patch_size, image.height); ++r) {
                for (int c = gc * config_.patch_size;
                     c < std::min((gc + 1) * config_.patch_size, image.width); ++c) {
                    const float* px = image.at(r, c);
                    for (int ch = 0; ch < 3; ++ch) mean[ch] += px[ch];
                    ++count;
                }
            }
            float rgb[3];
            for (int ch = 0; ch < 3; ++ch) rgb[ch] = static_cast<float>(mean[ch] / count);

            const int cls = nearest_palette_color(palette_, rgb);
            const auto& anchor = space_.anchor(cls);
            Rng rng = noise_root.substream(static_cast<std::uint64_t>(gr) * 0x10001 + gc);
            const Eigen::Index row = static_cast<Eigen::Index>(gr) * gw + gc;
            for (int d = 0; d < space_.dim(); ++d) {
                tokens(row, d) = anchor[static_cast<std::size_t>(d)] +
                                 static_cast<float>(config_.noise_sigma * rng.normal());
            }
        }
    }
    return tokens;
}

FeatureMap MockPatchFeatureProvider::features(const Image& image) const {
    const auto [gh, gw] = native_grid(image.height, image.width);
    GemConfig gem{config_.gem_depth, config_.gem_temperature};
    TokenMatrix tokens = apply_gem(raw_tokens(image), gem);

    FeatureMap map(gh, gw, space_.dim());
    for (int gr = 0; gr < gh; ++gr) {
        for (int gc = 0; gc < gw; ++gc) {
            const Eigen::Index row = static_cast<Eigen::Index>(gr) * gw + gc;
            float* dst = map.at(gr, gc);
            for (int d = 0; d < space_.dim(); ++d) dst[d] = tokens(row, d);
        }
    }
    return map;
}

ProviderIdentity MockPatchFeatureProvider::identity() const {
    std::ostringstream cfg;
    cfg << "mock-features dim=" << space_.dim() << " seed=" << config_.seed
        << " patch=" << config_.patch_size << " noise=" << config_.noise_sigma
        << " depth=" << config_.gem_depth << " temp=" << config_.gem_temperature
        << " palette=" << palette_.size();
    return {"mock-features", hex_digest(fnv1a64(cfg.str()))};
}

std::vector<SegmentProposal> ColorRegionProposer::propose(const Image& image) const {
    validate_image(image);
    const int h = image.height;
    const int w = image.width;

    std::vector<int> label(static_cast<std::size_t>(h) * w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            label[static_cast<std::size_t>(r) * w + c] = nearest_palette_color(palette_, image.at(r, c));
        }
    }

    // 4-connected components over the quantized label image.
    std::vector<int> comp(static_cast<std::size_t>(h) * w, -1);
    std::vector<SegmentProposal> proposals;
    const double total = static_cast<double>(h) * w;
    int next = 0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * w + c;
            if (comp[idx] >= 0) continue;
            const int id = next++;
            SegmentMask mask(h, w);
            std::size_t area = 0;
            std::deque<std::pair<int, int>> queue{{r, c}};
            comp[idx] = id;
            while (!queue.empty()) {
                auto [cr, cc] = queue.front();
                queue.pop_front();
                mask.at(cr, cc) = 1;
                ++area;
                constexpr int dr[] = {-1, 1, 0, 0};
                constexpr int dc[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int nr = cr + dr[k];
                    const int nc = cc + dc[k];
                    if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                    const std::size_t nidx = static_cast<std::size_t>(nr) * w + nc;
                    if (comp[nidx] >= 0 || label[nidx] != label[idx]) continue;
                    comp[nidx] = id;
                    queue.emplace_back(nr, nc);
                }
            }
            if (area >= min_area_) {
                proposals.push_back({std::move(mask), static_cast<double>(area) / total, area});
            }
        }
    }

    std::stable_sort(proposals.begin(), proposals.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.area > b.area;
    });
    return proposals;
}

ProviderIdentity ColorRegionProposer::identity() const {
    std::ostringstream cfg;
    cfg << "color-region min_area=" << min_area_ << " palette=";
    for (const auto& col : palette_) cfg << col[0] << ',' << col[1] << ',' << col[2] << ';';
    return {"color-region", hex_digest(fnv1a64(cfg.str()))};
}

} // namespace semiseg
