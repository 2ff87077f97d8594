#include "semiseg/providers/precomputed.hpp"

#include <fstream>

#include "semiseg/core/error.hpp"
#include "semiseg/util/fnv.hpp"
#include "semiseg/util/npy.hpp"

namespace semiseg {

namespace {

std::uint64_t digest_of_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[8192];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
        if (!in) break;
    }
    return h;
}

} // namespace

PrecomputedFeatureProvider::PrecomputedFeatureProvider(std::filesystem::path root,
                                                       int embedding_dim)
    : root_(std::move(root)), dim_(embedding_dim) {
    if (!std::filesystem::is_directory(root_ / "features")) {
        throw ProviderError("precomputed feature directory missing: " +
                            (root_ / "features").string());
    }
}

FeatureMap PrecomputedFeatureProvider::features(const Image&) const {
    throw ProviderError("precomputed features require a sample id; use features_for()");
}

FeatureMap PrecomputedFeatureProvider::features_for(const std::string& sample_id,
                                                    const Image&) const {
    const auto path = root_ / "features" / (sample_id + ".npy");
    npy::FloatArray arr;
    try {
        arr = npy::read_float(path);
    } catch (const Error& e) {
        throw ProviderError("loading precomputed features for '" + sample_id +
                            "': " + e.what());
    }
    if (arr.shape.size() != 3 || static_cast<int>(arr.shape[2]) != dim_) {
        throw ProviderError("precomputed features for '" + sample_id +
                            "' are not (h', w', " + std::to_string(dim_) + ")");
    }
    FeatureMap map(static_cast<int>(arr.shape[0]), static_cast<int>(arr.shape[1]), dim_);
    map.values = std::move(arr.data);
    validate_feature_map(map);
    return map;
}

std::pair<int, int> PrecomputedFeatureProvider::native_grid(int image_height,
                                                            int image_width) const {
    // Grid is whatever the exporter produced; callers learn it from the
    // returned FeatureMap. Declared as the image resolution upper bound.
    return {image_height, image_width};
}

ProviderIdentity PrecomputedFeatureProvider::identity() const {
    return {"precomputed-features", hex_digest(fnv1a64(root_.string(), 0x5eed))};
}

PrecomputedSegmentProposer::PrecomputedSegmentProposer(std::filesystem::path root)
    : root_(std::move(root)) {
    if (!std::filesystem::is_directory(root_ / "segments")) {
        throw ProviderError("precomputed segment directory missing: " +
                            (root_ / "segments").string());
    }
}

std::vector<SegmentProposal> PrecomputedSegmentProposer::propose(const Image&) const {
    throw ProviderError("precomputed segments require a sample id; use propose_for()");
}

std::vector<SegmentProposal> PrecomputedSegmentProposer::propose_for(const std::string& sample_id,
                                                                     const Image& image) const {
    const auto path = root_ / "segments" / (sample_id + ".npy");
    npy::ByteArray arr;
    try {
        arr = npy::read_bytes(path);
    } catch (const Error& e) {
        throw ProviderError("loading precomputed segments for '" + sample_id + "': " + e.what());
    }
    if (arr.shape.size() != 3) {
        throw ProviderError("precomputed segments for '" + sample_id + "' are not (K, H, W)");
    }
    const int k = static_cast<int>(arr.shape[0]);
    const int h = static_cast<int>(arr.shape[1]);
    const int w = static_cast<int>(arr.shape[2]);
    if (h != image.height || w != image.width) {
        throw ProviderError("precomputed segments for '" + sample_id +
                            "' do not match the image shape");
    }
    std::vector<SegmentProposal> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        SegmentMask mask(h, w);
        const std::uint8_t* src = arr.data.data() + static_cast<std::size_t>(i) * h * w;
        std::size_t area = 0;
        for (std::size_t p = 0; p < mask.bits.size(); ++p) {
            mask.bits[p] = src[p] ? 1 : 0;
            area += mask.bits[p];
        }
        if (area == 0) continue; // exporter artifacts; empty masks are dropped
        // File order encodes descending score.
        out.push_back({std::move(mask), static_cast<double>(k - i), area});
    }
    return out;
}

ProviderIdentity PrecomputedSegmentProposer::identity() const {
    return {"precomputed-segments", hex_digest(fnv1a64(root_.string(), 0x5e6))};
}

PrecomputedTextEmbedder::PrecomputedTextEmbedder(std::filesystem::path embeddings_file)
    : file_(std::move(embeddings_file)) {
    npy::FloatArray arr;
    try {
        arr = npy::read_float(file_);
    } catch (const Error& e) {
        throw ProviderError(std::string("loading text embeddings: ") + e.what());
    }
    if (arr.shape.size() != 2) throw ProviderError("text embeddings must be (C, D)");
    dim_ = static_cast<int>(arr.shape[1]);
    const std::size_t c = arr.shape[0];
    vectors_.resize(c);
    for (std::size_t i = 0; i < c; ++i) {
        vectors_[i].assign(arr.data.begin() + static_cast<std::ptrdiff_t>(i * arr.shape[1]),
                           arr.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * arr.shape[1]));
    }
}

std::vector<std::vector<float>> PrecomputedTextEmbedder::embed(
    const std::vector<std::string>& prompts) const {
    if (prompts.size() != vectors_.size()) {
        throw ProviderError("text embedding file has " + std::to_string(vectors_.size()) +
                            " rows but " + std::to_string(prompts.size()) + " prompts were given");
    }
    return vectors_;
}

ProviderIdentity PrecomputedTextEmbedder::identity() const {
    return {"precomputed-text", hex_digest(digest_of_file(file_))};
}

} // namespace semiseg
