#pragma once

#include <filesystem>

#include "semiseg/providers/providers.hpp"

namespace semiseg {

// File-backed providers for outputs exported from real foundation-model
// runs. Layout under the checkpoint root:
//   features/<id>.npy   float32 (h', w', D)
//   segments/<id>.npy   uint8   (K, H, W), one mask per proposal,
//                       already ordered by descending score
//   text_embeddings.npy float32 (C, D), vocabulary order

class PrecomputedFeatureProvider : public PatchFeatureProvider {
public:
    PrecomputedFeatureProvider(std::filesystem::path root, int embedding_dim);

    FeatureMap features(const Image& image) const override;
    FeatureMap features_for(const std::string& sample_id, const Image& image) const override;
    std::pair<int, int> native_grid(int image_height, int image_width) const override;
    int embedding_dim() const override { return dim_; }
    ProviderIdentity identity() const override;

private:
    std::filesystem::path root_;
    int dim_;
};

class PrecomputedSegmentProposer : public SegmentProposer {
public:
    explicit PrecomputedSegmentProposer(std::filesystem::path root);

    std::vector<SegmentProposal> propose(const Image& image) const override;
    std::vector<SegmentProposal> propose_for(const std::string& sample_id,
                                             const Image& image) const override;
    ProviderIdentity identity() const override;

private:
    std::filesystem::path root_;
};

class PrecomputedTextEmbedder : public TextEmbedder {
public:
    explicit PrecomputedTextEmbedder(std::filesystem::path embeddings_file);

    std::vector<std::vector<float>> embed(const std::vector<std::string>& prompts) const override;
    int embedding_dim() const override { return dim_; }
    ProviderIdentity identity() const override;

private:
    std::filesystem::path file_;
    std::vector<std::vector<float>> vectors_;
    int dim_ = 0;
};

} // namespace semiseg
