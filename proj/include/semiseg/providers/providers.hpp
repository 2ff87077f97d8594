#pragma once

#include <string>
#include <vector>

#include "semiseg/core/types.hpp"

namespace semiseg {

struct ProviderIdentity {
    std::string name;
    std::string digest; // hex fingerprint of weights/config, recorded in manifests
};

struct SegmentProposal {
    SegmentMask mask;
    double score = 0.0;
    std::size_t area = 0;
};

// Produces object-based segment proposals for a whole image. Proposals
// are ordered by descending score, ties broken by descending area; every
// mask is non-empty and image-shaped.
class SegmentProposer {
public:
    virtual ~SegmentProposer() = default;

    virtual std::vector<SegmentProposal> propose(const Image& image) const = 0;

    // Id-aware variant for providers backed by per-sample files.
    virtual std::vector<SegmentProposal> propose_for(const std::string& /*sample_id*/,
                                                     const Image& image) const {
        return propose(image);
    }

    virtual ProviderIdentity identity() const = 0;
    virtual bool thread_safe() const { return true; }
};

// Extracts a patch-embedding grid in the joint image-text space.
class PatchFeatureProvider {
public:
    virtual ~PatchFeatureProvider() = default;

    virtual FeatureMap features(const Image& image) const = 0;

    virtual FeatureMap features_for(const std::string& /*sample_id*/, const Image& image) const {
        return features(image);
    }

    // Patch grid (h', w') before any resampling.
    virtual std::pair<int, int> native_grid(int image_height, int image_width) const = 0;
    virtual int embedding_dim() const = 0;
    virtual ProviderIdentity identity() const = 0;
    virtual bool thread_safe() const { return true; }
};

// Embeds prompted strings into the same joint space as the paired
// PatchFeatureProvider.
class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;

    // One vector per input string, in order.
    virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& prompts) const = 0;
    virtual int embedding_dim() const = 0;
    virtual ProviderIdentity identity() const = 0;
};

// Expands `template_str` for every class name (exactly one "{classlabel}"
// placeholder) and runs the embedder; output order follows the vocabulary.
std::vector<std::vector<float>> build_text_embeddings(const ClassVocabulary& vocab,
                                                      const std::string& template_str,
                                                      const TextEmbedder& embedder);

std::vector<std::string> expand_prompts(const ClassVocabulary& vocab,
                                        const std::string& template_str);

} // namespace semiseg
