#pragma once

#include <array>
#include <cstdint>

#include "semiseg/providers/attention.hpp"
#include "semiseg/providers/providers.hpp"

namespace semiseg {

// Class-id-indexed reference colors; the synthetic-region spec shared by
// the dataset generator and the mock providers.
using Palette = std::vector<std::array<float, 3>>;

// Deterministic joint image-text space: one unit-norm anchor per class,
// pairwise orthogonal (built by Gram-Schmidt over seeded gaussians), so a
// segment pooled from class-c patches lands on anchor c by construction.
class MockJointSpace {
public:
    MockJointSpace(const ClassVocabulary& vocab, int dim, std::uint64_t seed);

    int dim() const { return dim_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<float>& anchor(ClassId c) const { return anchors_.at(static_cast<std::size_t>(c)); }
    const std::vector<std::string>& class_names() const { return names_; }

private:
    int dim_;
    std::uint64_t seed_;
    std::vector<std::string> names_;
    std::vector<std::vector<float>> anchors_;
};

// Returns the class anchor for any prompt that contains a class name
// (longest match wins); unknown prompts get a seeded unit vector.
class MockTextEmbedder : public TextEmbedder {
public:
    explicit MockTextEmbedder(MockJointSpace space) : space_(std::move(space)) {}

    std::vector<std::vector<float>> embed(const std::vector<std::string>& prompts) const override;
    int embedding_dim() const override { return space_.dim(); }
    ProviderIdentity identity() const override;

private:
    MockJointSpace space_;
};

struct MockFeatureConfig {
    int patch_size = 4;
    double noise_sigma = 0.02;
    int gem_depth = 1;
    // Sharp enough that self-self attention mixes within a region but not
    // across regions of orthogonal anchors.
    double gem_temperature = 0.05;
    std::uint64_t seed = 0;
};

// Maps each patch to the anchor of the palette color nearest its mean
// color, perturbs it with seeded noise, then runs the self-self attention
// pipeline. Pooling a segment of class c therefore recovers anchor c.
class MockPatchFeatureProvider : public PatchFeatureProvider {
public:
    MockPatchFeatureProvider(MockJointSpace space, Palette palette, MockFeatureConfig config);

    FeatureMap features(const Image& image) const override;
    std::pair<int, int> native_grid(int image_height, int image_width) const override;
    int embedding_dim() const override { return space_.dim(); }
    ProviderIdentity identity() const override;

    // Encoder state before the attention pipeline; exposed so tests can
    // re-derive features() from self_self_attention directly.
    TokenMatrix raw_tokens(const Image& image) const;
    const MockFeatureConfig& config() const { return config_; }

private:
    MockJointSpace space_;
    Palette palette_;
    MockFeatureConfig config_;
};

// Quantizes pixels to the nearest palette color and proposes one segment
// per 4-connected component. Score is the component's area fraction, so
// proposals come out largest-first.
class ColorRegionProposer : public SegmentProposer {
public:
    ColorRegionProposer(Palette palette, std::size_t min_area = 1)
        : palette_(std::move(palette)), min_area_(min_area) {}

    std::vector<SegmentProposal> propose(const Image& image) const override;
    ProviderIdentity identity() const override;

private:
    Palette palette_;
    std::size_t min_area_;
};

// Nearest palette entry by squared RGB distance; ties to the lowest index.
int nearest_palette_color(const Palette& palette, const float* rgb);

} // namespace semiseg
