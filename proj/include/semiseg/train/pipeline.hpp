#pragma once

#include <memory>

#include "semiseg/dataio/pseudo_store.hpp"
#include "semiseg/providers/providers.hpp"
#include "semiseg/train/config.hpp"

namespace semiseg {

// The three pluggable components behind annotation, built from config:
// either the deterministic mocks or file-backed precomputed assets.
struct ProviderBundle {
    std::unique_ptr<SegmentProposer> proposer;
    std::unique_ptr<PatchFeatureProvider> features;
    std::unique_ptr<TextEmbedder> text;
};

ProviderBundle make_providers(const ProviderConfig& config, const DatasetDescriptor& descriptor,
                              int min_segment_area);

std::filesystem::path pseudo_store_dir(const TrainConfig& config);

struct AnnotateOutcome {
    int annotated = 0;
    int no_segment_images = 0;
    double mean_labeled_fraction = 0.0;
};

// Zero-shot annotation of every unlabeled image in the split; masks land
// in the pseudo-label store with a manifest recording thresholds and
// provider digests. Already-annotated ids are skipped unless `overwrite`.
AnnotateOutcome run_annotation(const TrainConfig& config, int workers, bool overwrite = false);

} // namespace semiseg
