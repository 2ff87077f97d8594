#include "semiseg/train/pipeline.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "semiseg/annotator/annotator.hpp"
#include "semiseg/core/error.hpp"
#include "semiseg/providers/mock.hpp"
#include "semiseg/providers/precomputed.hpp"

namespace semiseg {

ProviderBundle make_providers(const ProviderConfig& config, const DatasetDescriptor& descriptor,
                              int min_segment_area) {
    ProviderBundle bundle;
    if (config.kind == ProviderKind::mock) {
        if (descriptor.palette.empty()) {
            throw ConfigError("mock providers need a dataset palette (dataset.json 'palette')");
        }
        MockFeatureConfig feature_config;
        feature_config.patch_size = config.patch_size;
        feature_config.noise_sigma = config.noise_sigma;
        feature_config.gem_depth = config.gem_depth;
        feature_config.gem_temperature = config.gem_temperature;
        feature_config.seed = config.seed;
        const MockJointSpace space(descriptor.vocab, config.embedding_dim, config.seed);
        bundle.proposer = std::make_unique<ColorRegionProposer>(
            descriptor.palette, static_cast<std::size_t>(min_segment_area));
        bundle.features = std::make_unique<MockPatchFeatureProvider>(space, descriptor.palette,
                                                                     feature_config);
        bundle.text = std::make_unique<MockTextEmbedder>(space);
        return bundle;
    }
    if (config.dir.empty()) {
        throw ConfigError("provider.kind=precomputed requires provider.dir");
    }
    const std::filesystem::path root(config.dir);
    bundle.proposer = std::make_unique<PrecomputedSegmentProposer>(root);
    bundle.features = std::make_unique<PrecomputedFeatureProvider>(root, config.embedding_dim);
    bundle.text = std::make_unique<PrecomputedTextEmbedder>(root / "text_embeddings.npy");
    return bundle;
}

std::filesystem::path pseudo_store_dir(const TrainConfig& config) {
    if (!config.annotate.store_dir.empty()) return config.annotate.store_dir;
    return std::filesystem::path(config.data_root) / "pseudo_labels";
}

AnnotateOutcome run_annotation(const TrainConfig& config, int workers, bool overwrite) {
    const DatasetDescriptor descriptor = load_descriptor(config.data_root);
    const SplitSpec split = load_split(descriptor, config.split, config.split_seed,
                                       config.full_unlabeled_from_train);
    if (split.unlabeled_ids.empty()) {
        throw ConfigError("split '" + fraction_name(config.split) +
                          "' has no unlabeled images to annotate");
    }

    const ProviderBundle providers =
        make_providers(config.provider, descriptor, config.annotate.min_segment_area);
    const std::vector<std::vector<float>> class_embeddings = build_text_embeddings(
        descriptor.vocab, config.annotate.prompt_template, *providers.text);

    PseudoLabelStore store(pseudo_store_dir(config));

    std::vector<std::string> todo;
    for (const std::string& id : split.unlabeled_ids) {
        if (overwrite || !store.has(id)) todo.push_back(id);
    }

    std::mutex stats_mutex;
    AnnotateOutcome outcome;
    std::atomic<std::size_t> next{0};
    const bool parallel_ok =
        providers.proposer->thread_safe() && providers.features->thread_safe();
    const int thread_count =
        std::max(1, parallel_ok ? std::min<int>(workers, static_cast<int>(todo.size())) : 1);

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= todo.size()) return;
            const std::string& id = todo[k];
            auto [image, unused] = load_sample(descriptor, id, /*want_label=*/false);
            AnnotationResult result =
                annotate_image(image, *providers.proposer, *providers.features,
                               class_embeddings, config.annotate.sim_threshold,
                               descriptor.vocab, id);
            store.save(id, result.map);
            std::lock_guard<std::mutex> lock(stats_mutex);
            ++outcome.annotated;
            if (result.no_segments) ++outcome.no_segment_images;
            outcome.mean_labeled_fraction += result.labeled_fraction;
        }
    };

    if (thread_count == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(thread_count);
        for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }
    if (outcome.annotated > 0) outcome.mean_labeled_fraction /= outcome.annotated;

    PseudoManifest manifest;
    manifest.num_classes = descriptor.vocab.num_classes();
    manifest.ignore_id = descriptor.vocab.ignore_id();
    manifest.background_policy =
        descriptor.vocab.background_policy() == BackgroundPolicy::explicit_background
            ? "explicit_background"
            : "unassigned_is_ignore";
    manifest.sim_threshold = config.annotate.sim_threshold;
    manifest.prompt_template = config.annotate.prompt_template;
    manifest.proposer_digest = providers.proposer->identity().digest;
    manifest.feature_digest = providers.features->identity().digest;
    manifest.text_digest = providers.text->identity().digest;
    manifest.annotated_ids = split.unlabeled_ids;
    store.write_manifest(manifest);
    return outcome;
}

} // namespace semiseg
