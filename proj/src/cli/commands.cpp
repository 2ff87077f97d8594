#include "semiseg/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "semiseg/core/error.hpp"
#include "semiseg/dataio/dataset.hpp"
#include "semiseg/dataio/image_io.hpp"
#include "semiseg/eval/eval.hpp"
#include "semiseg/train/checkpoint.hpp"
#include "semiseg/train/nn.hpp"
#include "semiseg/train/pipeline.hpp"
#include "semiseg/train/trainer.hpp"

namespace semiseg {

namespace fs = std::filesystem;

TrainConfig resolve_config(const CommandSpec& spec) {
    return load_train_config(spec.config_path, spec.overrides);
}

void cmd_make_splits(const TrainConfig& config) {
    if (config.data_root.empty()) throw ConfigError("data.root is required");
    const DatasetDescriptor descriptor = load_descriptor(config.data_root);
    const SplitSpec split = load_split(descriptor, config.split, config.split_seed,
                                       config.full_unlabeled_from_train);
    std::printf("dataset:   %s (%d classes, %zu train / %zu val images)\n",
                descriptor.name.c_str(), descriptor.vocab.num_classes(),
                descriptor.train_ids.size(), descriptor.val_ids.size());
    std::printf("fraction:  %s, seed %llu\n", fraction_name(config.split).c_str(),
                static_cast<unsigned long long>(config.split_seed));
    std::printf("labeled:   %zu\n", split.labeled_ids.size());
    std::printf("unlabeled: %zu\n", split.unlabeled_ids.size());
    std::printf("split files under %s\n",
                (descriptor.root / "splits").string().c_str());
}

void cmd_annotate(const TrainConfig& config, int workers, bool overwrite) {
    const AnnotateOutcome outcome = run_annotation(config, workers, overwrite);
    std::printf("annotated %d images into %s\n", outcome.annotated,
                pseudo_store_dir(config).string().c_str());
    std::printf("mean labeled fraction: %.3f\n", outcome.mean_labeled_fraction);
    if (outcome.no_segment_images > 0) {
        std::printf("images with no usable segment: %d\n", outcome.no_segment_images);
    }
}

void cmd_train(const TrainConfig& config, bool resume, bool annotate_first, int workers) {
    if (annotate_first && config.mode == TrainMode::semi) {
        const AnnotateOutcome outcome = run_annotation(config, workers, /*overwrite=*/false);
        std::printf("annotated %d images (mean labeled fraction %.3f)\n", outcome.annotated,
                    outcome.mean_labeled_fraction);
    }
    const TrainOutcome outcome = run_training(config, resume);
    std::printf("trained %d iterations\n", outcome.iterations);
    if (outcome.iterations < config.max_iters) {
        std::printf("session stopped at train.stop_after; continue with --resume\n");
        std::printf("checkpoint: %s\n", outcome.last_checkpoint.string().c_str());
        std::printf("metrics: %s\n", outcome.metrics_path.string().c_str());
        return;
    }
    std::printf("best mIoU:  %.4f\n", outcome.best_miou);
    std::printf("final mIoU: %.4f\n", outcome.final_miou);
    std::printf("best checkpoint: %s\n", outcome.best_checkpoint.string().c_str());
    std::printf("metrics: %s\n", outcome.metrics_path.string().c_str());
}

void cmd_eval(const TrainConfig& config, const std::string& checkpoint,
              const std::string& mask_dump_dir) {
    if (config.data_root.empty()) throw ConfigError("data.root is required");
    const DatasetDescriptor descriptor = load_descriptor(config.data_root);

    fs::path ckpt_path = checkpoint;
    if (ckpt_path.empty()) {
        if (config.out_dir.empty()) {
            throw ConfigError("pass --checkpoint or set train.out_dir to locate best.ckpt");
        }
        ckpt_path = fs::path(config.out_dir) / "best.ckpt";
    }

    auto model = make_reference_model(descriptor.vocab.num_classes(), config.seed,
                                      config.model_width);
    load_checkpoint(ckpt_path, *model, nullptr);

    const EvalResult result = evaluate_on_ids(*model, descriptor, descriptor.val_ids);

    std::printf("%-16s %s\n", "class", "IoU");
    for (int c = 0; c < descriptor.vocab.num_classes(); ++c) {
        if (result.iou_defined[static_cast<std::size_t>(c)]) {
            std::printf("%-16s %.4f\n", descriptor.vocab.name(c).c_str(),
                        result.per_class_iou[static_cast<std::size_t>(c)]);
        } else {
            std::printf("%-16s n/a\n", descriptor.vocab.name(c).c_str());
        }
    }
    std::printf("mIoU: %.4f   pixel accuracy: %.4f   (%llu pixels, %zu images)\n", result.miou,
                result.pixel_accuracy, static_cast<unsigned long long>(result.evaluated_pixels),
                descriptor.val_ids.size());

    if (!mask_dump_dir.empty()) {
        const fs::path dump_dir = mask_dump_dir;
        fs::create_directories(dump_dir);
        for (const std::string& id : descriptor.val_ids) {
            auto [image, label] = load_sample(descriptor, id, /*want_label=*/false);
            (void)label;
            const Tensor4 input = image_batch_to_tensor({image});
            const Tensor4 logits = model->full(input, /*train=*/false);
            const LabelMap pred = argmax_map(softmax_confidence(logits, 0));
            write_label_png(dump_dir / (id + ".png"), pred);
        }
        std::printf("predicted masks written to %s\n", dump_dir.string().c_str());
    }
}

void cmd_report(const std::string& run_dir) {
    const fs::path dir = run_dir;
    const fs::path summary_path = dir / "summary.json";
    std::ifstream summary_in(summary_path);
    if (!summary_in) throw DataError("no summary.json under " + dir.string());

    nlohmann::json summary;
    try {
        summary_in >> summary;
    } catch (const nlohmann::json::exception& ex) {
        throw DataError("malformed " + summary_path.string() + ": " + ex.what());
    }

    std::printf("run:       %s\n", dir.string().c_str());
    std::printf("mode:      %s on split %s\n", summary.value("mode", "?").c_str(),
                summary.value("split", "?").c_str());
    std::printf("images:    %llu labeled / %llu unlabeled\n",
                summary.value("labeled_images", 0ULL), summary.value("unlabeled_images", 0ULL));
    std::printf("model:     %llu parameters\n", summary.value("parameters", 0ULL));
    std::printf("trained:   %d iterations\n", summary.value("iterations", 0));
    std::printf("best mIoU: %.4f   final mIoU: %.4f\n", summary.value("best_miou", 0.0),
                summary.value("final_miou", 0.0));

    // Tail of the training log: the last few scalar lines plus every eval.
    std::ifstream metrics_in(dir / "metrics.jsonl");
    if (!metrics_in) return;
    std::deque<std::string> tail;
    std::vector<std::string> evals;
    std::string line;
    while (std::getline(metrics_in, line)) {
        if (line.empty()) continue;
        if (line.find("\"event\":\"eval\"") != std::string::npos ||
            line.find("\"event\": \"eval\"") != std::string::npos) {
            evals.push_back(line);
        } else {
            tail.push_back(line);
            if (tail.size() > 3) tail.pop_front();
        }
    }
    if (!evals.empty()) {
        std::printf("evals:\n");
        for (const std::string& entry : evals) std::printf("  %s\n", entry.c_str());
    }
    if (!tail.empty()) {
        std::printf("last steps:\n");
        for (const std::string& entry : tail) std::printf("  %s\n", entry.c_str());
    }
}

} // namespace semiseg
