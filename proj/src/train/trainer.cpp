#include "semiseg/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "semiseg/core/error.hpp"
#include "semiseg/core/rng.hpp"
#include "semiseg/dataio/pseudo_store.hpp"
#include "semiseg/enhance/enhance.hpp"
#include "semiseg/loss/loss.hpp"
#include "semiseg/train/checkpoint.hpp"
#include "semiseg/train/pipeline.hpp"

namespace semiseg {

namespace {

// Stream tags for the per-iteration RNG substreams; each (tag, iteration,
// slot) triple is an independent stream.
constexpr std::uint64_t kStreamLabeledPlan = 0xB10;
constexpr std::uint64_t kStreamUnlabeledPlan = 0xB20;
constexpr std::uint64_t kStreamLabeledView = 0xB30;
constexpr std::uint64_t kStreamUnlabeledView = 0xB40;
constexpr std::uint64_t kStreamFeatureDrop = 0xB50;
constexpr std::uint64_t kStreamStrong1 = 0xB60;
constexpr std::uint64_t kStreamPartner1 = 0xB61;
constexpr std::uint64_t kStreamStrong2 = 0xB70;
constexpr std::uint64_t kStreamPartner2 = 0xB71;

Rng stream_rng(std::uint64_t seed, std::uint64_t stream, int iteration, std::uint64_t slot) {
    return Rng(seed).substream(stream).substream(static_cast<std::uint64_t>(iteration))
        .substream(slot);
}

// Decoded samples are tiny at desk scale; keep them in memory.
class SampleCache {
public:
    explicit SampleCache(const DatasetDescriptor& descriptor) : descriptor_(descriptor) {}

    const std::pair<Image, LabelMap>& labeled(const std::string& id) {
        auto it = labeled_.find(id);
        if (it == labeled_.end()) {
            auto [image, label] = load_sample(descriptor_, id, /*want_label=*/true);
            it = labeled_.emplace(id, std::make_pair(std::move(image), std::move(*label))).first;
        }
        return it->second;
    }

    const Image& unlabeled(const std::string& id) {
        auto it = images_.find(id);
        if (it == images_.end()) {
            auto [image, unused] = load_sample(descriptor_, id, /*want_label=*/false);
            it = images_.emplace(id, std::move(image)).first;
        }
        return it->second;
    }

    const LabelMap& pseudo(const std::string& id, const PseudoLabelStore& store) {
        auto it = pseudo_.find(id);
        if (it == pseudo_.end()) {
            it = pseudo_.emplace(id, store.load(id, descriptor_.vocab)).first;
        }
        return it->second;
    }

private:
    const DatasetDescriptor& descriptor_;
    std::map<std::string, std::pair<Image, LabelMap>> labeled_;
    std::map<std::string, Image> images_;
    std::map<std::string, LabelMap> pseudo_;
};

void to_pixel_major(const Tensor4& t, int sample, std::vector<float>& out) {
    const std::size_t plane = t.plane();
    out.resize(plane * t.c);
    const float* base = t.sample(sample);
    for (int ch = 0; ch < t.c; ++ch) {
        const float* src = base + static_cast<std::size_t>(ch) * plane;
        for (std::size_t k = 0; k < plane; ++k) out[k * t.c + ch] = src[k];
    }
}

void add_pixel_major_grad(Tensor4& t, int sample, const std::vector<float>& grad, float scale) {
    const std::size_t plane = t.plane();
    float* base = t.sample(sample);
    for (int ch = 0; ch < t.c; ++ch) {
        float* dst = base + static_cast<std::size_t>(ch) * plane;
        for (std::size_t k = 0; k < plane; ++k) dst[k] += grad[k * t.c + ch] * scale;
    }
}

struct BatchLoss {
    double value = 0.0;
    std::size_t valid_pixels = 0;
};

// Cross-entropy (optionally smoothed) over a whole batch: one mean across
// every valid pixel of every sample, the standard batch reduction. When
// `grad` is given, d(value)/d(logits) * grad_scale is accumulated into it.
BatchLoss batch_ce(const Tensor4& logits, const std::vector<LabelMap>& targets, double eps,
                   ClassId ignore_id, Tensor4* grad, double grad_scale) {
    if (static_cast<std::size_t>(logits.n) != targets.size()) {
        throw DataError("batch_ce: target count mismatch");
    }
    std::size_t total_valid = 0;
    for (const LabelMap& t : targets) {
        for (const ClassId id : t.ids) {
            if (id != ignore_id) ++total_valid;
        }
    }
    if (total_valid == 0) return {0.0, 0};

    BatchLoss out;
    out.valid_pixels = total_valid;
    std::vector<float> pm_logits, pm_grad;
    for (int i = 0; i < logits.n; ++i) {
        to_pixel_major(logits, i, pm_logits);
        pm_grad.assign(pm_logits.size(), 0.0f);
        const LossValue value =
            smoothed_ce_logits(pm_logits.data(), logits.h, logits.w, logits.c, targets[i], eps,
                               ignore_id, grad ? pm_grad.data() : nullptr);
        out.value += value.value * static_cast<double>(value.valid_pixels);
        if (grad && value.valid_pixels > 0) {
            // Per-sample gradients carry 1/N_i; rescale to the batch mean.
            const float scale = static_cast<float>(
                grad_scale * static_cast<double>(value.valid_pixels) / total_valid);
            add_pixel_major_grad(*grad, i, pm_grad, scale);
        }
    }
    out.value /= static_cast<double>(total_valid);
    return out;
}

struct StepStats {
    double loss_s = 0.0;
    double loss_u = 0.0;
    double loss_total = 0.0;
    double frac_from_pseudo = 0.0;
    double frac_from_model = 0.0;
    double frac_ignore = 0.0;
};

struct TrainContext {
    const TrainConfig& config;
    const DatasetDescriptor& descriptor;
    const SplitSpec& split;
    SampleCache& cache;
    const PseudoLabelStore* store;
    ReferenceModel& model;
    double epsilon;
};

// Weak views of a labeled batch plus the supervised loss/backward.
double labeled_half_step(TrainContext& ctx, int iteration, double grad_scale) {
    const TrainConfig& config = ctx.config;
    const ClassId ignore = ctx.descriptor.vocab.ignore_id();
    const auto indices =
        plan_batch_indices(ctx.split.labeled_ids.size(), config.labeled_batch, config.seed,
                           kStreamLabeledPlan, iteration);
    std::vector<Image> images;
    std::vector<LabelMap> labels;
    images.reserve(indices.size());
    labels.reserve(indices.size());
    for (std::size_t slot = 0; slot < indices.size(); ++slot) {
        const auto& [image, gt] = ctx.cache.labeled(ctx.split.labeled_ids[indices[slot]]);
        Rng rng = stream_rng(config.seed, kStreamLabeledView, iteration, slot);
        WeakView view = weak_view(image, {gt}, config.perturb, rng);
        images.push_back(std::move(view.image));
        labels.push_back(std::move(view.maps[0]));
    }

    const Tensor4 input = image_batch_to_tensor(images);
    ReferenceModel::EncodeCtx ectx;
    ReferenceModel::DecodeCtx dctx;
    const Tensor4 activations = ctx.model.encode_train(input, ectx);
    const Tensor4 logits =
        ctx.model.decode_train(activations, input.h, input.w, dctx);

    Tensor4 grad(logits.n, logits.c, logits.h, logits.w);
    const BatchLoss loss = batch_ce(logits, labels, 0.0, ignore, &grad, grad_scale);
    if (loss.valid_pixels > 0) {
        const Tensor4 grad_act = ctx.model.decode_backward(dctx, grad);
        ctx.model.encode_backward(ectx, grad_act);
    }
    return loss.value;
}

// The unlabeled half: weak view -> enhanced labels, then the feature
// perturbation and both strong branches with gradients.
StepStats unlabeled_half_step(TrainContext& ctx, int iteration, double grad_scale) {
    const TrainConfig& config = ctx.config;
    const ClassId ignore = ctx.descriptor.vocab.ignore_id();
    StepStats stats;

    const auto indices =
        plan_batch_indices(ctx.split.unlabeled_ids.size(), config.unlabeled_batch, config.seed,
                           kStreamUnlabeledPlan, iteration);
    const int batch = static_cast<int>(indices.size());

    std::vector<Image> weak_images(batch);
    std::vector<LabelMap> pseudo_maps(batch);
    for (int slot = 0; slot < batch; ++slot) {
        const std::string& id = ctx.split.unlabeled_ids[indices[slot]];
        const Image& image = ctx.cache.unlabeled(id);
        const LabelMap& pseudo = ctx.cache.pseudo(id, *ctx.store);
        Rng rng = stream_rng(config.seed, kStreamUnlabeledView, iteration, slot);
        WeakView view = weak_view(image, {pseudo}, config.perturb, rng);
        weak_images[slot] = std::move(view.image);
        pseudo_maps[slot] = std::move(view.maps[0]);
    }

    const Tensor4 weak_input = image_batch_to_tensor(weak_images);
    ReferenceModel::EncodeCtx weak_ectx;
    const Tensor4 activations = ctx.model.encode_train(weak_input, weak_ectx);

    // p^w: plain decode, no caches -- the weak prediction is supervision,
    // not a gradient path.
    const Tensor4 weak_logits =
        ctx.model.decode(activations, weak_input.h, weak_input.w, /*train=*/true);

    std::vector<LabelMap> enhanced(batch);
    for (int slot = 0; slot < batch; ++slot) {
        const ConfidenceMap p_w = softmax_confidence(weak_logits, slot);
        enhanced[slot] = enhance_labels(p_w, pseudo_maps[slot], config.tau);
        const EnhancementStats es =
            enhancement_stats(p_w, pseudo_maps[slot], config.tau, ignore);
        stats.frac_from_pseudo += es.frac_from_pseudo;
        stats.frac_from_model += es.frac_from_model;
        stats.frac_ignore += es.frac_ignore;
    }
    stats.frac_from_pseudo /= batch;
    stats.frac_from_model /= batch;
    stats.frac_ignore /= batch;

    // A^fp: channel dropout on the shared weak activations.
    Tensor4 dropped = activations;
    std::vector<std::vector<std::uint8_t>> kept(batch);
    const std::size_t plane = dropped.plane();
    for (int slot = 0; slot < batch; ++slot) {
        Rng rng = stream_rng(config.seed, kStreamFeatureDrop, iteration, slot);
        feature_dropout(dropped.sample(slot), dropped.c, plane,
                        config.perturb.feature_dropout_p, rng, &kept[slot]);
    }
    ReferenceModel::DecodeCtx fp_dctx;
    const Tensor4 fp_logits =
        ctx.model.decode_train(dropped, weak_input.h, weak_input.w, fp_dctx);

    // Strong branches share the weak geometry; each draws its own
    // photometric parameters and CutMix boxes.
    auto strong_branch = [&](std::uint64_t param_stream, std::uint64_t partner_stream,
                             std::vector<LabelMap>& mixed_labels, Tensor4& logits,
                             ReferenceModel::EncodeCtx& ectx, ReferenceModel::DecodeCtx& dctx) {
        const auto partners =
            plan_cutmix_partners(batch, config.seed, partner_stream, iteration);
        std::vector<Image> strong_images(batch);
        mixed_labels.resize(batch);
        for (int slot = 0; slot < batch; ++slot) {
            Rng rng = stream_rng(config.seed, param_stream, iteration, slot);
            const StrongParams params = sample_strong_params(
                config.perturb, weak_images[slot].height, weak_images[slot].width, rng);
            strong_images[slot] =
                strong_view(weak_images[slot], params, weak_images[partners[slot]]);
            mixed_labels[slot] =
                cutmix_labels(enhanced[slot], enhanced[partners[slot]], params.cutmix_box);
        }
        const Tensor4 input = image_batch_to_tensor(strong_images);
        const Tensor4 act = ctx.model.encode_train(input, ectx);
        logits = ctx.model.decode_train(act, input.h, input.w, dctx);
    };

    std::vector<LabelMap> labels_s1, labels_s2;
    Tensor4 logits_s1, logits_s2;
    ReferenceModel::EncodeCtx ectx_s1, ectx_s2;
    ReferenceModel::DecodeCtx dctx_s1, dctx_s2;
    strong_branch(kStreamStrong1, kStreamPartner1, labels_s1, logits_s1, ectx_s1, dctx_s1);
    strong_branch(kStreamStrong2, kStreamPartner2, labels_s2, logits_s2, ectx_s2, dctx_s2);

    // Losses: the fp branch scores against the unmixed enhanced labels,
    // each strong branch against its own mixed copy.
    Tensor4 grad_fp(fp_logits.n, fp_logits.c, fp_logits.h, fp_logits.w);
    Tensor4 grad_s1(logits_s1.n, logits_s1.c, logits_s1.h, logits_s1.w);
    Tensor4 grad_s2(logits_s2.n, logits_s2.c, logits_s2.h, logits_s2.w);
    const BatchLoss fp =
        batch_ce(fp_logits, enhanced, ctx.epsilon, ignore, &grad_fp, grad_scale);
    const BatchLoss s1 =
        batch_ce(logits_s1, labels_s1, ctx.epsilon, ignore, &grad_s1, grad_scale);
    const BatchLoss s2 =
        batch_ce(logits_s2, labels_s2, ctx.epsilon, ignore, &grad_s2, grad_scale);
    stats.loss_u = fp.value + s1.value + s2.value;

    if (fp.valid_pixels > 0) {
        Tensor4 grad_act = ctx.model.decode_backward(fp_dctx, grad_fp);
        // Backward of channel dropout: dropped channels pass nothing,
        // survivors keep the 1/(1-p) scale.
        const float scale =
            static_cast<float>(1.0 / (1.0 - config.perturb.feature_dropout_p));
        for (int slot = 0; slot < batch; ++slot) {
            float* g = grad_act.sample(slot);
            for (int ch = 0; ch < grad_act.c; ++ch) {
                float* row = g + static_cast<std::size_t>(ch) * plane;
                if (kept[slot][ch]) {
                    for (std::size_t k = 0; k < plane; ++k) row[k] *= scale;
                } else {
                    std::fill_n(row, plane, 0.0f);
                }
            }
        }
        ctx.model.encode_backward(weak_ectx, grad_act);
    }
    if (s1.valid_pixels > 0) {
        const Tensor4 grad_act = ctx.model.decode_backward(dctx_s1, grad_s1);
        ctx.model.encode_backward(ectx_s1, grad_act);
    }
    if (s2.valid_pixels > 0) {
        const Tensor4 grad_act = ctx.model.decode_backward(dctx_s2, grad_s2);
        ctx.model.encode_backward(ectx_s2, grad_act);
    }
    return stats;
}

void append_metrics(std::ofstream& out, const nlohmann::json& line) {
    out << line.dump() << '\n';
    out.flush();
}

} // namespace

double poly_lr(double lr0, int iter, int max_iters, double power) {
    if (max_iters < 1) throw ConfigError("poly_lr: max_iters must be >= 1");
    if (iter < 0 || iter > max_iters) throw ConfigError("poly_lr: iteration out of range");
    return lr0 * std::pow(1.0 - static_cast<double>(iter) / max_iters, power);
}

std::vector<std::size_t> plan_batch_indices(std::size_t pool_size, int batch,
                                            std::uint64_t seed, std::uint64_t stream,
                                            int iteration) {
    if (pool_size == 0) throw DataError("plan_batch_indices: empty pool");
    if (batch < 1) throw ConfigError("plan_batch_indices: batch must be >= 1");
    std::vector<std::size_t> out(static_cast<std::size_t>(batch));
    const std::size_t b = static_cast<std::size_t>(batch);
    if (pool_size < b) {
        Rng rng = Rng(seed).substream(stream).substream(static_cast<std::uint64_t>(iteration));
        for (std::size_t i = 0; i < b; ++i) {
            out[i] = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(pool_size)));
        }
        return out;
    }
    const std::size_t per_epoch = pool_size / b;
    const std::size_t epoch = static_cast<std::size_t>(iteration) / per_epoch;
    const std::size_t pos = static_cast<std::size_t>(iteration) % per_epoch;
    std::vector<std::size_t> perm(pool_size);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = Rng(seed).substream(stream).substream(epoch);
    rng.shuffle(perm);
    std::copy_n(perm.begin() + static_cast<std::ptrdiff_t>(pos * b), b, out.begin());
    return out;
}

std::vector<int> plan_cutmix_partners(int batch, std::uint64_t seed, std::uint64_t stream,
                                      int iteration) {
    if (batch < 1) throw ConfigError("plan_cutmix_partners: batch must be >= 1");
    std::vector<int> partners(static_cast<std::size_t>(batch));
    if (batch == 1) {
        partners[0] = 0;
        return partners;
    }
    Rng rng = Rng(seed).substream(stream).substream(static_cast<std::uint64_t>(iteration));
    const int shift = 1 + rng.uniform_int(batch - 1);
    for (int i = 0; i < batch; ++i) partners[i] = (i + shift) % batch;
    return partners;
}

EvalResult evaluate_on_ids(ReferenceModel& model, const DatasetDescriptor& descriptor,
                           const std::vector<std::string>& ids) {
    return evaluate(
        [&](const Image& image) {
            const Tensor4 input = image_batch_to_tensor({image});
            const Tensor4 logits = model.full(input, /*train=*/false);
            return argmax_map(softmax_confidence(logits, 0));
        },
        [&](std::size_t i) {
            auto [image, label] = load_sample(descriptor, ids[i], /*want_label=*/true);
            return std::make_pair(std::move(image), std::move(*label));
        },
        ids.size(), descriptor.vocab);
}

TrainOutcome run_training(const TrainConfig& config_in, bool resume) {
    TrainConfig config = config_in;
    config.perturb.crop_size = config.crop_size; // train.crop_size is the single source
    validate(config);
    if (config.out_dir.empty()) throw ConfigError("train.out_dir is required");
    if (config.data_root.empty()) throw ConfigError("data.root is required");

    const DatasetDescriptor descriptor = load_descriptor(config.data_root);
    const SplitSpec split = load_split(descriptor, config.split, config.split_seed,
                                       config.full_unlabeled_from_train);
    const int num_classes = descriptor.vocab.num_classes();

    SampleCache cache(descriptor);
    std::unique_ptr<PseudoLabelStore> store;
    if (config.mode == TrainMode::semi) {
        if (split.unlabeled_ids.empty()) {
            throw ConfigError("semi mode needs unlabeled images; this split has none "
                              "(use mode=supervised for the full-label baseline)");
        }
        store = std::make_unique<PseudoLabelStore>(pseudo_store_dir(config));
        if (!store->has_manifest()) {
            throw DataError("pseudo-label store " + store->dir().string() +
                            " has no manifest; run 'semiseg annotate' first");
        }
        for (const std::string& id : split.unlabeled_ids) {
            if (!store->has(id)) {
                throw DataError("unlabeled id '" + id +
                                "' has no pseudo-label; run 'semiseg annotate' first");
            }
        }
    }

    ReferenceModel model(num_classes, config.seed, config.model_width);
    Sgd optimizer(model.parameters(),
                  {config.lr0, config.momentum, config.weight_decay});

    const std::filesystem::path out_dir(config.out_dir);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path last_path = out_dir / "last.ckpt";
    const std::filesystem::path best_path = out_dir / "best.ckpt";
    const std::filesystem::path metrics_path = out_dir / "metrics.jsonl";

    int start_iter = 0;
    double best_miou = 0.0;
    bool resumed = false;
    if (resume && std::filesystem::exists(last_path)) {
        const CheckpointMeta meta = load_checkpoint(last_path, model, &optimizer);
        start_iter = static_cast<int>(meta.iteration);
        best_miou = meta.best_miou;
        resumed = true;
        if (start_iter > config.max_iters) {
            throw ConfigError("checkpoint is past train.max_iters; nothing to resume");
        }
    }

    std::ofstream metrics(metrics_path,
                          resumed ? std::ios::app : std::ios::trunc);
    if (!metrics) throw DataError("cannot write metrics: " + metrics_path.string());

    const double epsilon = resolve_epsilon(config.smoothing, num_classes);
    TrainContext ctx{config, descriptor, split, cache, store.get(), model, epsilon};

    const auto run_eval = [&](int iteration) {
        const EvalResult result = evaluate_on_ids(model, descriptor, descriptor.val_ids);
        nlohmann::json line{{"iter", iteration},
                            {"event", "eval"},
                            {"miou", result.miou},
                            {"pixel_accuracy", result.pixel_accuracy}};
        append_metrics(metrics, line);
        if (result.miou > best_miou) {
            best_miou = result.miou;
            save_checkpoint(best_path, model, nullptr,
                            {static_cast<std::uint64_t>(iteration), best_miou});
        }
        return result;
    };

    for (int iter = start_iter; iter < config.max_iters; ++iter) {
        optimizer.set_lr(poly_lr(config.lr0, iter, config.max_iters, config.poly_power));
        optimizer.zero_grad();

        StepStats stats;
        if (config.mode == TrainMode::semi) {
            // Eq. 10: total = (L_s + L_u) / 2, so every branch gradient
            // carries the 1/2.
            stats.loss_s = labeled_half_step(ctx, iter, 0.5);
            const StepStats u = unlabeled_half_step(ctx, iter, 0.5);
            stats.loss_u = u.loss_u;
            stats.frac_from_pseudo = u.frac_from_pseudo;
            stats.frac_from_model = u.frac_from_model;
            stats.frac_ignore = u.frac_ignore;
            stats.loss_total = total_loss(stats.loss_s, stats.loss_u);
        } else {
            stats.loss_s = labeled_half_step(ctx, iter, 1.0);
            stats.loss_total = stats.loss_s;
        }
        optimizer.step();

        const int done = iter + 1;
        if (done % config.log_every == 0 || done == config.max_iters) {
            nlohmann::json line{{"iter", done},
                                {"lr", optimizer.lr()},
                                {"loss_s", stats.loss_s},
                                {"loss_total", stats.loss_total}};
            if (config.mode == TrainMode::semi) {
                line["loss_u"] = stats.loss_u;
                line["frac_from_pseudo"] = stats.frac_from_pseudo;
                line["frac_from_model"] = stats.frac_from_model;
                line["frac_ignore"] = stats.frac_ignore;
            }
            append_metrics(metrics, line);
        }
        if (config.eval_every > 0 && done % config.eval_every == 0 &&
            done != config.max_iters) {
            run_eval(done);
            save_checkpoint(last_path, model, &optimizer,
                            {static_cast<std::uint64_t>(done), best_miou});
        }
        if (config.stop_after > 0 && done >= config.stop_after && done < config.max_iters) {
            // Session time-box: park a resumable snapshot and stop without
            // the final eval, leaving the schedule to a later --resume.
            save_checkpoint(last_path, model, &optimizer,
                            {static_cast<std::uint64_t>(done), best_miou});
            TrainOutcome partial;
            partial.iterations = done;
            partial.best_miou = best_miou;
            partial.best_checkpoint = best_path;
            partial.last_checkpoint = last_path;
            partial.metrics_path = metrics_path;
            return partial;
        }
    }

    const EvalResult final_eval = run_eval(config.max_iters);
    save_checkpoint(last_path, model, &optimizer,
                    {static_cast<std::uint64_t>(config.max_iters), best_miou});
    if (!std::filesystem::exists(best_path)) {
        save_checkpoint(best_path, model, nullptr,
                        {static_cast<std::uint64_t>(config.max_iters), best_miou});
    }

    TrainOutcome outcome;
    outcome.iterations = config.max_iters;
    outcome.best_miou = best_miou;
    outcome.final_miou = final_eval.miou;
    outcome.best_checkpoint = best_path;
    outcome.last_checkpoint = last_path;
    outcome.metrics_path = metrics_path;

    nlohmann::json summary{{"mode", config.mode == TrainMode::semi ? "semi" : "supervised"},
                           {"split", fraction_name(config.split)},
                           {"iterations", outcome.iterations},
                           {"best_miou", outcome.best_miou},
                           {"final_miou", outcome.final_miou},
                           {"labeled_images", split.labeled_ids.size()},
                           {"unlabeled_images", split.unlabeled_ids.size()},
                           {"parameters", model.parameter_count()}};
    std::ofstream summary_out(out_dir / "summary.json");
    summary_out << summary.dump(2) << '\n';
    return outcome;
}

} // namespace semiseg
