#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "semiseg/eval/eval.hpp"
#include "semiseg/train/config.hpp"
#include "semiseg/train/model.hpp"

namespace semiseg {

// lr0 * (1 - iter/max_iters)^power.
double poly_lr(double lr0, int iter, int max_iters, double power);

// Deterministic batch composition: a pure function of (seed, stream,
// iteration). Pools at least as large as the batch are consumed in
// shuffled epochs without replacement; smaller pools are sampled with
// replacement.
std::vector<std::size_t> plan_batch_indices(std::size_t pool_size, int batch,
                                            std::uint64_t seed, std::uint64_t stream,
                                            int iteration);

// CutMix partner for every batch slot: a shared random rotation, so no
// slot partners with itself (when batch > 1).
std::vector<int> plan_cutmix_partners(int batch, std::uint64_t seed, std::uint64_t stream,
                                      int iteration);

struct TrainOutcome {
    int iterations = 0;
    double best_miou = 0.0;
    double final_miou = 0.0;
    std::filesystem::path best_checkpoint;
    std::filesystem::path last_checkpoint;
    std::filesystem::path metrics_path;
};

// Full training run (semi or supervised per config.mode). With `resume`,
// picks up from <out_dir>/last.ckpt when present; batch composition and
// augmentation draws depend only on (seed, iteration), so a resumed run
// retraces the original schedule.
TrainOutcome run_training(const TrainConfig& config, bool resume = false);

// Whole-image eval-mode inference over the given ids.
EvalResult evaluate_on_ids(ReferenceModel& model, const DatasetDescriptor& descriptor,
                           const std::vector<std::string>& ids);

} // namespace semiseg
