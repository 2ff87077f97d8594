#pragma once

#include <cstdint>
#include <filesystem>

#include "semiseg/train/model.hpp"

namespace semiseg {

struct CheckpointMeta {
    std::uint64_t iteration = 0;
    double best_miou = 0.0;
};

// Binary snapshot of parameters, batch-norm running stats and (optionally)
// optimizer momentum. Atomic: written to a temp file, then renamed.
void save_checkpoint(const std::filesystem::path& path, ReferenceModel& model, Sgd* optimizer,
                     const CheckpointMeta& meta);

// Restores into an identically-shaped model; shape mismatches are config
// errors (wrong model for this checkpoint).
CheckpointMeta load_checkpoint(const std::filesystem::path& path, ReferenceModel& model,
                               Sgd* optimizer);

} // namespace semiseg
