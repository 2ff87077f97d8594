#pragma once

#include <string>
#include <vector>

#include "semiseg/train/config.hpp"

namespace semiseg {

struct CommandSpec {
    std::string config_path;               // INI file; optional
    std::vector<std::string> overrides;    // dotted section.key=value pairs
};

TrainConfig resolve_config(const CommandSpec& spec);

// Each command prints its human-readable summary to stdout and throws
// Error subclasses on failure; main maps those to exit codes.
void cmd_make_splits(const TrainConfig& config);
void cmd_annotate(const TrainConfig& config, int workers, bool overwrite);
void cmd_train(const TrainConfig& config, bool resume, bool annotate_first, int workers);
void cmd_eval(const TrainConfig& config, const std::string& checkpoint,
              const std::string& mask_dump_dir);
void cmd_report(const std::string& run_dir);

} // namespace semiseg
