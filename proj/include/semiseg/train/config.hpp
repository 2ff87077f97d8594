#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "semiseg/dataio/dataset.hpp"
#include "semiseg/loss/loss.hpp"
#include "semiseg/perturb/perturb.hpp"

namespace semiseg {

enum class TrainMode { semi, supervised };
enum class ProviderKind { mock, precomputed };

struct AnnotateConfig {
    double sim_threshold = 0.0;
    std::string prompt_template = "a photo of a {classlabel}";
    std::string store_dir; // empty -> <data.root>/pseudo_labels
    int min_segment_area = 1;
};

struct ProviderConfig {
    ProviderKind kind = ProviderKind::mock;
    std::string dir; // precomputed assets root
    int embedding_dim = 16;
    int patch_size = 4;
    double noise_sigma = 0.02;
    int gem_depth = 1;
    double gem_temperature = 0.05;
    std::uint64_t seed = 7;
};

struct TrainConfig {
    // [data]
    std::string data_root;
    SplitFraction split = SplitFraction::f1_8;
    std::uint64_t split_seed = 1;
    bool full_unlabeled_from_train = false;

    // [annotate] / [provider]
    AnnotateConfig annotate;
    ProviderConfig provider;

    // [model]
    int model_width = 32;

    // [train]
    TrainMode mode = TrainMode::semi;
    std::string out_dir;
    int labeled_batch = 8;
    int unlabeled_batch = 8;
    double lr0 = 0.001;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double poly_power = 0.9;
    int max_iters = 1000;
    int crop_size = 321;
    double tau = 0.7;
    SmoothingConfig smoothing;
    std::uint64_t seed = 1;
    int eval_every = 200;
    int log_every = 10;
    int stop_after = 0; // end the session after this iteration (0 = run to max_iters)

    // [perturb]
    PerturbConfig perturb;
};

struct ConfigKey {
    std::string name; // section.key
    std::string type; // int | uint | real | bool | string
    std::string default_value;
    std::string help;
};

const std::vector<ConfigKey>& config_schema();
std::string config_help(); // one line per key: name, type, default, help

// Flat dotted-key view of an INI file plus overrides; unknown keys and
// ill-typed values are config errors.
TrainConfig config_from_entries(const std::map<std::string, std::string>& entries);
TrainConfig load_train_config(const std::string& ini_path,
                              const std::vector<std::string>& overrides);
TrainConfig default_train_config(); // schema defaults only

void validate(const TrainConfig& config);

} // namespace semiseg
