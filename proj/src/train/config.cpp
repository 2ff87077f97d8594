#include "semiseg/train/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "semiseg/core/error.hpp"
#include "semiseg/util/ini.hpp"

namespace semiseg {

namespace {

std::vector<ConfigKey> build_schema() {
    return {
        {"data.root", "string", "", "dataset root directory (holds dataset.json)"},
        {"data.split", "string", "1/8", "labeled fraction: 1/512..1/2 powers of two or 'full'"},
        {"data.split_seed", "uint", "1", "seed for drawing the labeled subset"},
        {"data.full_unlabeled_from_train", "bool", "false",
         "under split=full, reuse the whole train pool as the unlabeled set"},

        {"annotate.sim_threshold", "real", "0", "minimum cosine similarity to assign a class"},
        {"annotate.prompt_template", "string", "a photo of a {classlabel}",
         "prompt pattern; '{classlabel}' is replaced per class"},
        {"annotate.store", "string", "", "pseudo-label directory (default <root>/pseudo_labels)"},
        {"annotate.min_segment_area", "int", "1", "segment proposals smaller than this are dropped"},

        {"provider.kind", "string", "mock", "'mock' or 'precomputed'"},
        {"provider.dir", "string", "", "precomputed assets root (features/, segments/, text embeddings)"},
        {"provider.embedding_dim", "int", "16", "joint image-text embedding dimension (mock)"},
        {"provider.patch_size", "int", "4", "mock feature grid patch size"},
        {"provider.noise_sigma", "real", "0.02", "mock feature noise level"},
        {"provider.gem_depth", "int", "1", "self-self attention iterations over patch tokens"},
        {"provider.gem_temperature", "real", "0.05", "softmax temperature; 0 means sqrt(dim)"},
        {"provider.seed", "uint", "7", "mock provider seed"},

        {"model.width", "int", "32", "channel width of the reference model"},

        {"train.mode", "string", "semi", "'semi' or 'supervised' (labeled-only baseline)"},
        {"train.out_dir", "string", "", "run directory for checkpoints and metrics"},
        {"train.labeled_batch", "int", "8", "labeled images per iteration"},
        {"train.unlabeled_batch", "int", "8", "unlabeled images per iteration"},
        {"train.lr0", "real", "0.001", "initial learning rate (poly schedule)"},
        {"train.momentum", "real", "0.9", "SGD momentum"},
        {"train.weight_decay", "real", "0.0001", "L2 weight decay"},
        {"train.poly_power", "real", "0.9", "poly schedule exponent"},
        {"train.max_iters", "int", "1000", "total optimization steps"},
        {"train.crop_size", "int", "321", "square training crop"},
        {"train.tau", "real", "0.7", "confidence threshold for enhanced labels"},
        {"train.epsilon_rule", "string", "inverse-class-count",
         "label smoothing: 'inverse-class-count' or 'fixed'"},
        {"train.epsilon", "real", "0", "smoothing amount when epsilon_rule=fixed"},
        {"train.seed", "uint", "1", "master seed: model init, batch order, augmentations"},
        {"train.eval_every", "int", "200", "validation cadence in iterations (0 = only final)"},
        {"train.log_every", "int", "10", "metrics cadence in iterations"},
        {"train.stop_after", "int", "0",
         "end the session after this iteration and keep the schedule resumable (0 = off)"},

        {"perturb.scale_min", "real", "0.5", "lower bound of the resize scale"},
        {"perturb.scale_max", "real", "2", "upper bound of the resize scale"},
        {"perturb.hflip_p", "real", "0.5", "horizontal flip probability"},
        {"perturb.color_jitter_p", "real", "0.8", "probability of applying color jitter"},
        {"perturb.brightness", "real", "0.5", "color jitter brightness strength"},
        {"perturb.contrast", "real", "0.5", "color jitter contrast strength"},
        {"perturb.saturation", "real", "0.5", "color jitter saturation strength"},
        {"perturb.hue", "real", "0.25", "color jitter hue strength"},
        {"perturb.grayscale_p", "real", "0.2", "random grayscale probability"},
        {"perturb.blur_p", "real", "0.5", "gaussian blur probability"},
        {"perturb.blur_sigma_min", "real", "0.1", "blur sigma lower bound"},
        {"perturb.blur_sigma_max", "real", "2", "blur sigma upper bound"},
        {"perturb.cutmix_p", "real", "0.5", "CutMix probability per strong view"},
        {"perturb.cutmix_area_min", "real", "0.02", "CutMix box area fraction lower bound"},
        {"perturb.cutmix_area_max", "real", "0.4", "CutMix box area fraction upper bound"},
        {"perturb.cutmix_ratio", "real", "0.3", "CutMix aspect sampled from [r, 1/r]"},
        {"perturb.feature_dropout_p", "real", "0.5", "channel dropout probability (A^fp)"},
    };
}

const std::map<std::string, const ConfigKey*>& schema_index() {
    static const auto* index = [] {
        auto* map = new std::map<std::string, const ConfigKey*>;
        for (const ConfigKey& key : config_schema()) (*map)[key.name] = &key;
        return map;
    }();
    return *index;
}

class EntryReader {
public:
    explicit EntryReader(const std::map<std::string, std::string>& entries) : entries_(entries) {}

    std::string str(const std::string& name) const { return raw(name); }

    double real(const std::string& name) const {
        const std::string text = raw(name);
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(name + ": '" + text + "' is not a number");
        }
    }

    int integer(const std::string& name) const {
        const std::string text = raw(name);
        int v = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            throw ConfigError(name + ": '" + text + "' is not an integer");
        }
        return v;
    }

    std::uint64_t uinteger(const std::string& name) const {
        const std::string text = raw(name);
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
            throw ConfigError(name + ": '" + text + "' is not a non-negative integer");
        }
        return v;
    }

    bool boolean(const std::string& name) const {
        std::string text = raw(name);
        std::transform(text.begin(), text.end(), text.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
        if (text == "false" || text == "0" || text == "no" || text == "off") return false;
        throw ConfigError(name + ": '" + raw(name) + "' is not a boolean");
    }

private:
    std::string raw(const std::string& name) const {
        if (const auto it = entries_.find(name); it != entries_.end()) return it->second;
        return schema_index().at(name)->default_value;
    }

    const std::map<std::string, std::string>& entries_;
};

} // namespace

const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema = build_schema();
    return schema;
}

std::string config_help() {
    std::ostringstream out;
    std::string section;
    for (const ConfigKey& key : config_schema()) {
        const std::string current = key.name.substr(0, key.name.find('.'));
        if (current != section) {
            if (!section.empty()) out << '\n';
            section = current;
        }
        out << "  " << key.name;
        if (!key.default_value.empty()) out << " = " << key.default_value;
        out << "  (" << key.type << ")\n      " << key.help << '\n';
    }
    return out.str();
}

TrainConfig config_from_entries(const std::map<std::string, std::string>& entries) {
    const auto& index = schema_index();
    for (const auto& [name, value] : entries) {
        if (!index.count(name)) {
            throw ConfigError("unknown config key '" + name +
                              "' (see 'semiseg train --help-config' for the key list)");
        }
    }

    const EntryReader read(entries);
    TrainConfig config;
    config.data_root = read.str("data.root");
    config.split = parse_fraction(read.str("data.split"));
    config.split_seed = read.uinteger("data.split_seed");
    config.full_unlabeled_from_train = read.boolean("data.full_unlabeled_from_train");

    config.annotate.sim_threshold = read.real("annotate.sim_threshold");
    config.annotate.prompt_template = read.str("annotate.prompt_template");
    config.annotate.store_dir = read.str("annotate.store");
    config.annotate.min_segment_area = read.integer("annotate.min_segment_area");

    const std::string provider_kind = read.str("provider.kind");
    if (provider_kind == "mock") {
        config.provider.kind = ProviderKind::mock;
    } else if (provider_kind == "precomputed") {
        config.provider.kind = ProviderKind::precomputed;
    } else {
        throw ConfigError("provider.kind must be 'mock' or 'precomputed', got '" +
                          provider_kind + "'");
    }
    config.provider.dir = read.str("provider.dir");
    config.provider.embedding_dim = read.integer("provider.embedding_dim");
    config.provider.patch_size = read.integer("provider.patch_size");
    config.provider.noise_sigma = read.real("provider.noise_sigma");
    config.provider.gem_depth = read.integer("provider.gem_depth");
    config.provider.gem_temperature = read.real("provider.gem_temperature");
    config.provider.seed = read.uinteger("provider.seed");

    config.model_width = read.integer("model.width");

    const std::string mode = read.str("train.mode");
    if (mode == "semi") {
        config.mode = TrainMode::semi;
    } else if (mode == "supervised") {
        config.mode = TrainMode::supervised;
    } else {
        throw ConfigError("train.mode must be 'semi' or 'supervised', got '" + mode + "'");
    }
    config.out_dir = read.str("train.out_dir");
    config.labeled_batch = read.integer("train.labeled_batch");
    config.unlabeled_batch = read.integer("train.unlabeled_batch");
    config.lr0 = read.real("train.lr0");
    config.momentum = read.real("train.momentum");
    config.weight_decay = read.real("train.weight_decay");
    config.poly_power = read.real("train.poly_power");
    config.max_iters = read.integer("train.max_iters");
    config.crop_size = read.integer("train.crop_size");
    config.tau = read.real("train.tau");

    const std::string rule = read.str("train.epsilon_rule");
    if (rule == "inverse-class-count") {
        config.smoothing.rule = SmoothingRule::inverse_class_count;
    } else if (rule == "fixed") {
        config.smoothing.rule = SmoothingRule::fixed;
    } else {
        throw ConfigError(
            "train.epsilon_rule must be 'inverse-class-count' or 'fixed', got '" + rule + "'");
    }
    config.smoothing.epsilon = read.real("train.epsilon");
    config.seed = read.uinteger("train.seed");
    config.eval_every = read.integer("train.eval_every");
    config.log_every = read.integer("train.log_every");
    config.stop_after = read.integer("train.stop_after");

    config.perturb.scale_min = read.real("perturb.scale_min");
    config.perturb.scale_max = read.real("perturb.scale_max");
    config.perturb.crop_size = config.crop_size;
    config.perturb.hflip_p = read.real("perturb.hflip_p");
    config.perturb.color_jitter_p = read.real("perturb.color_jitter_p");
    config.perturb.brightness = read.real("perturb.brightness");
    config.perturb.contrast = read.real("perturb.contrast");
    config.perturb.saturation = read.real("perturb.saturation");
    config.perturb.hue = read.real("perturb.hue");
    config.perturb.grayscale_p = read.real("perturb.grayscale_p");
    config.perturb.blur_p = read.real("perturb.blur_p");
    config.perturb.blur_sigma_min = read.real("perturb.blur_sigma_min");
    config.perturb.blur_sigma_max = read.real("perturb.blur_sigma_max");
    config.perturb.cutmix_p = read.real("perturb.cutmix_p");
    config.perturb.cutmix_area_min = read.real("perturb.cutmix_area_min");
    config.perturb.cutmix_area_max = read.real("perturb.cutmix_area_max");
    config.perturb.cutmix_ratio = read.real("perturb.cutmix_ratio");
    config.perturb.feature_dropout_p = read.real("perturb.feature_dropout_p");

    validate(config);
    return config;
}

TrainConfig load_train_config(const std::string& ini_path,
                              const std::vector<std::string>& overrides) {
    IniFile ini = ini_path.empty() ? IniFile{} : IniFile::parse_file(ini_path);
    for (const std::string& entry : overrides) ini.apply_override(entry);
    return config_from_entries(ini.entries());
}

TrainConfig default_train_config() { return config_from_entries({}); }

void validate(const TrainConfig& config) {
    if (config.labeled_batch < 1) throw ConfigError("train.labeled_batch must be >= 1");
    if (config.unlabeled_batch < 1) throw ConfigError("train.unlabeled_batch must be >= 1");
    if (!(config.lr0 > 0.0)) throw ConfigError("train.lr0 must be positive");
    if (config.momentum < 0.0 || config.momentum >= 1.0) {
        throw ConfigError("train.momentum must lie in [0, 1)");
    }
    if (config.weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
    if (!(config.poly_power > 0.0)) throw ConfigError("train.poly_power must be positive");
    if (config.max_iters < 1) throw ConfigError("train.max_iters must be >= 1");
    if (config.crop_size < 8) throw ConfigError("train.crop_size must be >= 8");
    if (!(config.tau > 0.0) || config.tau > 1.0) throw ConfigError("train.tau must lie in (0, 1]");
    if (config.smoothing.rule == SmoothingRule::fixed) validate(config.smoothing);
    if (config.eval_every < 0) throw ConfigError("train.eval_every must be >= 0");
    if (config.log_every < 1) throw ConfigError("train.log_every must be >= 1");
    if (config.stop_after < 0) throw ConfigError("train.stop_after must be >= 0");
    if (config.model_width < 4 || config.model_width % 2 != 0) {
        throw ConfigError("model.width must be even and >= 4");
    }
    if (config.provider.embedding_dim < 2) {
        throw ConfigError("provider.embedding_dim must be >= 2");
    }
    if (config.provider.patch_size < 1) throw ConfigError("provider.patch_size must be >= 1");
    if (config.provider.gem_depth < 0) throw ConfigError("provider.gem_depth must be >= 0");
    if (config.annotate.min_segment_area < 1) {
        throw ConfigError("annotate.min_segment_area must be >= 1");
    }
    if (!(config.perturb.scale_min > 0.0) ||
        config.perturb.scale_max < config.perturb.scale_min) {
        throw ConfigError("perturb scale range is invalid");
    }
    if (config.perturb.cutmix_area_min <= 0.0 ||
        config.perturb.cutmix_area_max > 1.0 ||
        config.perturb.cutmix_area_max < config.perturb.cutmix_area_min) {
        throw ConfigError("perturb cutmix area range is invalid");
    }
    if (!(config.perturb.cutmix_ratio > 0.0) || config.perturb.cutmix_ratio > 1.0) {
        throw ConfigError("perturb.cutmix_ratio must lie in (0, 1]");
    }
    if (config.perturb.feature_dropout_p < 0.0 || config.perturb.feature_dropout_p >= 1.0) {
        throw ConfigError("perturb.feature_dropout_p must lie in [0, 1)");
    }
    for (double p : {config.perturb.hflip_p, config.perturb.color_jitter_p,
                     config.perturb.grayscale_p, config.perturb.blur_p,
                     config.perturb.cutmix_p}) {
        if (p < 0.0 || p > 1.0) throw ConfigError("perturbation probabilities must lie in [0, 1]");
    }
}

} // namespace semiseg
