#include "semiseg/dataio/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "semiseg/core/error.hpp"
#include "semiseg/core/rng.hpp"
#include "semiseg/dataio/image_io.hpp"

namespace semiseg {

namespace fs = std::filesystem;
using nlohmann::json;

std::filesystem::path DatasetDescriptor::image_path(const std::string& id) const {
    return root / "images" / (id + ".png");
}

std::filesystem::path DatasetDescriptor::label_path(const std::string& id) const {
    return root / "labels" / (id + ".png");
}

std::vector<std::string> read_id_list(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open id list: " + path.string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

void write_id_list(const fs::path& path, const std::vector<std::string>& ids) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw DataError("cannot write id list: " + path.string());
        for (const std::string& id : ids) out << id << '\n';
    }
    fs::rename(tmp, path);
}

DatasetDescriptor load_descriptor(const fs::path& root) {
    const fs::path json_path = root / "dataset.json";
    std::ifstream in(json_path);
    if (!in) throw DataError("cannot open dataset descriptor: " + json_path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("malformed dataset.json: " + std::string(e.what()));
    }

    try {
        const auto names = doc.at("classes").get<std::vector<std::string>>();
        const std::string policy_name = doc.at("background_policy").get<std::string>();
        BackgroundPolicy policy;
        if (policy_name == "explicit_background") {
            policy = BackgroundPolicy::explicit_background;
        } else if (policy_name == "unassigned_is_ignore") {
            policy = BackgroundPolicy::unassigned_is_ignore;
        } else {
            throw ConfigError("unknown background_policy: " + policy_name);
        }
        const ClassId ignore_id = doc.value("ignore_id", kDefaultIgnoreId);

        std::vector<Rgb> palette;
        if (doc.contains("palette")) {
            for (const auto& entry : doc.at("palette")) {
                if (entry.size() != 3) throw DataError("palette entries must be RGB triples");
                palette.push_back({entry[0].get<float>(), entry[1].get<float>(),
                                   entry[2].get<float>()});
            }
            if (palette.size() != names.size()) {
                throw DataError("palette size does not match the class count");
            }
        }

        DatasetDescriptor descriptor{
            doc.value("name", root.filename().string()),
            root,
            ClassVocabulary(names, policy, ignore_id),
            std::move(palette),
            read_id_list(root / doc.value("train_ids", std::string("train.txt"))),
            read_id_list(root / doc.value("val_ids", std::string("val.txt"))),
        };

        auto check_ids = [&](const std::vector<std::string>& ids) {
            for (const std::string& id : ids) {
                if (!fs::exists(descriptor.image_path(id))) {
                    throw DataError("id '" + id + "' has no image at " +
                                    descriptor.image_path(id).string());
                }
                if (!fs::exists(descriptor.label_path(id))) {
                    throw DataError("id '" + id + "' has no label at " +
                                    descriptor.label_path(id).string());
                }
            }
        };
        check_ids(descriptor.train_ids);
        check_ids(descriptor.val_ids);
        if (descriptor.train_ids.empty()) throw DataError("dataset has no train ids");
        return descriptor;
    } catch (const json::exception& e) {
        throw DataError("dataset.json missing fields: " + std::string(e.what()));
    }
}

void save_descriptor(const DatasetDescriptor& descriptor) {
    fs::create_directories(descriptor.root);
    json doc;
    doc["name"] = descriptor.name;
    doc["classes"] = descriptor.vocab.names();
    doc["background_policy"] =
        descriptor.vocab.background_policy() == BackgroundPolicy::explicit_background
            ? "explicit_background"
            : "unassigned_is_ignore";
    doc["ignore_id"] = descriptor.vocab.ignore_id();
    if (!descriptor.palette.empty()) {
        json palette = json::array();
        for (const Rgb& color : descriptor.palette) palette.push_back({color[0], color[1], color[2]});
        doc["palette"] = palette;
    }
    doc["train_ids"] = "train.txt";
    doc["val_ids"] = "val.txt";
    {
        std::ofstream out(descriptor.root / "dataset.json");
        if (!out) throw DataError("cannot write dataset.json under " + descriptor.root.string());
        out << doc.dump(2) << '\n';
    }
    write_id_list(descriptor.root / "train.txt", descriptor.train_ids);
    write_id_list(descriptor.root / "val.txt", descriptor.val_ids);
}

SplitFraction parse_fraction(const std::string& text) {
    if (text == "full") return SplitFraction::full;
    if (text == "1/2") return SplitFraction::f1_2;
    if (text == "1/4") return SplitFraction::f1_4;
    if (text == "1/8") return SplitFraction::f1_8;
    if (text == "1/16") return SplitFraction::f1_16;
    if (text == "1/64") return SplitFraction::f1_64;
    if (text == "1/128") return SplitFraction::f1_128;
    if (text == "1/256") return SplitFraction::f1_256;
    if (text == "1/512") return SplitFraction::f1_512;
    throw ConfigError("unknown split fraction '" + text +
                      "' (expected 1/512..1/2 powers of two or 'full')");
}

std::string fraction_name(SplitFraction fraction) {
    switch (fraction) {
        case SplitFraction::f1_512: return "1/512";
        case SplitFraction::f1_256: return "1/256";
        case SplitFraction::f1_128: return "1/128";
        case SplitFraction::f1_64: return "1/64";
        case SplitFraction::f1_16: return "1/16";
        case SplitFraction::f1_8: return "1/8";
        case SplitFraction::f1_4: return "1/4";
        case SplitFraction::f1_2: return "1/2";
        case SplitFraction::full: return "full";
    }
    throw ConfigError("invalid split fraction value");
}

int fraction_denominator(SplitFraction fraction) {
    switch (fraction) {
        case SplitFraction::f1_512: return 512;
        case SplitFraction::f1_256: return 256;
        case SplitFraction::f1_128: return 128;
        case SplitFraction::f1_64: return 64;
        case SplitFraction::f1_16: return 16;
        case SplitFraction::f1_8: return 8;
        case SplitFraction::f1_4: return 4;
        case SplitFraction::f1_2: return 2;
        case SplitFraction::full: return 1;
    }
    throw ConfigError("invalid split fraction value");
}

std::size_t labeled_count(std::size_t pool_size, SplitFraction fraction) {
    const auto denom = static_cast<std::size_t>(fraction_denominator(fraction));
    return (pool_size + denom - 1) / denom;
}

namespace {

std::string split_tag(SplitFraction fraction, std::uint64_t seed) {
    std::string tag = fraction_name(fraction);
    std::replace(tag.begin(), tag.end(), '/', '_');
    return tag + "_seed" + std::to_string(seed);
}

void check_split_ids(const DatasetDescriptor& descriptor, const SplitSpec& split) {
    std::set<std::string> pool(descriptor.train_ids.begin(), descriptor.train_ids.end());
    std::set<std::string> seen;
    auto check = [&](const std::vector<std::string>& ids, const char* which) {
        for (const std::string& id : ids) {
            if (!pool.count(id)) {
                throw DataError(std::string(which) + " id '" + id +
                                "' is not in the train pool");
            }
            if (!seen.insert(id).second) {
                throw DataError("id '" + id + "' appears in both split halves");
            }
        }
    };
    check(split.labeled_ids, "labeled");
    check(split.unlabeled_ids, "unlabeled");
}

} // namespace

SplitSpec load_split(const DatasetDescriptor& descriptor, SplitFraction fraction,
                     std::uint64_t seed, bool full_unlabeled_from_train) {
    SplitSpec split;
    split.fraction = fraction;
    split.seed = seed;

    const fs::path dir = descriptor.root / "splits" / split_tag(fraction, seed);
    const fs::path labeled_path = dir / "labeled.txt";
    const fs::path unlabeled_path = dir / "unlabeled.txt";
    if (fs::exists(labeled_path) && fs::exists(unlabeled_path)) {
        split.labeled_ids = read_id_list(labeled_path);
        split.unlabeled_ids = read_id_list(unlabeled_path);
        check_split_ids(descriptor, split);
        return split;
    }

    const std::size_t count = labeled_count(descriptor.train_ids.size(), fraction);
    if (count < 1) throw ConfigError("split fraction leaves no labeled images");

    if (fraction == SplitFraction::full) {
        split.labeled_ids = descriptor.train_ids;
        if (full_unlabeled_from_train) split.unlabeled_ids = descriptor.train_ids;
    } else {
        std::vector<std::string> shuffled = descriptor.train_ids;
        Rng rng(seed);
        Rng stream = rng.substream(0x517ULL); // split stream, independent of training draws
        stream.shuffle(shuffled);
        split.labeled_ids.assign(shuffled.begin(), shuffled.begin() + count);
        split.unlabeled_ids.assign(shuffled.begin() + count, shuffled.end());
        std::sort(split.labeled_ids.begin(), split.labeled_ids.end());
        std::sort(split.unlabeled_ids.begin(), split.unlabeled_ids.end());
    }

    write_id_list(labeled_path, split.labeled_ids);
    write_id_list(unlabeled_path, split.unlabeled_ids);
    return split;
}

std::pair<Image, std::optional<LabelMap>> load_sample(const DatasetDescriptor& descriptor,
                                                      const std::string& id, bool want_label) {
    Image image;
    try {
        image = read_image_png(descriptor.image_path(id));
    } catch (const DataError& e) {
        throw DataError("sample '" + id + "': " + e.what());
    }
    std::optional<LabelMap> label;
    if (want_label) {
        try {
            label = read_label_png(descriptor.label_path(id));
        } catch (const DataError& e) {
            throw DataError("sample '" + id + "': " + e.what());
        }
        if (label->height != image.height || label->width != image.width) {
            throw DataError("sample '" + id + "': image and label shapes differ");
        }
        validate_label_map(*label, descriptor.vocab);
    }
    return {std::move(image), std::move(label)};
}

LabelMap indexed_from_rgb(const Image& rgb_mask, const std::vector<Rgb>& palette,
                          ClassId ignore_id) {
    if (palette.empty()) throw ConfigError("indexed_from_rgb: empty palette");
    LabelMap map(rgb_mask.height, rgb_mask.width, ignore_id, LabelProvenance::ground_truth);
    const float tolerance = 0.5f / 255.0f; // absorb 8-bit quantization
    for (int r = 0; r < rgb_mask.height; ++r) {
        for (int c = 0; c < rgb_mask.width; ++c) {
            const float* px = rgb_mask.at(r, c);
            for (std::size_t k = 0; k < palette.size(); ++k) {
                if (std::abs(px[0] - palette[k][0]) <= tolerance &&
                    std::abs(px[1] - palette[k][1]) <= tolerance &&
                    std::abs(px[2] - palette[k][2]) <= tolerance) {
                    map.at(r, c) = static_cast<ClassId>(k);
                    break;
                }
            }
        }
    }
    return map;
}

} // namespace semiseg
