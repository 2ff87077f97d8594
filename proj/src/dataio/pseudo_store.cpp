#include "semiseg/dataio/pseudo_store.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "semiseg/core/error.hpp"
#include "semiseg/dataio/image_io.hpp"

namespace semiseg {

namespace fs = std::filesystem;
using nlohmann::json;

PseudoLabelStore::PseudoLabelStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

fs::path PseudoLabelStore::mask_path(const std::string& id) const {
    return dir_ / (id + ".png");
}

bool PseudoLabelStore::has_manifest() const { return fs::exists(dir_ / "manifest.json"); }

void PseudoLabelStore::write_manifest(const PseudoManifest& manifest) const {
    json doc;
    doc["num_classes"] = manifest.num_classes;
    doc["ignore_id"] = manifest.ignore_id;
    doc["background_policy"] = manifest.background_policy;
    doc["sim_threshold"] = manifest.sim_threshold;
    doc["prompt_template"] = manifest.prompt_template;
    doc["proposer_digest"] = manifest.proposer_digest;
    doc["feature_digest"] = manifest.feature_digest;
    doc["text_digest"] = manifest.text_digest;
    doc["annotated_ids"] = manifest.annotated_ids;

    const fs::path path = dir_ / "manifest.json";
    const fs::path tmp = dir_ / "manifest.json.tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw DataError("cannot write manifest under " + dir_.string());
        out << doc.dump(2) << '\n';
    }
    fs::rename(tmp, path);
    cached_manifest_.reset();
}

const PseudoManifest& PseudoLabelStore::manifest() const {
    if (!cached_manifest_) cached_manifest_ = read_manifest();
    return *cached_manifest_;
}

PseudoManifest PseudoLabelStore::read_manifest() const {
    const fs::path path = dir_ / "manifest.json";
    std::ifstream in(path);
    if (!in) throw DataError("pseudo-label store has no manifest: " + path.string());
    json doc;
    try {
        in >> doc;
        PseudoManifest manifest;
        manifest.num_classes = doc.at("num_classes").get<int>();
        manifest.ignore_id = doc.at("ignore_id").get<ClassId>();
        manifest.background_policy = doc.value("background_policy", std::string{});
        manifest.sim_threshold = doc.at("sim_threshold").get<double>();
        manifest.prompt_template = doc.value("prompt_template", std::string{});
        manifest.proposer_digest = doc.value("proposer_digest", std::string{});
        manifest.feature_digest = doc.value("feature_digest", std::string{});
        manifest.text_digest = doc.value("text_digest", std::string{});
        if (doc.contains("annotated_ids")) {
            manifest.annotated_ids = doc.at("annotated_ids").get<std::vector<std::string>>();
        }
        return manifest;
    } catch (const json::exception& e) {
        throw DataError("malformed pseudo-label manifest: " + std::string(e.what()));
    }
}

bool PseudoLabelStore::has(const std::string& id) const { return fs::exists(mask_path(id)); }

void PseudoLabelStore::save(const std::string& id, const LabelMap& map) const {
    const fs::path path = mask_path(id);
    const fs::path tmp = path.string() + ".tmp.png";
    write_label_png(tmp, map);
    fs::rename(tmp, path);
}

LabelMap PseudoLabelStore::load(const std::string& id, const ClassVocabulary& vocab) const {
    const PseudoManifest& manifest = this->manifest();
    if (manifest.num_classes != vocab.num_classes() || manifest.ignore_id != vocab.ignore_id()) {
        throw ConfigError("pseudo-label store was annotated for " +
                          std::to_string(manifest.num_classes) + " classes (ignore " +
                          std::to_string(manifest.ignore_id) + "), requested " +
                          std::to_string(vocab.num_classes()) + " (ignore " +
                          std::to_string(vocab.ignore_id()) + ")");
    }
    if (!has(id)) throw DataError("no pseudo-label for id '" + id + "' in " + dir_.string());
    LabelMap map = read_label_png(mask_path(id));
    map.provenance = LabelProvenance::pseudo;
    validate_label_map(map, vocab);
    return map;
}

} // namespace semiseg
