#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "semiseg/core/types.hpp"

namespace semiseg {

// Provenance of one annotation run, stored next to the masks so training
// can refuse stale or mismatched pseudo-labels.
struct PseudoManifest {
    int num_classes = 0;
    ClassId ignore_id = kDefaultIgnoreId;
    std::string background_policy;
    double sim_threshold = 0.0;
    std::string prompt_template;
    std::string proposer_digest;
    std::string feature_digest;
    std::string text_digest;
    std::vector<std::string> annotated_ids;
};

// Directory of <id>.png masks plus manifest.json. Writes are atomic
// (temp file + rename).
class PseudoLabelStore {
public:
    explicit PseudoLabelStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    bool has_manifest() const;
    void write_manifest(const PseudoManifest& manifest) const;
    PseudoManifest read_manifest() const;

    bool has(const std::string& id) const;
    void save(const std::string& id, const LabelMap& map) const;

    // Loads one mask and checks it against the vocabulary recorded in the
    // manifest; a class-count or ignore-id mismatch is a config error.
    LabelMap load(const std::string& id, const ClassVocabulary& vocab) const;

private:
    std::filesystem::path mask_path(const std::string& id) const;
    const PseudoManifest& manifest() const; // parsed once, then cached

    std::filesystem::path dir_;
    mutable std::optional<PseudoManifest> cached_manifest_;
};

} // namespace semiseg
