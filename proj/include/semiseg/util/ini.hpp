#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace semiseg {

// INI-style experiment config: `[section]` headers, `key = value` lines,
// `#`/`;` comments. Values are kept as strings; typed access and schema
// validation live with TrainConfig. Keys are stored as "section.key",
// which is also the dotted-override syntax on the command line.
class IniFile {
public:
    static IniFile parse_file(const std::filesystem::path& path);
    static IniFile parse_string(const std::string& text, const std::string& origin = "<string>");

    // Accepts "section.key=value"; throws ConfigError on malformed input.
    void apply_override(const std::string& dotted);

    std::optional<std::string> get(const std::string& dotted_key) const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

} // namespace semiseg
