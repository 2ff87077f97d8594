#include "semiseg/util/ini.hpp"

#include <fstream>
#include <sstream>

#include "semiseg/core/error.hpp"

namespace semiseg {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

IniFile IniFile::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path.string());
}

IniFile IniFile::parse_string(const std::string& text, const std::string& origin) {
    IniFile ini;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            }
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        }
        if (section.empty()) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside a [section]");
        }
        ini.entries_[section + "." + key] = value;
    }
    return ini;
}

void IniFile::apply_override(const std::string& dotted) {
    std::size_t eq = dotted.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override must look like section.key=value, got: " + dotted);
    }
    std::string key = trim(dotted.substr(0, eq));
    std::string value = trim(dotted.substr(eq + 1));
    if (key.find('.') == std::string::npos) {
        throw ConfigError("override key must be section.key, got: " + key);
    }
    entries_[key] = value;
}

std::optional<std::string> IniFile::get(const std::string& dotted_key) const {
    auto it = entries_.find(dotted_key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

} // namespace semiseg
