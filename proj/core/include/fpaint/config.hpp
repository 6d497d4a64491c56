#pragma once

#include <map>
#include <string>
#include <vector>

namespace fpaint {

// Flat "key = value" configuration with '#' comments. Sections are key
// prefixes (train.lr, model.head_count, ...). Unknown keys are rejected so a
// typo never silently falls back to a default. Every key has a documented
// default; see default_config().

struct ConfigEntry {
    std::string value;
    std::string doc;
};

class Config {
public:
    // starts from the full defaults table
    Config();

    // parse file / text and overlay onto the defaults; unknown keys throw
    void load_file(const std::string& path);
    void load_text(const std::string& text, const std::string& origin = "<config>");
    void set(const std::string& key, const std::string& value);  // unknown keys throw

    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;  // comma separated

    // deterministic "key = value" dump of every key, sorted
    std::string dump() const;
    const std::map<std::string, ConfigEntry>& entries() const { return entries_; }

private:
    std::map<std::string, ConfigEntry> entries_;
};

}  // namespace fpaint
