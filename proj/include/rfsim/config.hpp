#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfsim/emitter.hpp"

namespace rfsim {

// Run configuration: `[section]` headers and `key = value` lines; `#` or `;`
// start a comment. Keys are addressed as "section.key".

enum class ValueKind { Number, Integer, Text, List };

struct KeySpec {
    std::string name;        // section.key
    ValueKind kind;
    std::string fallback;    // empty: no default
    std::string help;
};

/// Every key the tool understands, in output order.
const std::vector<KeySpec>& config_schema();

struct ConfigEntry {
    std::string value;
    int line = 0; // 0 for materialized defaults
};

class RunConfig {
public:
    /// Parses text; `source` prefixes diagnostics ("source:line: ...").
    /// Throws ValidationError on syntax errors, unknown keys, duplicates or
    /// values of the wrong kind.
    static RunConfig parse(const std::string& text, const std::string& source = "config");
    /// Throws IoError if the file cannot be read.
    static RunConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const;          // set explicitly
    double number(const std::string& key) const;     // explicit or default
    int integer(const std::string& key) const;
    std::string text(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;
    std::optional<double> optional_number(const std::string& key) const;

    void set(const std::string& key, const std::string& value);

    /// Throws ValidationError naming the key if it is neither set nor defaulted.
    void require(const std::string& key) const;

    /// All schema keys with explicit values or defaults, in config syntax.
    /// Parsing the result reproduces the same resolved configuration.
    std::string materialize(const std::vector<std::string>& header_comments = {}) const;

    const std::string& source() const { return source_; }

private:
    std::string raw(const std::string& key) const;
    std::string where(const std::string& key) const;

    std::map<std::string, ConfigEntry> entries_;
    std::string source_;
};

EmitterParams emitter_from_config(const RunConfig& cfg);

/// Resolved coupling-field half splitting G (GHz) from exactly one of
/// drive.rabi2_weak_ghz (= 2G) or drive.alpha (power ratio, 2G = √α·Ω).
/// Throws ValidationError if both or neither are set.
double weak_rabi_from_config(const RunConfig& cfg);

} // namespace rfsim
