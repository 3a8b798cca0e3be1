#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace adex {

// Flat key=value text files. '#' starts a comment, blank lines are skipped,
// keys are dotted lowercase identifiers. Key order in the file is free; the
// canonical form (used for hashing) is sorted.
class KvFile {
public:
    KvFile() = default;

    static KvFile parse_text(const std::string& text);
    static KvFile load(const std::string& path);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    // Typed getters; throw ConfigError on missing key or unparsable value.
    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    long get_long(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    // Defaulted variants.
    std::string get_string(const std::string& key, const std::string& dflt) const;
    double get_double(const std::string& key, double dflt) const;
    long get_long(const std::string& key, long dflt) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    // Keys with the given prefix (inclusive of the prefix itself).
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
    const std::map<std::string, std::string>& entries() const { return kv_; }

    // Sorted key=value serialization; stable across runs.
    std::string canonical_text() const;
    std::uint64_t hash() const;  // FNV-1a over canonical_text()

private:
    std::map<std::string, std::string> kv_;
};

// FNV-1a 64-bit, the project-wide checksum primitive.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xCBF29CE484222325ull);

}  // namespace adex
