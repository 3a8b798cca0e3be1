#include "adex/kvfile.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "adex/errors.hpp"

namespace adex {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

KvFile KvFile::parse_text(const std::string& text) {
    KvFile out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + " is not key=value: '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key on line " + std::to_string(line_no));
        if (out.kv_.count(key)) throw ConfigError("duplicate key '" + key + "'");
        out.kv_[key] = val;
    }
    return out;
}

KvFile KvFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

std::string KvFile::get_string(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
}

double KvFile::get_double(const std::string& key) const {
    std::string v = get_string(key);
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "' is not a number: '" + v + "'");
    return x;
}

long KvFile::get_long(const std::string& key) const {
    std::string v = get_string(key);
    char* end = nullptr;
    long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "' is not an integer: '" + v + "'");
    return x;
}

std::uint64_t KvFile::get_u64(const std::string& key) const {
    std::string v = get_string(key);
    char* end = nullptr;
    unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "' is not an unsigned integer: '" + v + "'");
    return static_cast<std::uint64_t>(x);
}

bool KvFile::get_bool(const std::string& key) const {
    std::string v = get_string(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError("key '" + key + "' is not a boolean: '" + v + "'");
}

std::string KvFile::get_string(const std::string& key, const std::string& dflt) const {
    return has(key) ? get_string(key) : dflt;
}
double KvFile::get_double(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
}
long KvFile::get_long(const std::string& key, long dflt) const {
    return has(key) ? get_long(key) : dflt;
}
std::uint64_t KvFile::get_u64(const std::string& key, std::uint64_t dflt) const {
    return has(key) ? get_u64(key) : dflt;
}
bool KvFile::get_bool(const std::string& key, bool dflt) const {
    return has(key) ? get_bool(key) : dflt;
}

std::vector<std::string> KvFile::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : kv_)
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
}

std::string KvFile::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

std::uint64_t KvFile::hash() const {
    std::string t = canonical_text();
    return fnv1a64(t.data(), t.size());
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace adex
