#include "irsr/core/kv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace irsr {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

KvFile KvFile::parse(const std::string& text) {
    KvFile kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("kv parse error at line " + std::to_string(lineno) + ": missing '='");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("kv parse error at line " + std::to_string(lineno) + ": empty key");
        kv.set(key, value);
    }
    return kv;
}

KvFile KvFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool KvFile::has(const std::string& key) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& KvFile::get(const std::string& key) const {
    for (const auto& e : entries_)
        if (e.first == key)
            return e.second;
    throw std::runtime_error("missing config key: " + key);
}

std::string KvFile::get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

int64_t KvFile::get_int(const std::string& key) const {
    const std::string& v = get(key);
    size_t pos = 0;
    int64_t r = std::stoll(v, &pos);
    if (pos != v.size())
        throw std::runtime_error("config key " + key + ": not an integer: " + v);
    return r;
}

int64_t KvFile::get_int_or(const std::string& key, int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

uint64_t KvFile::get_uint(const std::string& key) const {
    const std::string& v = get(key);
    size_t pos = 0;
    uint64_t r = std::stoull(v, &pos);
    if (pos != v.size())
        throw std::runtime_error("config key " + key + ": not an unsigned integer: " + v);
    return r;
}

uint64_t KvFile::get_uint_or(const std::string& key, uint64_t fallback) const {
    return has(key) ? get_uint(key) : fallback;
}

double KvFile::get_double(const std::string& key) const {
    const std::string& v = get(key);
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size())
        throw std::runtime_error("config key " + key + ": not a number: " + v);
    return r;
}

double KvFile::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

bool KvFile::get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key))
        return fallback;
    const std::string& v = get(key);
    if (v == "true" || v == "1")
        return true;
    if (v == "false" || v == "0")
        return false;
    throw std::runtime_error("config key " + key + ": not a bool: " + v);
}

void KvFile::set(const std::string& key, const std::string& value) {
    for (auto& e : entries_) {
        if (e.first == key) {
            e.second = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void KvFile::set_int(const std::string& key, int64_t value) {
    set(key, std::to_string(value));
}

void KvFile::set_uint(const std::string& key, uint64_t value) {
    set(key, std::to_string(value));
}

void KvFile::set_double(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    set(key, buf);
}

void KvFile::require_keys_in(const std::vector<std::string>& allowed) const {
    std::string unknown;
    for (const auto& e : entries_) {
        if (e.first == "schema_version")
            continue;
        if (std::find(allowed.begin(), allowed.end(), e.first) == allowed.end()) {
            if (!unknown.empty())
                unknown += ", ";
            unknown += e.first;
        }
    }
    if (!unknown.empty())
        throw std::runtime_error("unknown config keys: " + unknown);
}

int KvFile::schema_version() const {
    if (!has("schema_version"))
        throw std::runtime_error("config is missing schema_version");
    return static_cast<int>(get_int("schema_version"));
}

std::string KvFile::serialize() const {
    std::string out;
    for (const auto& e : entries_) {
        out += e.first;
        out += " = ";
        out += e.second;
        out += "\n";
    }
    return out;
}

void KvFile::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write config file: " + path);
    out << serialize();
}

}  // namespace irsr
