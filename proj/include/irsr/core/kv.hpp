#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace irsr {

// Line-oriented "key = value" config text. '#' starts a comment. Every file
// carries a schema_version key; consumers reject unknown keys so stale or
// misspelled configs fail fast.
class KvFile {
public:
    KvFile() = default;

    static KvFile parse(const std::string& text);
    static KvFile load(const std::string& path);

    bool has(const std::string& key) const;

    const std::string& get(const std::string& key) const;  // throws if missing
    std::string get_or(const std::string& key, const std::string& fallback) const;

    int64_t get_int(const std::string& key) const;
    int64_t get_int_or(const std::string& key, int64_t fallback) const;
    uint64_t get_uint(const std::string& key) const;
    uint64_t get_uint_or(const std::string& key, uint64_t fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value);
    void set_int(const std::string& key, int64_t value);
    void set_uint(const std::string& key, uint64_t value);
    void set_double(const std::string& key, double value);

    // throws listing every key not in `allowed` (schema_version is always allowed)
    void require_keys_in(const std::vector<std::string>& allowed) const;

    int schema_version() const;  // throws if the key is absent

    std::string serialize() const;
    void save(const std::string& path) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;  // insertion-ordered
};

}  // namespace irsr
