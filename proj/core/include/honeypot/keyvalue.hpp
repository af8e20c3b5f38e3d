#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace honeypot {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ordered `key = value` text document. '#' starts a comment; keys may repeat.
class KeyValueFile {
public:
    static KeyValueFile parse(std::string_view text);
    static KeyValueFile load(const std::filesystem::path& path);

    void add(std::string key, std::string value);
    bool contains(std::string_view key) const;

    /// Last value for `key`; throws ConfigError when absent.
    const std::string& get(std::string_view key) const;
    std::vector<std::string> get_all(std::string_view key) const;

    double get_double(std::string_view key) const;
    double get_double(std::string_view key, double fallback) const;
    long long get_int(std::string_view key) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    std::string format() const;
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

double parse_double(std::string_view text);

}  // namespace honeypot
