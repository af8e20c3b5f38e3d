#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "honeypot/profile.hpp"

namespace honeypot::cli {

/// Bad value in a flag or config file; reported like a usage error.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameters of one subcommand, resolved as flag > config file > profile default.
class Settings {
public:
    using Default = std::function<std::string(const Profile&)>;

    explicit Settings(CLI::App* command) : command_(command) {}

    void option(const std::string& key, const std::string& help, Default fallback);
    void flag(const std::string& key, const std::string& help);

    /// Applies the config file and profile after CLI parsing.
    void resolve(const std::string& config_path, const std::string& profile_flag);

    const Profile& profile() const { return profile_; }
    std::string str(const std::string& key) const;
    double num(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    std::uint64_t u64(const std::string& key) const;
    bool on(const std::string& key) const;
    bool has(const std::string& key) const { return !str(key).empty(); }

    /// One `key = value  # source` line per parameter.
    void print(std::ostream& out) const;

private:
    struct Entry {
        std::string key;
        bool is_flag = false;
        Default fallback;
        std::string raw;
        bool flag_value = false;
        CLI::Option* opt = nullptr;
        std::string value;
        std::string source;
    };

    const Entry& entry(const std::string& key) const;

    CLI::App* command_;
    std::deque<Entry> entries_;  // stable addresses: CLI11 binds to members
    Profile profile_ = full_profile();
    std::string profile_source_;
    std::string config_path_;
};

}  // namespace honeypot::cli
