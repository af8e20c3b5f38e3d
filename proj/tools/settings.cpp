#include "settings.hpp"

#include <charconv>

#include "honeypot/keyvalue.hpp"

namespace honeypot::cli {

void Settings::option(const std::string& key, const std::string& help, Default fallback) {
    auto& e = entries_.emplace_back();
    e.key = key;
    e.fallback = std::move(fallback);
    e.opt = command_->add_option("--" + key, e.raw, help);
}

void Settings::flag(const std::string& key, const std::string& help) {
    auto& e = entries_.emplace_back();
    e.key = key;
    e.is_flag = true;
    e.opt = command_->add_flag("--" + key, e.flag_value, help);
}

void Settings::resolve(const std::string& config_path, const std::string& profile_flag) {
    KeyValueFile file;
    if (!config_path.empty()) {
        try {
            file = KeyValueFile::load(config_path);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        config_path_ = config_path;
    }
    std::string profile_name = "full";
    profile_source_ = "default";
    if (!profile_flag.empty()) {
        profile_name = profile_flag;
        profile_source_ = "flag";
    } else if (file.contains("profile")) {
        profile_name = file.get("profile");
        profile_source_ = "config";
    }
    try {
        profile_ = profile_by_name(profile_name);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    for (auto& e : entries_) {
        if (e.opt && e.opt->count() > 0) {
            e.value = e.is_flag ? (e.flag_value ? "true" : "false") : e.raw;
            e.source = "flag";
        } else if (file.contains(e.key)) {
            e.value = file.get(e.key);
            e.source = "config";
        } else {
            e.value = e.is_flag ? "false" : (e.fallback ? e.fallback(profile_) : "");
            e.source = "default";
        }
    }
}

const Settings::Entry& Settings::entry(const std::string& key) const {
    for (const auto& e : entries_) {
        if (e.key == key) return e;
    }
    throw std::logic_error("undeclared setting " + key);
}

std::string Settings::str(const std::string& key) const { return entry(key).value; }

double Settings::num(const std::string& key) const {
    const auto& v = entry(key).value;
    try {
        return parse_double(v);
    } catch (const std::exception&) {
        throw UsageError("--" + key + ": expected a number, got '" + v + "'");
    }
}

std::uint64_t Settings::u64(const std::string& key) const {
    const auto& v = entry(key).value;
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw UsageError("--" + key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

std::size_t Settings::count(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

bool Settings::on(const std::string& key) const {
    const auto& v = entry(key).value;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
    throw UsageError("--" + key + ": expected a boolean, got '" + v + "'");
}

void Settings::print(std::ostream& out) const {
    out << "# " << command_->get_name() << " configuration\n";
    out << "profile = " << profile_.name << "  # " << profile_source_ << '\n';
    if (!config_path_.empty()) out << "config = " << config_path_ << '\n';
    for (const auto& e : entries_) out << e.key << " = " << e.value << "  # " << e.source << '\n';
}

}  // namespace honeypot::cli
