#pragma once
// Run configuration: INI-style sections of flat keys with a fixed key set.
// Files and command-line overrides may only touch keys that have a default.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pdm/simulator.hpp"

namespace pdm::config {

class Config {
public:
    Config() = default;
    /// Known keys ("section.key") with their default values, in echo order.
    explicit Config(std::vector<std::pair<std::string, std::string>> defaults);

    bool has(const std::string& key) const;
    /// Throws ConfigError for keys without a default.
    void set(const std::string& key, std::string value);
    /// Applies every key of an INI file; unknown sections or keys are rejected.
    void merge_file(const std::filesystem::path& path);
    /// "section.key=value"
    void apply_override(const std::string& assignment);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    /// Comma-separated list; empty value gives an empty list.
    std::vector<std::string> get_list(const std::string& key) const;

    /// Runs `parse` on the key's value and turns any library error into a
    /// ConfigError that names the key.
    template <typename F>
    auto parse(const std::string& key, F&& parse_fn) const -> decltype(parse_fn(std::string{}));

    /// Every key with its resolved value, grouped by section.
    std::string to_ini() const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::size_t index_of(const std::string& key) const;
    [[noreturn]] void fail(const std::string& key, const std::string& why) const;
};

/// Profiles for all seven farm sensor types. Sections are type names; every
/// key is optional and falls back to the built-in profile.
std::array<sim::FarmProfile, 7> load_farm_profiles(const std::filesystem::path& path);
std::string farm_profiles_ini(const std::array<sim::FarmProfile, 7>& profiles);

template <typename F>
auto Config::parse(const std::string& key, F&& parse_fn) const -> decltype(parse_fn(std::string{})) {
    try {
        return parse_fn(get(key));
    } catch (const std::exception& e) {
        fail(key, e.what());
    }
}

}  // namespace pdm::config
