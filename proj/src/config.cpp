#include "pdm/config.hpp"

#include <fmt/format.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pdm/error.hpp"
#include "pdm/io.hpp"

namespace pdm::config {

namespace pt = boost::property_tree;

Config::Config(std::vector<std::pair<std::string, std::string>> defaults) : entries_(std::move(defaults)) {}

std::size_t Config::index_of(const std::string& key) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].first == key) return i;
    return entries_.size();
}

void Config::fail(const std::string& key, const std::string& why) const {
    throw ConfigError(fmt::format("config key '{}': {}", key, why));
}

bool Config::has(const std::string& key) const { return index_of(key) < entries_.size(); }

void Config::set(const std::string& key, std::string value) {
    const auto i = index_of(key);
    if (i == entries_.size()) fail(key, "unknown key");
    entries_[i].second = std::move(value);
}

void Config::merge_file(const std::filesystem::path& path) {
    pt::ptree tree;
    try {
        pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("cannot read config {}: {}", path.string(), e.message()));
    }
    for (const auto& [section, body] : tree) {
        if (body.empty())
            throw ConfigError(fmt::format("config {}: key '{}' is outside any section", path.string(), section));
        for (const auto& [key, value] : body) {
            const auto full = section + "." + key;
            if (!has(full)) throw ConfigError(fmt::format("config {}: unknown key '{}'", path.string(), full));
            set(full, value.data());
        }
    }
}

void Config::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError(fmt::format("override '{}' is not of the form section.key=value", assignment));
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

const std::string& Config::get(const std::string& key) const {
    const auto i = index_of(key);
    if (i == entries_.size()) fail(key, "unknown key");
    return entries_[i].second;
}

double Config::get_double(const std::string& key) const {
    return parse(key, [&](const std::string& v) { return io::parse_double(v, key); });
}

long long Config::get_int(const std::string& key) const {
    return parse(key, [&](const std::string& v) { return io::parse_int(v, key); });
}

std::size_t Config::get_size(const std::string& key) const {
    const auto v = get_int(key);
    if (v < 0) fail(key, "must be nonnegative");
    return static_cast<std::size_t>(v);
}

std::uint64_t Config::get_u64(const std::string& key) const {
    return parse(key, [&](const std::string& v) {
        std::size_t used = 0;
        const auto out = std::stoull(v, &used);
        if (used != v.size() || v.starts_with('-')) throw InvalidInput("not an unsigned integer");
        return static_cast<std::uint64_t>(out);
    });
}

bool Config::get_bool(const std::string& key) const {
    const auto& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(key, fmt::format("'{}' is not a boolean", v));
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    const auto& v = get(key);
    if (v.empty()) return {};
    auto parts = io::split(v, ',');
    for (auto& p : parts) {
        const auto b = p.find_first_not_of(' ');
        const auto e = p.find_last_not_of(' ');
        p = b == std::string::npos ? std::string{} : p.substr(b, e - b + 1);
        if (p.empty()) fail(key, "empty list element");
    }
    return parts;
}

std::string Config::to_ini() const {
    std::string out, current;
    for (const auto& [key, value] : entries_) {
        const auto dot = key.find('.');
        const auto section = key.substr(0, dot);
        if (section != current) {
            out += fmt::format("{}[{}]\n", out.empty() ? "" : "\n", section);
            current = section;
        }
        out += fmt::format("{} = {}\n", key.substr(dot + 1), value);
    }
    return out;
}

namespace {

struct ProfileField {
    const char* name;
    double sim::FarmProfile::*member;
};

constexpr ProfileField kProfileFields[] = {
    {"base", &sim::FarmProfile::base},
    {"amplitude", &sim::FarmProfile::amplitude},
    {"trend_per_day", &sim::FarmProfile::trend_per_day},
    {"noise_sigma", &sim::FarmProfile::noise_sigma},
    {"drift_sigma", &sim::FarmProfile::drift_sigma},
    {"drift_phi", &sim::FarmProfile::drift_phi},
    {"band", &sim::FarmProfile::band},
    {"rise_samples", &sim::FarmProfile::rise_samples},
    {"fall_min", &sim::FarmProfile::fall_min},
    {"fall_max", &sim::FarmProfile::fall_max},
};

}  // namespace

std::array<sim::FarmProfile, 7> load_farm_profiles(const std::filesystem::path& path) {
    std::vector<std::pair<std::string, std::string>> defaults;
    for (auto t : sim::kFarmSensorTypes) {
        const auto p = sim::default_profile(t);
        for (const auto& f : kProfileFields)
            defaults.emplace_back(fmt::format("{}.{}", sim::to_string(t), f.name), io::format_double(p.*f.member));
    }
    Config cfg(std::move(defaults));
    cfg.merge_file(path);

    std::array<sim::FarmProfile, 7> out{};
    for (std::size_t i = 0; i < sim::kFarmSensorTypes.size(); ++i) {
        const auto name = sim::to_string(sim::kFarmSensorTypes[i]);
        for (const auto& f : kProfileFields) out[i].*f.member = cfg.get_double(fmt::format("{}.{}", name, f.name));
        try {
            out[i].validate();
        } catch (const InvalidInput& e) {
            throw ConfigError(fmt::format("config {} section [{}]: {}", path.string(), name, e.what()));
        }
    }
    return out;
}

std::string farm_profiles_ini(const std::array<sim::FarmProfile, 7>& profiles) {
    std::string out;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        out += fmt::format("{}[{}]\n", i ? "\n" : "", sim::to_string(sim::kFarmSensorTypes[i]));
        for (const auto& f : kProfileFields) out += fmt::format("{} = {}\n", f.name, io::format_double(profiles[i].*f.member));
    }
    return out;
}

}  // namespace pdm::config
