#pragma once

// Self-describing flat-file envelope shared by every persisted model.
//
// Layout:
//   PDMA <format-version>\n
//   kind <type-tag>\n
//   meta <key> <value...>\n          (zero or more, sorted by key)
//   array <name> <rows> <cols>\n     (zero or more, in payload order)
//   end\n
//   <payload: every array row-major, little-endian IEEE-754 binary64>
//
// Values are written with the shortest round-trip representation, and the
// binary payload makes load(save(a)) bit-exact.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pdm/matrix.hpp"

namespace pdm {

inline constexpr int kArtifactFormatVersion = 1;

struct ArtifactArray {
    std::string name;
    Matrix values;

    friend bool operator==(const ArtifactArray&, const ArtifactArray&) = default;
};

class ModelArtifact {
public:
    ModelArtifact() = default;
    explicit ModelArtifact(std::string kind) : kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

    void set(const std::string& key, std::string value);
    void set(const std::string& key, double value);
    void set(const std::string& key, std::int64_t value);
    void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
    void set(const std::string& key, std::size_t value) { set(key, static_cast<std::int64_t>(value)); }

    bool has(const std::string& key) const { return meta_.contains(key); }
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    const std::map<std::string, std::string>& metadata() const { return meta_; }

    void add_array(std::string name, Matrix values);
    void add_vector(std::string name, const Vector& values);
    const Matrix& array(const std::string& name) const;
    Vector vector(const std::string& name) const;
    const std::vector<ArtifactArray>& arrays() const { return arrays_; }

    /// Throws InvalidInput unless kind() == expected.
    void expect_kind(std::string_view expected) const;

    std::string serialize() const;
    static ModelArtifact deserialize(std::string_view bytes);

    void save(const std::filesystem::path& path) const;
    static ModelArtifact load(const std::filesystem::path& path);

    /// FNV-1a 64 over the serialized payload arrays only (weights, not metadata).
    std::uint64_t weight_hash() const;

    friend bool operator==(const ModelArtifact&, const ModelArtifact&) = default;

private:
    std::string kind_;
    std::map<std::string, std::string> meta_;
    std::vector<ArtifactArray> arrays_;
};

}  // namespace pdm
