#include "pdm/artifact.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>

#include "pdm/error.hpp"
#include "pdm/io.hpp"

namespace pdm {

namespace {

constexpr std::string_view kMagic = "PDMA";

void append_le(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_le(const char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return std::bit_cast<double>(bits);
}

void check_token(std::string_view s, std::string_view what) {
    if (s.empty() || s.find_first_of(" \n\r\t") != std::string_view::npos)
        throw InvalidInput(fmt::format("artifact {} must be a non-empty token: '{}'", what, s));
}

}  // namespace

void ModelArtifact::set(const std::string& key, std::string value) {
    check_token(key, "key");
    if (value.find_first_of("\n\r") != std::string::npos)
        throw InvalidInput("artifact metadata value contains a newline: " + key);
    meta_[key] = std::move(value);
}

void ModelArtifact::set(const std::string& key, double value) { set(key, io::format_double(value)); }

void ModelArtifact::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }

const std::string& ModelArtifact::get(const std::string& key) const {
    auto it = meta_.find(key);
    if (it == meta_.end()) throw InvalidInput(fmt::format("artifact '{}' lacks metadata key '{}'", kind_, key));
    return it->second;
}

double ModelArtifact::get_double(const std::string& key) const { return io::parse_double(get(key), key); }

std::int64_t ModelArtifact::get_int(const std::string& key) const { return io::parse_int(get(key), key); }

void ModelArtifact::add_array(std::string name, Matrix values) {
    check_token(name, "array name");
    arrays_.push_back({std::move(name), std::move(values)});
}

void ModelArtifact::add_vector(std::string name, const Vector& values) {
    Matrix m(1, values.size());
    m.data = values;
    add_array(std::move(name), std::move(m));
}

const Matrix& ModelArtifact::array(const std::string& name) const {
    for (const auto& a : arrays_)
        if (a.name == name) return a.values;
    throw InvalidInput(fmt::format("artifact '{}' lacks array '{}'", kind_, name));
}

Vector ModelArtifact::vector(const std::string& name) const { return array(name).data; }

void ModelArtifact::expect_kind(std::string_view expected) const {
    if (kind_ != expected)
        throw InvalidInput(fmt::format("expected artifact of kind '{}', found '{}'", expected, kind_));
}

std::string ModelArtifact::serialize() const {
    check_token(kind_, "kind");
    std::string out = fmt::format("{} {}\nkind {}\n", kMagic, kArtifactFormatVersion, kind_);
    for (const auto& [k, v] : meta_) out += fmt::format("meta {} {}\n", k, v);
    for (const auto& a : arrays_) out += fmt::format("array {} {} {}\n", a.name, a.values.rows, a.values.cols);
    out += "end\n";
    for (const auto& a : arrays_)
        for (double v : a.values.data) append_le(out, v);
    return out;
}

ModelArtifact ModelArtifact::deserialize(std::string_view bytes) {
    std::size_t pos = 0;
    auto next_line = [&]() -> std::string_view {
        auto nl = bytes.find('\n', pos);
        if (nl == std::string_view::npos) throw InvalidInput("truncated artifact header");
        auto line = bytes.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };

    auto magic = next_line();
    if (magic.substr(0, kMagic.size()) != kMagic) throw InvalidInput("not an artifact file (bad magic)");
    auto version = io::parse_int(magic.substr(kMagic.size() + 1), "format version");
    if (version != kArtifactFormatVersion)
        throw InvalidInput(fmt::format("unsupported artifact format version {}", version));

    auto kind_line = next_line();
    if (kind_line.substr(0, 5) != "kind ") throw InvalidInput("artifact header lacks kind line");
    ModelArtifact art{std::string(kind_line.substr(5))};

    std::vector<std::tuple<std::string, std::size_t, std::size_t>> shapes;
    while (true) {
        auto line = next_line();
        if (line == "end") break;
        if (line.starts_with("meta ")) {
            auto rest = line.substr(5);
            auto sp = rest.find(' ');
            if (sp == std::string_view::npos) throw InvalidInput("malformed meta line");
            art.meta_[std::string(rest.substr(0, sp))] = std::string(rest.substr(sp + 1));
        } else if (line.starts_with("array ")) {
            auto parts = io::split(line.substr(6), ' ');
            if (parts.size() != 3) throw InvalidInput("malformed array line");
            shapes.emplace_back(parts[0], static_cast<std::size_t>(io::parse_int(parts[1], "rows")),
                                static_cast<std::size_t>(io::parse_int(parts[2], "cols")));
        } else {
            throw InvalidInput(fmt::format("unexpected artifact header line '{}'", line));
        }
    }

    for (auto& [name, rows, cols] : shapes) {
        Matrix m(rows, cols);
        const std::size_t nbytes = m.size() * 8;
        if (bytes.size() - pos < nbytes) throw InvalidInput("truncated artifact payload in array " + name);
        for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = read_le(bytes.data() + pos + 8 * i);
        pos += nbytes;
        art.arrays_.push_back({std::move(name), std::move(m)});
    }
    if (pos != bytes.size()) throw InvalidInput("trailing bytes after artifact payload");
    return art;
}

void ModelArtifact::save(const std::filesystem::path& path) const { io::write_atomic(path, serialize()); }

ModelArtifact ModelArtifact::load(const std::filesystem::path& path) { return deserialize(io::read_file(path)); }

std::uint64_t ModelArtifact::weight_hash() const {
    std::string payload;
    for (const auto& a : arrays_)
        for (double v : a.values.data) append_le(payload, v);
    return io::fnv1a(payload);
}

}  // namespace pdm
