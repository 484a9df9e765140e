#include "pdm/vibration.hpp"

#include <fmt/format.h>

#include "pdm/error.hpp"
#include "pdm/io.hpp"

namespace pdm {

double sample_rate(SensorKind kind) { return kind == SensorKind::Piezo ? 3200.0 : 10.0; }

std::string to_string(SensorKind kind) { return kind == SensorKind::Piezo ? "piezo" : "mems"; }

std::string to_string(Health health) {
    switch (health) {
        case Health::Normal: return "Normal";
        case Health::NearFailure: return "NearFailure";
        case Health::Failure: return "Failure";
        case Health::NotNormal: return "NotNormal";
    }
    return "?";
}

std::string to_string(Axis axis) {
    switch (axis) {
        case Axis::X: return "X";
        case Axis::Y: return "Y";
        case Axis::Z: return "Z";
    }
    return "?";
}

SensorKind parse_sensor_kind(std::string_view text) {
    if (text == "piezo") return SensorKind::Piezo;
    if (text == "mems") return SensorKind::Mems;
    throw InvalidInput(fmt::format("unknown sensor kind '{}' (expected piezo or mems)", text));
}

Health parse_health(std::string_view text) {
    for (auto h : {Health::Normal, Health::NearFailure, Health::Failure, Health::NotNormal})
        if (text == to_string(h)) return h;
    throw InvalidInput(fmt::format("unknown health label '{}'", text));
}

Axis parse_axis(std::string_view text) {
    if (text == "X" || text == "x") return Axis::X;
    if (text == "Y" || text == "y") return Axis::Y;
    if (text == "Z" || text == "z") return Axis::Z;
    throw InvalidInput(fmt::format("unknown axis '{}'", text));
}

const Vector& RawRecording::axis(Axis a) const {
    switch (a) {
        case Axis::X: return x;
        case Axis::Y: return y;
        case Axis::Z: return z;
    }
    return x;
}

std::string RawRecording::to_csv() const {
    const double rate = sample_rate(kind);
    std::string out = "t,x,y,z\n";
    out.reserve(out.size() + x.size() * 64);
    for (std::size_t k = 0; k < x.size(); ++k)
        out += fmt::format("{},{},{},{}\n", io::format_double(static_cast<double>(k) / rate),
                           io::format_double(x[k]), io::format_double(y[k]), io::format_double(z[k]));
    return out;
}

}  // namespace pdm
