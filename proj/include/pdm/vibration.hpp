#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "pdm/matrix.hpp"

namespace pdm {

enum class SensorKind { Piezo, Mems };
/// NotNormal only appears after collapsing the two fault states into one.
enum class Health : int { Normal = 0, NearFailure = 1, Failure = 2, NotNormal = 3 };
enum class Axis { X, Y, Z };

inline constexpr std::array<Health, 3> kHealthStates{Health::Normal, Health::NearFailure, Health::Failure};

/// Samples per second: 3200 for piezo, 10 for MEMS.
double sample_rate(SensorKind kind);

std::string to_string(SensorKind kind);
std::string to_string(Health health);
std::string to_string(Axis axis);
SensorKind parse_sensor_kind(std::string_view text);
Health parse_health(std::string_view text);
Axis parse_axis(std::string_view text);

/// One motor recording: three axes sampled at the sensor's rate.
struct RawRecording {
    int rpm = 0;
    Health health = Health::Normal;
    SensorKind kind = SensorKind::Mems;
    std::size_t index = 0;
    std::uint64_t seed = 0;
    Vector x, y, z;

    std::size_t size() const { return x.size(); }
    const Vector& axis(Axis a) const;
    /// Header "t,x,y,z", t in seconds.
    std::string to_csv() const;

    friend bool operator==(const RawRecording&, const RawRecording&) = default;
};

}  // namespace pdm
