#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pdm/matrix.hpp"

namespace pdm {

/// Timestamped scalar stream from one sensor.
struct SensorSeries {
    std::string sensor_type;
    std::string device;
    std::vector<std::int64_t> timestamps;  // minutes since deployment start
    Vector values;
    std::vector<bool> is_anomaly;          // ground truth, empty when unknown

    std::size_t size() const { return values.size(); }
    std::vector<std::size_t> anomaly_indices() const;

    /// Delimited text: header "timestamp,value,is_anomaly".
    std::string to_csv() const;
    static SensorSeries from_csv(const std::filesystem::path& path);
};

/// floor(n * train_fraction); throws InvalidInput unless 0 < fraction < 1.
std::size_t train_length(std::size_t n, double train_fraction);

}  // namespace pdm
