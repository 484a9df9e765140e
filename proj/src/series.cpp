#include "pdm/series.hpp"

#include <fmt/format.h>

#include <cmath>

#include "pdm/error.hpp"
#include "pdm/io.hpp"

namespace pdm {

std::vector<std::size_t> SensorSeries::anomaly_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < is_anomaly.size(); ++i)
        if (is_anomaly[i]) out.push_back(i);
    return out;
}

std::string SensorSeries::to_csv() const {
    std::string out = "timestamp,value,is_anomaly\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        out += fmt::format("{},{},{}\n", timestamps.at(i), io::format_double(values[i]),
                           !is_anomaly.empty() && is_anomaly[i] ? 1 : 0);
    return out;
}

SensorSeries SensorSeries::from_csv(const std::filesystem::path& path) {
    auto table = io::read_csv(path);
    const auto ct = table.column("timestamp");
    const auto cv = table.column("value");
    const auto ca = table.column("is_anomaly");
    SensorSeries s;
    s.timestamps.reserve(table.rows.size());
    s.values.reserve(table.rows.size());
    s.is_anomaly.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        s.timestamps.push_back(io::parse_int(row[ct], "timestamp"));
        s.values.push_back(io::parse_double(row[cv], "value"));
        s.is_anomaly.push_back(io::parse_int(row[ca], "is_anomaly") != 0);
    }
    return s;
}

std::size_t train_length(std::size_t n, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidInput(fmt::format("train fraction must lie in (0, 1), got {}", train_fraction));
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
}

}  // namespace pdm
