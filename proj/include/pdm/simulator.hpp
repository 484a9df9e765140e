#pragma once
// Synthetic stand-ins for the two deployments: slow farm sensor series with
// injected anomalies, and imbalance-driven motor vibration at two sampling rates.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdm/series.hpp"
#include "pdm/vibration.hpp"

namespace pdm::sim {

// ---- farm ---------------------------------------------------------------

enum class FarmSensorType {
    Temperature,
    Humidity,
    SoilConductivity,
    SoilDielectric,
    SoilTemperature,
    WaterNitrate,
    SoilNitrate,
};

inline constexpr std::array<FarmSensorType, 7> kFarmSensorTypes{
    FarmSensorType::Temperature,    FarmSensorType::Humidity,     FarmSensorType::SoilConductivity,
    FarmSensorType::SoilDielectric, FarmSensorType::SoilTemperature, FarmSensorType::WaterNitrate,
    FarmSensorType::SoilNitrate};

std::string to_string(FarmSensorType t);
FarmSensorType parse_farm_sensor_type(std::string_view text);

inline constexpr int kFarmCadenceMinutes = 15;
inline constexpr std::size_t kSamplesPerDay = 24 * 60 / kFarmCadenceMinutes;

/// base + amplitude * sin(2 pi t / day + phase) + trend + regulation + noise.
/// The regulation term models a level-triggered control loop (irrigation,
/// heating): once the clean signal falls to base - band it is driven up by
/// 2 band / rise_samples per sample until it reaches base + band, then decays
/// at 2 band / L per sample, L drawn uniformly in [fall_min, fall_max] for
/// each cycle. band = 0 disables it. Noise is white measurement noise plus an
/// AR(1) drift with the given stationary sigma and coefficient.
struct FarmProfile {
    double base = 0.0;
    double amplitude = 0.0;
    double trend_per_day = 0.0;
    double noise_sigma = 0.0;
    double drift_sigma = 0.0;
    double drift_phi = 0.0;
    double band = 0.0;
    double rise_samples = 3.0;
    double fall_min = 15.0;
    double fall_max = 35.0;

    void validate() const;
    friend bool operator==(const FarmProfile&, const FarmProfile&) = default;
};

FarmProfile default_profile(FarmSensorType t);

enum class AnomalyKind { Spike, Drop, Stuck, Mixed };
std::string to_string(AnomalyKind k);
AnomalyKind parse_anomaly_kind(std::string_view text);

/// Anomalies land in [region_start * n, n), at most one per equal slot of that
/// region and at least min_separation samples apart. A spike multiplies the
/// sample by (1 + magnitude), a drop by (1 - magnitude); stuck repeats the
/// preceding value for stuck_length samples. Mixed cycles spike, drop, stuck.
struct AnomalyInjection {
    std::size_t count = 0;
    double magnitude = 0.5;
    AnomalyKind kind = AnomalyKind::Spike;
    double region_start = 0.66;
    std::size_t min_separation = 24;
    std::size_t stuck_length = 8;

    void validate() const;
};

struct FarmSpec {
    FarmSensorType sensor_type = FarmSensorType::Temperature;
    std::string device = "device1";
    std::size_t duration_days = 30;
    FarmProfile profile;
    AnomalyInjection anomalies;
    std::uint64_t seed = 0;

    static FarmSpec defaults(FarmSensorType t, std::uint64_t seed);
};

/// duration_days * 96 samples at 15-minute cadence. The anomaly draw uses its
/// own stream, so the same spec with count = 0 yields the clean series.
SensorSeries gen_farm(const FarmSpec& spec);

// ---- motor --------------------------------------------------------------

inline constexpr std::array<int, 10> kStudyRpms{100, 200, 300, 320, 340, 360, 380, 400, 500, 600};
/// The RPM subset of the cross-speed grid (100..600 by 100).
inline constexpr std::array<int, 6> kGridRpms{100, 200, 300, 400, 500, 600};
/// The RPM subset of the binary relaxation experiment.
inline constexpr std::array<int, 5> kNarrowRpms{300, 320, 340, 360, 380};

/// x(t) = A [sin(wt + phi) + h sin(2(wt + phi))] and z(t) the same a quarter
/// turn later, w = 2 pi rpm / 60. A = health_scale * (rpm / 300)^rpm_exponent,
/// times a per-recording factor (1 + amplitude_jitter * N(0,1)) modelling
/// mounting variation. y(t) is noise only. Gaussian noise of noise_sigma is
/// added to every axis.
struct MotorSpec {
    std::vector<int> rpm_list{kStudyRpms.begin(), kStudyRpms.end()};
    SensorKind sensor_kind = SensorKind::Mems;
    std::size_t recordings_per_condition = 50;
    double recording_seconds = 10.0;
    std::array<double, 3> health_scales{1.0, 1.5, 2.2};
    double noise_sigma = 0.3;
    double harmonic_ratio = 0.3;
    double rpm_exponent = 0.5;
    double amplitude_jitter = 0.1;
    bool allow_any_rpm = false;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t samples_per_recording() const;
};

/// Recordings ordered by rpm (as listed), then health, then index. Each
/// recording's signal depends only on (seed, rpm, health, index), so piezo and
/// MEMS specs that differ only in sensor kind sample the same waveform.
std::vector<RawRecording> gen_motor(const MotorSpec& spec);

/// The single recording gen_motor would produce at that position.
RawRecording gen_recording(const MotorSpec& spec, int rpm, Health health, std::size_t index);

// ---- bundle -------------------------------------------------------------

struct BundleSpec {
    std::size_t devices = 5;
    std::size_t farm_days = 30;
    double farm_train_fraction = 0.66;
    AnomalyInjection farm_anomalies{.count = 5};
    std::array<FarmProfile, 7> profiles{};
    MotorSpec mems{.sensor_kind = SensorKind::Mems, .recordings_per_condition = 6};
    MotorSpec piezo{.sensor_kind = SensorKind::Piezo, .recordings_per_condition = 1, .recording_seconds = 1.0};
    double motor_train_fraction = 0.5;
    std::size_t mems_window = 10;
    std::size_t piezo_window = 320;

    static BundleSpec defaults();
};

struct DatasetBundle {
    std::uint64_t seed = 0;
    std::vector<SensorSeries> farm;
    std::vector<RawRecording> mems;
    std::vector<RawRecording> piezo;
    /// Key-value manifest text; lists every file write() emits.
    std::string manifest;
};

DatasetBundle dataset_bundle(std::uint64_t seed, const BundleSpec& spec = BundleSpec::defaults());

/// Relative file name of a farm series / motor recording inside a bundle directory.
std::string farm_file_name(const SensorSeries& s);
std::string motor_file_name(const RawRecording& r);

/// Writes farm/, motor/ and manifest.txt under `dir` (each file atomically).
void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);

}  // namespace pdm::sim
