#include "pdm/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pdm/error.hpp"
#include "pdm/io.hpp"
#include "pdm/random.hpp"
#include "pdm/window.hpp"

namespace pdm::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

std::string to_string(FarmSensorType t) {
    switch (t) {
        case FarmSensorType::Temperature: return "Temperature";
        case FarmSensorType::Humidity: return "Humidity";
        case FarmSensorType::SoilConductivity: return "SoilConductivity";
        case FarmSensorType::SoilDielectric: return "SoilDielectric";
        case FarmSensorType::SoilTemperature: return "SoilTemperature";
        case FarmSensorType::WaterNitrate: return "WaterNitrate";
        case FarmSensorType::SoilNitrate: return "SoilNitrate";
    }
    return "?";
}

FarmSensorType parse_farm_sensor_type(std::string_view text) {
    for (auto t : kFarmSensorTypes)
        if (text == to_string(t)) return t;
    throw InvalidInput(fmt::format("unknown farm sensor type '{}'", text));
}

void FarmProfile::validate() const {
    if (!std::isfinite(base) || !std::isfinite(amplitude) || !std::isfinite(trend_per_day))
        throw InvalidInput("farm profile: base, amplitude and trend must be finite");
    if (!(noise_sigma >= 0.0) || !(drift_sigma >= 0.0))
        throw InvalidInput("farm profile: noise parameters must be nonnegative");
    if (!(std::abs(drift_phi) < 1.0)) throw InvalidInput("farm profile: drift_phi must lie in (-1, 1)");
    if (!(band >= 0.0)) throw InvalidInput("farm profile: band must be nonnegative");
    if (band > 0.0 && !(rise_samples >= 1.0 && fall_min >= 1.0 && fall_max >= fall_min))
        throw InvalidInput("farm profile: need rise_samples >= 1 and 1 <= fall_min <= fall_max");
}

FarmProfile default_profile(FarmSensorType t) {
    switch (t) {
        case FarmSensorType::Temperature:
            return {.base = 24.0, .amplitude = 1.5, .trend_per_day = 0.02, .noise_sigma = 0.1, .drift_sigma = 0.1,
                    .drift_phi = 0.9, .band = 2.0, .rise_samples = 3.0, .fall_min = 15.0, .fall_max = 35.0};
        case FarmSensorType::Humidity:
            return {.base = 70.0, .amplitude = 4.0, .trend_per_day = -0.05, .noise_sigma = 0.4, .drift_sigma = 0.5,
                    .drift_phi = 0.9, .band = 6.0, .rise_samples = 4.0, .fall_min = 15.0, .fall_max = 35.0};
        case FarmSensorType::SoilConductivity:
            return {.base = 45.0, .amplitude = 2.0, .trend_per_day = 0.05, .noise_sigma = 0.15, .drift_sigma = 0.15,
                    .drift_phi = 0.9, .band = 3.0, .rise_samples = 3.0, .fall_min = 20.0, .fall_max = 40.0};
        case FarmSensorType::SoilDielectric:
            return {.base = 28.0, .amplitude = 1.0, .trend_per_day = -0.03, .noise_sigma = 0.1, .drift_sigma = 0.1,
                    .drift_phi = 0.9, .band = 2.5, .rise_samples = 2.0, .fall_min = 15.0, .fall_max = 35.0};
        case FarmSensorType::SoilTemperature:
            return {.base = 18.0, .amplitude = 1.0, .trend_per_day = 0.02, .noise_sigma = 0.05, .drift_sigma = 0.05,
                    .drift_phi = 0.9, .band = 1.2, .rise_samples = 4.0, .fall_min = 20.0, .fall_max = 40.0};
        case FarmSensorType::WaterNitrate:
            return {.base = 12.0, .amplitude = 0.3, .trend_per_day = 0.01, .noise_sigma = 0.03, .drift_sigma = 0.8,
                    .drift_phi = 0.998, .band = 0.0};
        case FarmSensorType::SoilNitrate:
            return {.base = 30.0, .amplitude = 1.5, .trend_per_day = -0.03, .noise_sigma = 0.1, .drift_sigma = 0.1,
                    .drift_phi = 0.9, .band = 2.5, .rise_samples = 3.0, .fall_min = 15.0, .fall_max = 30.0};
    }
    return {};
}

std::string to_string(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::Spike: return "spike";
        case AnomalyKind::Drop: return "drop";
        case AnomalyKind::Stuck: return "stuck";
        case AnomalyKind::Mixed: return "mixed";
    }
    return "?";
}

AnomalyKind parse_anomaly_kind(std::string_view text) {
    for (auto k : {AnomalyKind::Spike, AnomalyKind::Drop, AnomalyKind::Stuck, AnomalyKind::Mixed})
        if (text == to_string(k)) return k;
    throw InvalidInput(fmt::format("unknown anomaly kind '{}'", text));
}

void AnomalyInjection::validate() const {
    if (!(magnitude > 0.0) || !std::isfinite(magnitude)) throw InvalidInput("anomaly magnitude must be positive");
    if (!(region_start > 0.0 && region_start < 1.0)) throw InvalidInput("anomaly region_start must lie in (0, 1)");
    if (stuck_length < 1) throw InvalidInput("stuck_length must be at least 1");
}

FarmSpec FarmSpec::defaults(FarmSensorType t, std::uint64_t seed) {
    FarmSpec s;
    s.sensor_type = t;
    s.profile = default_profile(t);
    s.seed = seed;
    return s;
}

namespace {

void inject(SensorSeries& s, const AnomalyInjection& inj, std::uint64_t seed) {
    const std::size_t n = s.size();
    const std::size_t first = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(n * inj.region_start)));
    const std::size_t region = n - first;
    if (inj.count > region)
        throw InvalidInput(fmt::format("{} anomalies do not fit in a {}-sample injection region", inj.count, region));

    Rng rng(seed);
    const std::size_t slot = region / inj.count;
    for (std::size_t a = 0; a < inj.count; ++a) {
        AnomalyKind kind = inj.kind;
        if (kind == AnomalyKind::Mixed) kind = std::array{AnomalyKind::Spike, AnomalyKind::Drop, AnomalyKind::Stuck}[a % 3];
        const std::size_t extent = kind == AnomalyKind::Stuck ? inj.stuck_length : 1;

        const std::size_t lo = first + a * slot;
        std::size_t pos;
        const std::size_t margin = (inj.min_separation + 1) / 2;
        if (slot > 2 * margin + extent) {
            pos = lo + margin + rng.index(slot - 2 * margin - extent + 1);
        } else {
            pos = lo + (slot > extent ? (slot - extent) / 2 : 0);
            rng.next();
        }

        switch (kind) {
            case AnomalyKind::Spike: s.values[pos] *= 1.0 + inj.magnitude; break;
            case AnomalyKind::Drop: s.values[pos] *= 1.0 - inj.magnitude; break;
            default: break;
        }
        if (kind == AnomalyKind::Stuck) {
            const double held = s.values[pos - 1];
            for (std::size_t k = pos; k < std::min(n, pos + extent); ++k) {
                s.values[k] = held;
                s.is_anomaly[k] = true;
            }
        } else {
            s.is_anomaly[pos] = true;
        }
    }
}

}  // namespace

SensorSeries gen_farm(const FarmSpec& spec) {
    spec.profile.validate();
    spec.anomalies.validate();
    if (spec.duration_days < 2) throw InvalidInput("farm series need at least 2 days");
    const auto& p = spec.profile;
    const std::size_t n = spec.duration_days * kSamplesPerDay;

    SensorSeries s;
    s.sensor_type = to_string(spec.sensor_type);
    s.device = spec.device;
    s.timestamps.resize(n);
    s.values.resize(n);
    s.is_anomaly.assign(n, false);

    Rng rng(derive_seed(spec.seed, {0}));
    Rng cycles(derive_seed(spec.seed, {2}));
    const double phase = rng.uniform(0.0, kTwoPi);
    const double innovation = p.drift_sigma * std::sqrt(1.0 - p.drift_phi * p.drift_phi);
    const double rise = p.band > 0.0 ? 2.0 * p.band / p.rise_samples : 0.0;
    auto draw_fall = [&] { return p.band > 0.0 ? 2.0 * p.band / cycles.uniform(p.fall_min, p.fall_max) : 0.0; };
    double fall = draw_fall();
    bool rising = false;
    double regulation = 0.0;
    double drift = p.drift_sigma * rng.normal();
    for (std::size_t k = 0; k < n; ++k) {
        // The daily position is taken modulo the day so noiseless series repeat exactly.
        const double daily = p.amplitude * std::sin(kTwoPi * static_cast<double>(k % kSamplesPerDay) / kSamplesPerDay + phase);
        const double days = static_cast<double>(k) / kSamplesPerDay;
        double level = daily + p.trend_per_day * days;
        if (p.band > 0.0) {
            regulation += rising ? rise : -fall;
            if (rising && level + regulation >= p.band) {
                rising = false;
                fall = draw_fall();
            } else if (!rising && level + regulation <= -p.band) {
                rising = true;
            }
            level += regulation;
        }
        drift = p.drift_phi * drift + innovation * rng.normal();
        const double white = p.noise_sigma * rng.normal();
        s.timestamps[k] = static_cast<std::int64_t>(k) * kFarmCadenceMinutes;
        s.values[k] = p.base + level + drift + white;
    }
    if (spec.anomalies.count > 0) inject(s, spec.anomalies, derive_seed(spec.seed, {1}));
    return s;
}

// ---- motor ----

void MotorSpec::validate() const {
    if (rpm_list.empty()) throw InvalidInput("motor spec: empty rpm list");
    for (int rpm : rpm_list) {
        if (rpm <= 0) throw InvalidInput(fmt::format("motor spec: rpm {} must be positive", rpm));
        if (!allow_any_rpm && std::find(kStudyRpms.begin(), kStudyRpms.end(), rpm) == kStudyRpms.end())
            throw InvalidInput(fmt::format("motor spec: rpm {} is not a testbed speed (set allow_any_rpm to override)", rpm));
    }
    if (!(recording_seconds > 0.0)) throw InvalidInput("motor spec: recording_seconds must be positive");
    if (recordings_per_condition < 1) throw InvalidInput("motor spec: need at least one recording per condition");
    if (!(health_scales[0] > 0.0 && health_scales[0] < health_scales[1] && health_scales[1] < health_scales[2]))
        throw InvalidInput("motor spec: health scales must be positive and strictly increasing");
    if (!(noise_sigma >= 0.0) || !(amplitude_jitter >= 0.0) || !std::isfinite(harmonic_ratio) ||
        !std::isfinite(rpm_exponent))
        throw InvalidInput("motor spec: invalid noise or shape parameter");
    if (samples_per_recording() < 1) throw InvalidInput("motor spec: recording shorter than one sample");
}

std::size_t MotorSpec::samples_per_recording() const {
    return static_cast<std::size_t>(std::llround(recording_seconds * sample_rate(sensor_kind)));
}

RawRecording gen_recording(const MotorSpec& spec, int rpm, Health health, std::size_t index) {
    RawRecording r;
    r.rpm = rpm;
    r.health = health;
    r.kind = spec.sensor_kind;
    r.index = index;
    r.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(rpm), static_cast<std::uint64_t>(health), index});

    Rng shape(r.seed);
    const double phase = shape.uniform(0.0, kTwoPi);
    const double jitter = std::max(0.0, 1.0 + spec.amplitude_jitter * shape.normal());
    const double amp = spec.health_scales[static_cast<int>(health)] * std::pow(rpm / 300.0, spec.rpm_exponent) * jitter;
    const double omega = kTwoPi * rpm / 60.0;
    const double rate = sample_rate(spec.sensor_kind);

    Rng noise(derive_seed(r.seed, {spec.sensor_kind == SensorKind::Piezo ? 1u : 2u}));
    const std::size_t n = spec.samples_per_recording();
    r.x.resize(n);
    r.y.resize(n);
    r.z.resize(n);
    const double h = spec.harmonic_ratio;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / rate;
        const double th = omega * t + phase;
        const double tz = th + 0.5 * std::numbers::pi;
        r.x[k] = amp * (std::sin(th) + h * std::sin(2.0 * th)) + spec.noise_sigma * noise.normal();
        r.y[k] = spec.noise_sigma * noise.normal();
        r.z[k] = amp * (std::sin(tz) + h * std::sin(2.0 * tz)) + spec.noise_sigma * noise.normal();
    }
    return r;
}

std::vector<RawRecording> gen_motor(const MotorSpec& spec) {
    spec.validate();
    std::vector<RawRecording> out;
    out.reserve(spec.rpm_list.size() * kHealthStates.size() * spec.recordings_per_condition);
    for (int rpm : spec.rpm_list)
        for (auto h : kHealthStates)
            for (std::size_t i = 0; i < spec.recordings_per_condition; ++i) out.push_back(gen_recording(spec, rpm, h, i));
    return out;
}

// ---- bundle ----

BundleSpec BundleSpec::defaults() {
    BundleSpec b;
    for (std::size_t i = 0; i < kFarmSensorTypes.size(); ++i) b.profiles[i] = default_profile(kFarmSensorTypes[i]);
    return b;
}

std::string farm_file_name(const SensorSeries& s) { return fmt::format("farm/{}/{}.csv", s.device, s.sensor_type); }

std::string motor_file_name(const RawRecording& r) {
    return fmt::format("motor/{}/rpm{}_{}_{:03}.csv", to_string(r.kind), r.rpm, to_string(r.health), r.index);
}

DatasetBundle dataset_bundle(std::uint64_t seed, const BundleSpec& spec) {
    if (spec.devices < 1) throw InvalidInput("bundle needs at least one farm device");
    DatasetBundle b;
    b.seed = seed;

    std::string files;
    for (std::size_t ti = 0; ti < kFarmSensorTypes.size(); ++ti) {
        for (std::size_t d = 1; d <= spec.devices; ++d) {
            FarmSpec fs;
            fs.sensor_type = kFarmSensorTypes[ti];
            fs.device = fmt::format("device{}", d);
            fs.duration_days = spec.farm_days;
            fs.profile = spec.profiles[ti];
            fs.anomalies = spec.farm_anomalies;
            fs.seed = derive_seed(seed, {100, ti, d});
            auto s = gen_farm(fs);
            const auto train = train_length(s.size(), spec.farm_train_fraction);
            files += fmt::format("file {} kind=farm sensor={} device={} samples={} train={} test={} anomalies={} seed={}\n",
                                 farm_file_name(s), s.sensor_type, s.device, s.size(), train, s.size() - train,
                                 s.anomaly_indices().size(), fs.seed);
            b.farm.push_back(std::move(s));
        }
    }

    const std::uint64_t motor_seed = derive_seed(seed, {200});
    std::size_t window_totals[2] = {0, 0};
    auto emit_motor = [&](MotorSpec ms, std::size_t window_len, std::vector<RawRecording>& dst, std::size_t slot) {
        ms.seed = motor_seed;
        dst = gen_motor(ms);
        const WindowSpec ws{window_len, window_len};
        for (const auto& r : dst) {
            const auto train = train_length(r.size(), spec.motor_train_fraction);
            const auto windows = ws.count(r.size());
            window_totals[slot] += windows;
            files += fmt::format("file {} kind={} rpm={} health={} index={} samples={} train={} test={} windows={} seed={}\n",
                                 motor_file_name(r), to_string(r.kind), r.rpm, to_string(r.health), r.index, r.size(),
                                 train, r.size() - train, windows, r.seed);
        }
    };
    emit_motor(spec.mems, spec.mems_window, b.mems, 0);
    emit_motor(spec.piezo, spec.piezo_window, b.piezo, 1);

    b.manifest = fmt::format(
        "# pdm dataset bundle\n"
        "seed {}\n"
        "farm_series {}\n"
        "farm_days {}\n"
        "farm_train_fraction {}\n"
        "mems_recordings {}\n"
        "mems_window {}\n"
        "mems_windows {}\n"
        "piezo_recordings {}\n"
        "piezo_window {}\n"
        "piezo_windows {}\n"
        "motor_train_fraction {}\n",
        seed, b.farm.size(), spec.farm_days, io::format_double(spec.farm_train_fraction), b.mems.size(),
        spec.mems_window, window_totals[0], b.piezo.size(), spec.piezo_window, window_totals[1],
        io::format_double(spec.motor_train_fraction));
    b.manifest += files;
    return b;
}

void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir) {
    for (const auto& s : bundle.farm) io::write_atomic(dir / farm_file_name(s), s.to_csv());
    for (const auto* group : {&bundle.mems, &bundle.piezo})
        for (const auto& r : *group) io::write_atomic(dir / motor_file_name(r), r.to_csv());
    io::write_atomic(dir / "manifest.txt", bundle.manifest);
}

}  // namespace pdm::sim
