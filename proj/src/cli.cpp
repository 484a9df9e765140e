#include "pdm/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <exception>
#include <map>
#include <optional>
#include <ostream>
#include <set>

#include "pdm/anomaly.hpp"
#include "pdm/classifier.hpp"
#include "pdm/error.hpp"
#include "pdm/features.hpp"
#include "pdm/io.hpp"
#include "pdm/random.hpp"
#include "pdm/series.hpp"
#include "pdm/simulator.hpp"

namespace pdm::cli {

namespace fs = std::filesystem;
using config::Config;

namespace {

std::string join_rpms(auto const& rpms) {
    std::string out;
    for (int r : rpms) out += (out.empty() ? "" : ",") + std::to_string(r);
    return out;
}

fs::path required_path(const Config& cfg, const std::string& key) {
    const auto& v = cfg.get(key);
    if (v.empty()) throw ConfigError(fmt::format("config key '{}': a path is required", key));
    return v;
}

std::vector<int> parse_rpms(const Config& cfg, const std::string& key) {
    std::vector<int> out;
    for (const auto& s : cfg.get_list(key))
        out.push_back(static_cast<int>(cfg.parse(key, [&](const std::string&) { return io::parse_int(s, key); })));
    return out;
}

void echo_config(const Config& cfg, const fs::path& out, const std::string& command) {
    io::write_atomic(out / (command + "_config.ini"), cfg.to_ini());
}

}  // namespace

// ---- defaults -------------------------------------------------------------

Config generate_defaults() {
    const sim::MotorSpec m;
    return Config({
        {"run.seed", "42"},
        {"paths.out", ""},
        {"paths.farm_profiles", ""},
        {"farm.devices", "5"},
        {"farm.days", "30"},
        {"farm.train_fraction", "0.66"},
        {"farm.anomaly_count", "5"},
        {"farm.anomaly_magnitude", "0.5"},
        {"farm.anomaly_kind", "spike"},
        {"motor.rpms", join_rpms(sim::kStudyRpms)},
        {"motor.train_fraction", "0.5"},
        {"motor.noise_sigma", io::format_double(m.noise_sigma)},
        {"motor.harmonic_ratio", io::format_double(m.harmonic_ratio)},
        {"motor.rpm_exponent", io::format_double(m.rpm_exponent)},
        {"motor.amplitude_jitter", io::format_double(m.amplitude_jitter)},
        {"motor.health_scales", "1,1.5,2.2"},
        {"mems.recordings", "6"},
        {"mems.seconds", "10"},
        {"mems.window", "10"},
        {"piezo.recordings", "1"},
        {"piezo.seconds", "1"},
        {"piezo.window", "320"},
    });
}

Config detect_defaults() {
    return Config({
        {"run.seed", "42"},
        {"paths.data", ""},
        {"paths.out", ""},
        {"detect.forecaster", "both"},
        {"detect.split", "0.66"},
        {"detect.threshold", "0.2"},
        {"detect.two_sided", "true"},
        {"detect.denominator_floor", "1e-06"},
        {"detect.sensor_types", ""},
        {"detect.devices", ""},
        {"arima.p", "10"},
        {"arima.d", "1"},
        {"arima.intercept", "true"},
        {"lstm.window", "10"},
        {"lstm.stride", "1"},
        {"lstm.hidden", "64"},
        {"lstm.epochs", "5"},
        {"lstm.batch", "8"},
        {"lstm.learning_rate", "0.05"},
    });
}

Config classify_defaults() {
    return Config({
        {"run.seed", "42"},
        {"paths.data", ""},
        {"paths.windows", ""},
        {"paths.out", ""},
        {"paths.transfer_from", ""},
        {"classify.sensor", "mems"},
        {"classify.rpms", ""},
        {"classify.preset", "baseline"},
        {"classify.axes", ""},
        {"classify.window", "0"},
        {"classify.stride", "0"},
        {"classify.decimate_to", "0"},
        {"classify.train_fraction", "0.7"},
        {"classify.binary", "false"},
        {"classify.augment", "0"},
        {"classify.grid", "false"},
        {"classify.grid_augment", "1000"},
        {"classify.epochs", "0"},
        {"classify.batch", "0"},
        {"classify.learning_rate", "0.01"},
        {"classify.fine_tune_epochs", "50"},
        {"classify.fine_tune_learning_rate", "0"},
    });
}

// ---- bundle reading -------------------------------------------------------

std::vector<ManifestEntry> read_manifest(const fs::path& bundle_dir) {
    const auto text = io::read_file(bundle_dir / "manifest.txt");
    std::vector<ManifestEntry> out;
    std::size_t line_no = 0;
    for (const auto& line : io::split(text, '\n')) {
        ++line_no;
        if (!line.starts_with("file ")) continue;
        const auto tokens = io::split(line, ' ');
        if (tokens.size() < 2) throw InvalidInput(fmt::format("manifest line {}: missing path", line_no));
        ManifestEntry e{tokens[1], {}};
        for (std::size_t i = 2; i < tokens.size(); ++i) {
            const auto eq = tokens[i].find('=');
            if (eq == std::string::npos)
                throw InvalidInput(fmt::format("manifest line {}: token '{}' is not key=value", line_no, tokens[i]));
            e.attrs[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
        }
        if (!e.attrs.contains("kind")) throw InvalidInput(fmt::format("manifest line {}: no kind", line_no));
        out.push_back(std::move(e));
    }
    return out;
}

RawRecording load_recording(const fs::path& bundle_dir, const ManifestEntry& entry) {
    const auto attr = [&](const char* key) -> const std::string& {
        const auto it = entry.attrs.find(key);
        if (it == entry.attrs.end()) throw InvalidInput(fmt::format("manifest entry {} lacks '{}'", entry.path, key));
        return it->second;
    };
    RawRecording r;
    r.kind = parse_sensor_kind(attr("kind"));
    r.rpm = static_cast<int>(io::parse_int(attr("rpm"), "rpm"));
    r.health = parse_health(attr("health"));
    r.index = static_cast<std::size_t>(io::parse_int(attr("index"), "index"));
    r.seed = static_cast<std::uint64_t>(std::stoull(attr("seed")));
    const auto path = bundle_dir / entry.path;
    const auto table = io::read_csv(path);
    const std::size_t cx = table.column("x"), cy = table.column("y"), cz = table.column("z");
    for (const auto& row : table.rows) {
        r.x.push_back(io::parse_double(row.at(cx), "x"));
        r.y.push_back(io::parse_double(row.at(cy), "y"));
        r.z.push_back(io::parse_double(row.at(cz), "z"));
    }
    return r;
}

// ---- generate -------------------------------------------------------------

void cmd_generate(const Config& cfg, std::ostream& log) {
    const auto out = required_path(cfg, "paths.out");
    const auto seed = cfg.get_u64("run.seed");

    auto spec = sim::BundleSpec::defaults();
    if (!cfg.get("paths.farm_profiles").empty()) spec.profiles = config::load_farm_profiles(cfg.get("paths.farm_profiles"));
    spec.devices = cfg.get_size("farm.devices");
    spec.farm_days = cfg.get_size("farm.days");
    spec.farm_train_fraction = cfg.get_double("farm.train_fraction");
    spec.farm_anomalies.count = cfg.get_size("farm.anomaly_count");
    spec.farm_anomalies.magnitude = cfg.get_double("farm.anomaly_magnitude");
    spec.farm_anomalies.kind = cfg.parse("farm.anomaly_kind", [](const std::string& v) { return sim::parse_anomaly_kind(v); });

    const auto rpms = parse_rpms(cfg, "motor.rpms");
    const auto scales = cfg.get_list("motor.health_scales");
    if (scales.size() != 3) throw ConfigError("config key 'motor.health_scales': expected three values");
    for (auto* m : {&spec.mems, &spec.piezo}) {
        m->rpm_list = rpms;
        m->noise_sigma = cfg.get_double("motor.noise_sigma");
        m->harmonic_ratio = cfg.get_double("motor.harmonic_ratio");
        m->rpm_exponent = cfg.get_double("motor.rpm_exponent");
        m->amplitude_jitter = cfg.get_double("motor.amplitude_jitter");
        for (std::size_t i = 0; i < 3; ++i)
            m->health_scales[i] = cfg.parse("motor.health_scales", [&](const std::string&) {
                return io::parse_double(scales[i], "health scale");
            });
    }
    spec.motor_train_fraction = cfg.get_double("motor.train_fraction");
    spec.mems.recordings_per_condition = cfg.get_size("mems.recordings");
    spec.mems.recording_seconds = cfg.get_double("mems.seconds");
    spec.mems_window = cfg.get_size("mems.window");
    spec.piezo.recordings_per_condition = cfg.get_size("piezo.recordings");
    spec.piezo.recording_seconds = cfg.get_double("piezo.seconds");
    spec.piezo_window = cfg.get_size("piezo.window");
    for (const auto* m : {&spec.mems, &spec.piezo}) {
        try {
            m->validate();
        } catch (const InvalidInput& e) {
            throw ConfigError(fmt::format("motor settings: {}", e.what()));
        }
    }

    const auto bundle = sim::dataset_bundle(seed, spec);
    sim::write_bundle(bundle, out);
    echo_config(cfg, out, "generate");
    log << fmt::format("generate: {} farm series, {} mems and {} piezo recordings written to {}\n", bundle.farm.size(),
                       bundle.mems.size(), bundle.piezo.size(), out.string());
    log << fmt::format("manifest hash {}\n", io::hex64(io::fnv1a(bundle.manifest)));
}

// ---- detect ---------------------------------------------------------------

namespace {

struct SeriesOutcome {
    std::string sensor;
    std::string device;
    std::string path;
    std::vector<std::int64_t> timestamps;
    std::map<std::string, anomaly::AnomalyReport> reports;
    std::string error;
};

std::vector<anomaly::Forecaster> detect_forecasters(const Config& cfg, std::uint64_t seed) {
    const auto which = cfg.get("detect.forecaster");
    if (which != "arima" && which != "lstm" && which != "both")
        throw ConfigError(fmt::format("config key 'detect.forecaster': '{}' is not arima, lstm or both", which));
    std::vector<anomaly::Forecaster> out;
    if (which != "lstm") {
        arima::ArimaConfig a;
        a.p = static_cast<int>(cfg.get_int("arima.p"));
        a.d = static_cast<int>(cfg.get_int("arima.d"));
        a.include_intercept = cfg.get_bool("arima.intercept");
        out.push_back(cfg.parse("arima.p", [&](const std::string&) { return anomaly::arima_forecaster(a); }));
    }
    if (which != "arima") {
        TrainConfig t;
        t.epochs = static_cast<int>(cfg.get_int("lstm.epochs"));
        t.batch_size = static_cast<int>(cfg.get_int("lstm.batch"));
        t.learning_rate = cfg.get_double("lstm.learning_rate");
        t.loss = LossKind::MSE;
        t.seed = seed;
        const WindowSpec w{cfg.get_size("lstm.window"), cfg.get_size("lstm.stride")};
        const auto hidden = cfg.get_size("lstm.hidden");
        out.push_back(cfg.parse("lstm.epochs", [&](const std::string&) { return anomaly::lstm_forecaster(w, t, hidden); }));
    }
    return out;
}

}  // namespace

int cmd_detect(const Config& cfg, std::ostream& log) {
    const auto data = required_path(cfg, "paths.data");
    const auto out = required_path(cfg, "paths.out");
    const auto seed = cfg.get_u64("run.seed");
    anomaly::AnomalyRule rule;
    rule.threshold = cfg.get_double("detect.threshold");
    rule.two_sided = cfg.get_bool("detect.two_sided");
    rule.denominator_floor = cfg.get_double("detect.denominator_floor");
    cfg.parse("detect.threshold", [&](const std::string&) { rule.validate(); return 0; });
    const double split = cfg.get_double("detect.split");
    cfg.parse("detect.split", [&](const std::string&) { return train_length(100, split); });
    detect_forecasters(cfg, seed);  // surfaces config errors before any work

    std::set<std::string> types, devices;
    for (const auto& t : cfg.get_list("detect.sensor_types"))
        types.insert(cfg.parse("detect.sensor_types", [&](const std::string&) {
            return sim::to_string(sim::parse_farm_sensor_type(t));
        }));
    for (const auto& d : cfg.get_list("detect.devices")) devices.insert(d);

    std::vector<SeriesOutcome> jobs;
    for (const auto& e : read_manifest(data)) {
        if (e.attrs.at("kind") != "farm") continue;
        const auto& sensor = e.attrs.contains("sensor") ? e.attrs.at("sensor") : std::string{};
        const auto& device = e.attrs.contains("device") ? e.attrs.at("device") : std::string{};
        if (!types.empty() && !types.contains(sensor)) continue;
        if (!devices.empty() && !devices.contains(device)) continue;
        jobs.push_back({sensor, device, e.path, {}, {}, {}});
    }
    if (jobs.empty()) throw InvalidInput(fmt::format("no farm series selected from {}", (data / "manifest.txt").string()));

    // Series are independent; each gets its own seed from its position.
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto& job = jobs[i];
        try {
            auto series = SensorSeries::from_csv(data / job.path);
            job.timestamps = std::move(series.timestamps);
            for (const auto& f : detect_forecasters(cfg, derive_seed(seed, {i})))
                job.reports.emplace(f.name, anomaly::detect(series.values, f, split, rule));
        } catch (const std::exception& e) {
            job.error = e.what();
            job.reports.clear();
        }
    }

    std::vector<std::string> models;
    for (const auto& f : detect_forecasters(cfg, seed)) models.push_back(f.name);

    struct Totals {
        double rmse = 0.0;
        std::size_t series = 0;
        std::size_t anomalies = 0;
    };
    std::vector<std::string> type_order;
    std::map<std::string, std::map<std::string, Totals>> agg;
    std::size_t failures = 0;
    for (const auto& job : jobs) {
        if (!job.error.empty()) {
            ++failures;
            log << fmt::format("detect: {} failed: {}\n", job.path, job.error);
            continue;
        }
        if (!agg.contains(job.sensor)) type_order.push_back(job.sensor);
        for (const auto& [model, rep] : job.reports) {
            const auto rel = fs::path("series") / job.device / fmt::format("{}.{}.csv", job.sensor, model);
            io::write_atomic(out / rel, rep.to_table(job.timestamps));
            auto& t = agg[job.sensor][model];
            t.rmse += rep.rmse;
            t.series += 1;
            t.anomalies += rep.flagged.size();
        }
    }

    std::string table = "sensor_type";
    for (const auto& m : models) table += fmt::format(",{0}_series,{0}_rmse,{0}_anomalies", m);
    const bool both = models.size() == 2;
    if (both) table += ",better";
    table += "\n";
    std::size_t lstm_better = 0;
    for (const auto& type : type_order) {
        table += type;
        std::map<std::string, double> avg;
        for (const auto& m : models) {
            const auto& t = agg[type][m];
            avg[m] = t.rmse / static_cast<double>(t.series);
            table += fmt::format(",{},{},{}", t.series, io::format_double(avg[m]), t.anomalies);
        }
        if (both) {
            const bool lstm_wins = avg["lstm"] < avg["arima"];
            lstm_better += lstm_wins;
            table += lstm_wins ? ",lstm" : ",arima";
        }
        table += "\n";
    }
    table += fmt::format("# series={} failed={} split={} threshold={}", jobs.size(), failures, io::format_double(split),
                         io::format_double(rule.threshold));
    if (both) table += fmt::format(" lstm_better={}/{}", lstm_better, type_order.size());
    table += "\n";
    io::write_atomic(out / "aggregate.csv", table);
    echo_config(cfg, out, "detect");
    log << table;
    return failures == jobs.size() ? 3 : 0;
}

// ---- classify -------------------------------------------------------------

namespace {

std::vector<features::LabeledWindow> classify_windows(const Config& cfg, const classifier::Preset& preset) {
    const auto kind = cfg.parse("classify.sensor", [](const std::string& v) { return parse_sensor_kind(v); });
    const auto axes = cfg.get("classify.axes").empty()
                          ? preset.axes
                          : cfg.parse("classify.axes", [](const std::string& v) { return features::parse_axis_set(v); });
    const auto rpm_list = parse_rpms(cfg, "classify.rpms");
    const std::set<int> rpms(rpm_list.begin(), rpm_list.end());

    std::vector<features::LabeledWindow> windows;
    const auto& data = cfg.get("paths.data");
    const auto& csv = cfg.get("paths.windows");
    if (data.empty() == csv.empty())
        throw ConfigError("exactly one of 'paths.data' (a bundle) or 'paths.windows' (a window file) is required");
    if (!data.empty()) {
        std::vector<RawRecording> recs;
        for (const auto& e : read_manifest(data)) {
            if (e.attrs.at("kind") != to_string(kind)) continue;
            auto r = load_recording(data, e);
            if (rpms.empty() || rpms.contains(r.rpm)) recs.push_back(std::move(r));
        }
        const auto len = cfg.get_size("classify.window") ? cfg.get_size("classify.window") : features::default_window(kind);
        const auto stride = cfg.get_size("classify.stride") ? cfg.get_size("classify.stride") : len;
        windows = features::window_recordings(recs, {len, stride}, axes);
    } else {
        for (auto& w : features::windows_from_csv(csv))
            if (rpms.empty() || rpms.contains(w.rpm)) windows.push_back(std::move(w));
        windows = features::select_axes(windows, axes);
    }
    if (const auto d = cfg.get_size("classify.decimate_to")) windows = features::decimate_to(windows, d);
    if (windows.empty()) throw InvalidInput("no windows selected for classification");
    return windows;
}

}  // namespace

void cmd_classify(const Config& cfg, std::ostream& log) {
    const auto out = required_path(cfg, "paths.out");
    const auto seed = cfg.get_u64("run.seed");
    const auto preset = cfg.parse("classify.preset", [](const std::string& v) { return classifier::preset(v); });
    const bool binary = cfg.get_bool("classify.binary");
    const auto classes = binary ? classifier::ClassSet::Binary : classifier::ClassSet::ThreeClass;
    const double train_fraction = cfg.get_double("classify.train_fraction");

    TrainConfig train;
    train.epochs = cfg.get_int("classify.epochs") ? static_cast<int>(cfg.get_int("classify.epochs")) : preset.epochs;
    train.batch_size = cfg.get_int("classify.batch") ? static_cast<int>(cfg.get_int("classify.batch")) : preset.batch_size;
    train.learning_rate = cfg.get_double("classify.learning_rate");
    train.seed = derive_seed(seed, {3});
    cfg.parse("classify.epochs", [&](const std::string&) { train.validate(); return 0; });

    auto windows = classify_windows(cfg, preset);
    if (binary) windows = classifier::binarize(windows);

    if (cfg.get_bool("classify.grid")) {
        std::map<int, std::vector<features::LabeledWindow>> by_rpm;
        for (auto& w : windows) by_rpm[w.rpm].push_back(std::move(w));
        classifier::GridOptions opt;
        opt.hidden = preset.hidden;
        opt.train = train;
        opt.classes = classes;
        opt.normalize = preset.normalize;
        opt.train_fraction = train_fraction;
        opt.interpolants_per_rpm = cfg.get_size("classify.grid_augment");
        opt.include_augmented = opt.interpolants_per_rpm > 0;
        opt.seed = derive_seed(seed, {4});
        const auto grid = classifier::rpm_generalization_grid(by_rpm, opt);
        auto table = grid.to_table();
        table += fmt::format("# classes={} preset={} grid_average={}", to_string(classes), preset.name,
                             io::format_double(grid.grid_average()));
        if (grid.augmented_average) table += fmt::format(" augmented_average={}", io::format_double(*grid.augmented_average));
        table += "\n";
        io::write_atomic(out / "grid.csv", table);
        echo_config(cfg, out, "classify");
        log << table;
        return;
    }

    auto split = classifier::split_windows(windows, train_fraction, derive_seed(seed, {1}));
    if (const auto n = cfg.get_size("classify.augment")) {
        auto aug = features::augment(split.train, n, derive_seed(seed, {2}));
        for (const auto& w : aug.warnings) log << "augment: " << w << "\n";
        split.train = std::move(aug.windows);
    }

    classifier::DefectClassifier model;
    if (const auto& src = cfg.get("paths.transfer_from"); !src.empty()) {
        const auto source = classifier::DefectClassifier::from_artifact(ModelArtifact::load(src));
        if (source.classes != classes)
            throw InvalidInput(fmt::format("source classifier is {} but {} was requested", to_string(source.classes),
                                           to_string(classes)));
        std::optional<TrainConfig> fine_tune;
        if (const auto epochs = cfg.get_int("classify.fine_tune_epochs"); epochs > 0) {
            fine_tune = classifier::fine_tune_config(train);
            fine_tune->epochs = static_cast<int>(epochs);
            if (const double lr = cfg.get_double("classify.fine_tune_learning_rate"); lr > 0) fine_tune->learning_rate = lr;
        }
        model = classifier::transfer(source, split.train, fine_tune);
    } else {
        model = classifier::train_dnn_r(split.train, train, preset.hidden, classes, preset.normalize);
    }

    const auto m = classifier::confusion(model, split.test);
    const auto art = model.to_artifact();
    art.save(out / "classifier.pdma");
    io::write_atomic(out / "confusion.csv", m.to_table());
    const auto report = fmt::format(
        "accuracy {}\nclasses {}\nprovenance {}\npreset {}\naxes {}\nwindow_dim {}\ntrain_windows {}\ntest_windows {}\n"
        "weight_hash {}\n",
        io::format_double(m.accuracy), to_string(classes), to_string(model.provenance), preset.name,
        features::to_string(model.encoder.axes), model.encoder.dim(), split.train.size(), split.test.size(),
        io::hex64(art.weight_hash()));
    io::write_atomic(out / "report.txt", report);
    echo_config(cfg, out, "classify");
    log << m.to_table() << report;
}

// ---- inspect --------------------------------------------------------------

void cmd_inspect(const fs::path& artifact, std::ostream& out) {
    const auto art = ModelArtifact::load(artifact);
    out << fmt::format("kind {}\n", art.kind());
    for (const auto& [k, v] : art.metadata()) out << fmt::format("meta {} = {}\n", k, v);
    for (const auto& a : art.arrays()) out << fmt::format("array {} {}x{}\n", a.name, a.values.rows, a.values.cols);
    out << fmt::format("weight_hash {}\n", io::hex64(art.weight_hash()));
}

// ---- driver ---------------------------------------------------------------

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const CLI::Error*>(&e)) return 1;
    if (dynamic_cast<const TrainingFailure*>(&e)) return 3;
    return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"pdmkit: synthetic predictive-maintenance data, anomaly detection and defect classification"};
    app.require_subcommand(1);

    struct Common {
        std::string config_file, out;
        std::optional<std::uint64_t> seed;
        std::vector<std::string> overrides;
    };
    auto add_common = [](CLI::App* sub, Common& c) {
        sub->add_option("--config", c.config_file, "INI file with [section] key = value settings")->check(CLI::ExistingFile);
        sub->add_option("--out", c.out, "Output directory");
        sub->add_option("--seed", c.seed, "Master seed");
        sub->add_option("--set", c.overrides, "Override one key, e.g. --set lstm.epochs=10");
    };

    Common gen_c, det_c, cls_c;
    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset bundle");
    add_common(gen, gen_c);
    std::string gen_profiles;
    gen->add_option("--farm-profiles", gen_profiles, "INI file of farm sensor profiles");

    auto* det = app.add_subcommand("detect", "Forecast farm series and flag anomalies");
    add_common(det, det_c);
    std::string det_data, det_forecaster;
    det->add_option("--data", det_data, "Bundle directory");
    det->add_option("--forecaster", det_forecaster, "arima, lstm or both");

    auto* cls = app.add_subcommand("classify", "Train and evaluate a health-state classifier");
    add_common(cls, cls_c);
    std::string cls_data, cls_windows, cls_sensor, cls_preset, cls_axes, cls_transfer, cls_rpms;
    std::optional<std::size_t> cls_augment;
    std::optional<int> cls_ft_epochs;
    bool cls_binary = false, cls_grid = false;
    cls->add_option("--data", cls_data, "Bundle directory");
    cls->add_option("--windows", cls_windows, "Window file instead of a bundle");
    cls->add_option("--sensor", cls_sensor, "mems or piezo");
    cls->add_option("--preset", cls_preset, "Tuning ladder step (baseline = normalization)");
    cls->add_option("--axes", cls_axes, "Axis subset such as XZ");
    cls->add_option("--rpms", cls_rpms, "Comma-separated rpm subset");
    cls->add_flag("--binary", cls_binary, "Normal vs NotNormal");
    cls->add_option("--augment", cls_augment, "Interpolants per rpm added to the training split");
    cls->add_flag("--grid", cls_grid, "Train-rpm by test-rpm accuracy grid");
    cls->add_option("--transfer-from", cls_transfer, "Source classifier artifact");
    cls->add_option("--fine-tune-epochs", cls_ft_epochs, "Fine-tuning epochs after transfer; 0 keeps the source weights");

    auto* ins = app.add_subcommand("inspect", "Print an artifact's metadata");
    std::string ins_path;
    ins->add_option("artifact", ins_path, "Artifact file")->required();

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 1;
    }

    auto resolve = [](Config cfg, const Common& c) {
        if (!c.config_file.empty()) cfg.merge_file(c.config_file);
        if (!c.out.empty()) cfg.set("paths.out", c.out);
        if (c.seed) cfg.set("run.seed", std::to_string(*c.seed));
        return cfg;
    };
    auto finish = [](Config& cfg, const Common& c) {
        for (const auto& o : c.overrides) cfg.apply_override(o);
    };

    try {
        if (*gen) {
            auto cfg = resolve(generate_defaults(), gen_c);
            if (!gen_profiles.empty()) cfg.set("paths.farm_profiles", gen_profiles);
            finish(cfg, gen_c);
            cmd_generate(cfg, out);
            return 0;
        }
        if (*det) {
            auto cfg = resolve(detect_defaults(), det_c);
            if (!det_data.empty()) cfg.set("paths.data", det_data);
            if (!det_forecaster.empty()) cfg.set("detect.forecaster", det_forecaster);
            finish(cfg, det_c);
            return cmd_detect(cfg, out);
        }
        if (*cls) {
            auto cfg = resolve(classify_defaults(), cls_c);
            if (!cls_data.empty()) cfg.set("paths.data", cls_data);
            if (!cls_windows.empty()) cfg.set("paths.windows", cls_windows);
            if (!cls_sensor.empty()) cfg.set("classify.sensor", cls_sensor);
            if (!cls_preset.empty()) cfg.set("classify.preset", cls_preset);
            if (!cls_axes.empty()) cfg.set("classify.axes", cls_axes);
            if (!cls_rpms.empty()) cfg.set("classify.rpms", cls_rpms);
            if (cls_binary) cfg.set("classify.binary", "true");
            if (cls_augment) cfg.set("classify.augment", std::to_string(*cls_augment));
            if (cls_grid) cfg.set("classify.grid", "true");
            if (!cls_transfer.empty()) cfg.set("paths.transfer_from", cls_transfer);
            if (cls_ft_epochs) cfg.set("classify.fine_tune_epochs", std::to_string(*cls_ft_epochs));
            finish(cfg, cls_c);
            cmd_classify(cfg, out);
            return 0;
        }
        cmd_inspect(ins_path, out);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace pdm::cli
