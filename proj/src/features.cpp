#include "pdm/features.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "pdm/error.hpp"
#include "pdm/io.hpp"
#include "pdm/random.hpp"

namespace pdm::features {

namespace {

int feature_rank(Axis a) {
    switch (a) {
        case Axis::X: return 0;
        case Axis::Z: return 1;
        case Axis::Y: return 2;
    }
    return 3;
}

std::size_t block_of(const AxisSet& axes, Axis a) {
    auto it = std::find(axes.begin(), axes.end(), a);
    if (it == axes.end()) throw InvalidInput(fmt::format("axis {} not present in window axes {}", pdm::to_string(a), to_string(axes)));
    return static_cast<std::size_t>(it - axes.begin());
}

}  // namespace

AxisSet make_axis_set(std::vector<Axis> axes) {
    if (axes.empty()) throw InvalidInput("empty axis set");
    std::sort(axes.begin(), axes.end(), [](Axis a, Axis b) { return feature_rank(a) < feature_rank(b); });
    axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
    return axes;
}

std::string to_string(const AxisSet& axes) {
    std::string out;
    for (auto a : axes) out += pdm::to_string(a);
    return out;
}

AxisSet parse_axis_set(std::string_view text) {
    std::vector<Axis> axes;
    for (char c : text) {
        if (c == ',' || c == ' ') continue;
        axes.push_back(parse_axis(std::string_view(&c, 1)));
    }
    return make_axis_set(std::move(axes));
}

std::size_t default_window(SensorKind kind) { return kind == SensorKind::Piezo ? kPiezoWindow : kMemsWindow; }

std::vector<Vector> window_signal(std::span<const std::span<const double>> axis_samples, const WindowSpec& spec) {
    spec.validate();
    if (axis_samples.empty()) throw InvalidInput("window_signal: empty axis set");
    const std::size_t n = axis_samples[0].size();
    for (const auto& a : axis_samples)
        if (a.size() != n) throw InvalidInput("window_signal: axes have different lengths");
    if (n < spec.window_len)
        throw InvalidInput(fmt::format("window_signal: {} samples shorter than window {}", n, spec.window_len));

    const std::size_t count = spec.count(n);
    const std::size_t w = spec.window_len;
    std::vector<Vector> out(count, Vector(w * axis_samples.size()));
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t a = 0; a < axis_samples.size(); ++a)
            std::copy_n(axis_samples[a].begin() + static_cast<std::ptrdiff_t>(i * spec.stride), w,
                        out[i].begin() + static_cast<std::ptrdiff_t>(a * w));
    return out;
}

std::vector<LabeledWindow> window_recording(const RawRecording& rec, const WindowSpec& spec, const AxisSet& axes) {
    const AxisSet set = make_axis_set(axes);
    std::vector<std::span<const double>> samples;
    for (auto a : set) samples.emplace_back(rec.axis(a));
    auto vecs = window_signal(samples, spec);
    std::vector<LabeledWindow> out;
    out.reserve(vecs.size());
    for (auto& v : vecs) out.push_back({std::move(v), rec.rpm, rec.health, rec.kind, set});
    return out;
}

std::vector<LabeledWindow> window_recordings(std::span<const RawRecording> recs, const WindowSpec& spec,
                                             const AxisSet& axes) {
    std::vector<std::vector<LabeledWindow>> parts(recs.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < recs.size(); ++i) {
        try {
            parts[i] = window_recording(recs[i], spec, axes);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    std::vector<LabeledWindow> out;
    for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(out));
    return out;
}

std::vector<LabeledWindow> select_axes(std::span<const LabeledWindow> windows, const AxisSet& axes) {
    const AxisSet set = make_axis_set(axes);
    std::vector<LabeledWindow> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        const std::size_t len = w.window_len();
        LabeledWindow r{Vector(len * set.size()), w.rpm, w.label, w.sensor_kind, set};
        for (std::size_t b = 0; b < set.size(); ++b) {
            const std::size_t src = block_of(w.axes, set[b]);
            std::copy_n(w.features.begin() + static_cast<std::ptrdiff_t>(src * len), len,
                        r.features.begin() + static_cast<std::ptrdiff_t>(b * len));
        }
        out.push_back(std::move(r));
    }
    return out;
}

LabeledWindow decimate(const LabeledWindow& w, std::size_t factor) {
    if (factor < 1) throw InvalidInput("decimation factor must be at least 1");
    const std::size_t len = w.window_len();
    if (len % factor != 0)
        throw InvalidInput(fmt::format("window length {} is not a multiple of decimation factor {}", len, factor));
    const std::size_t out_len = len / factor;
    LabeledWindow r{Vector(out_len * w.axes.size()), w.rpm, w.label, w.sensor_kind, w.axes};
    for (std::size_t b = 0; b < w.axes.size(); ++b)
        for (std::size_t k = 0; k < out_len; ++k) r.features[b * out_len + k] = w.features[b * len + k * factor];
    return r;
}

std::vector<LabeledWindow> decimate_to(std::span<const LabeledWindow> windows, std::size_t window_len) {
    std::vector<LabeledWindow> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        const std::size_t len = w.window_len();
        if (window_len == 0 || len % window_len != 0)
            throw InvalidInput(fmt::format("cannot decimate windows of length {} to length {}", len, window_len));
        out.push_back(decimate(w, len / window_len));
    }
    return out;
}

Matrix feature_matrix(std::span<const LabeledWindow> windows) {
    if (windows.empty()) return {};
    const std::size_t d = windows[0].features.size();
    Matrix m(windows.size(), d);
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (windows[i].features.size() != d)
            throw InvalidInput(fmt::format("window {} has {} features, expected {}", i, windows[i].features.size(), d));
        std::copy(windows[i].features.begin(), windows[i].features.end(), m.row(i).begin());
    }
    return m;
}

// ---- encoder ----

Vector FeatureEncoder::apply(std::span<const double> x) const {
    if (x.size() != dim())
        throw InvalidInput(fmt::format("encoder expects {} features, got {}", dim(), x.size()));
    Vector out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / stddev[j];
    return out;
}

Matrix FeatureEncoder::apply(const Matrix& x) const {
    if (x.cols != dim()) throw InvalidInput(fmt::format("encoder expects {} features, got {}", dim(), x.cols));
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = (x(i, j) - mean[j]) / stddev[j];
    return out;
}

Vector FeatureEncoder::invert(std::span<const double> z) const {
    if (z.size() != dim()) throw InvalidInput(fmt::format("encoder expects {} features, got {}", dim(), z.size()));
    Vector out(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] * stddev[j] + mean[j];
    return out;
}

FeatureEncoder FeatureEncoder::identity(const AxisSet& axes, std::size_t window_len) {
    const std::size_t d = axes.size() * window_len;
    return {Vector(d, 0.0), Vector(d, 1.0), axes, window_len};
}

void FeatureEncoder::store(ModelArtifact& art) const {
    art.set("encoder.version", kFormatVersion);
    art.set("encoder.axes", to_string(axes));
    art.set("encoder.window_len", window_len);
    art.add_vector("encoder.mean", mean);
    art.add_vector("encoder.stddev", stddev);
}

FeatureEncoder FeatureEncoder::load(const ModelArtifact& art) {
    if (art.get_int("encoder.version") != kFormatVersion)
        throw InvalidInput(fmt::format("unsupported encoder version {}", art.get("encoder.version")));
    FeatureEncoder e;
    e.axes = parse_axis_set(art.get("encoder.axes"));
    e.window_len = static_cast<std::size_t>(art.get_int("encoder.window_len"));
    e.mean = art.vector("encoder.mean");
    e.stddev = art.vector("encoder.stddev");
    if (e.mean.size() != e.stddev.size() || e.mean.size() != e.axes.size() * e.window_len)
        throw InvalidInput("encoder artifact: inconsistent dimensions");
    return e;
}

ModelArtifact FeatureEncoder::to_artifact() const {
    ModelArtifact art("encoder");
    store(art);
    return art;
}

FeatureEncoder FeatureEncoder::from_artifact(const ModelArtifact& art) {
    art.expect_kind("encoder");
    return load(art);
}

FeatureEncoder fit_encoder(const Matrix& x, const AxisSet& axes, std::size_t window_len) {
    if (x.rows < 2) throw InvalidInput(fmt::format("encoder needs at least 2 windows, got {}", x.rows));
    if (x.cols != axes.size() * window_len)
        throw InvalidInput(fmt::format("encoder: {} features do not match {} axes x {} samples", x.cols, axes.size(), window_len));
    FeatureEncoder e{Vector(x.cols, 0.0), Vector(x.cols, 0.0), axes, window_len};
    const double n = static_cast<double>(x.rows);
    // Each column is summed in sorted order so the encoder is bitwise independent of row order.
    Vector col(x.rows);
    for (std::size_t j = 0; j < x.cols; ++j) {
        for (std::size_t i = 0; i < x.rows; ++i) col[i] = x(i, j);
        std::sort(col.begin(), col.end());
        double s = 0.0;
        for (double v : col) s += v;
        const double m = s / n;
        double ss = 0.0;
        for (double v : col) ss += (v - m) * (v - m);
        const double sd = std::sqrt(ss / n);
        if (!(sd > 0.0)) throw DegenerateData(fmt::format("feature {} has zero variance", j));
        e.mean[j] = m;
        e.stddev[j] = sd;
    }
    return e;
}

FeatureEncoder fit_encoder(std::span<const LabeledWindow> windows) {
    if (windows.empty()) throw InvalidInput("encoder needs at least 2 windows, got 0");
    return fit_encoder(feature_matrix(windows), windows[0].axes, windows[0].window_len());
}

std::vector<LabeledWindow> apply_encoder(const FeatureEncoder& enc, std::span<const LabeledWindow> windows) {
    std::vector<LabeledWindow> out(windows.begin(), windows.end());
    for (auto& w : out) w.features = enc.apply(w.features);
    return out;
}

// ---- augmentation ----

AugmentResult augment(std::span<const LabeledWindow> windows, std::size_t per_rpm, std::uint64_t seed) {
    AugmentResult res;
    res.windows.assign(windows.begin(), windows.end());
    if (per_rpm == 0) return res;

    // rpm -> label -> member indices, all in input order.
    std::map<int, std::map<int, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < windows.size(); ++i) groups[windows[i].rpm][static_cast<int>(windows[i].label)].push_back(i);

    Rng rng(seed);
    for (const auto& [rpm, by_label] : groups) {
        std::vector<const std::vector<std::size_t>*> eligible;
        std::size_t pool = 0;
        for (const auto& [label, members] : by_label) {
            if (members.size() < 2) {
                res.warnings.push_back(fmt::format("rpm {}: label {} has a single window, no interpolants drawn", rpm,
                                                   pdm::to_string(static_cast<Health>(label))));
                continue;
            }
            eligible.push_back(&members);
            pool += members.size();
        }
        if (eligible.empty()) continue;

        for (std::size_t k = 0; k < per_rpm; ++k) {
            std::size_t pick = rng.index(pool);
            const std::vector<std::size_t>* members = nullptr;
            for (const auto* m : eligible) {
                if (pick < m->size()) {
                    members = m;
                    break;
                }
                pick -= m->size();
            }
            const std::size_t a = (*members)[pick];
            std::size_t partner = rng.index(members->size() - 1);
            if (partner >= pick) ++partner;
            const std::size_t b = (*members)[partner];
            const double lambda = rng.uniform_open();

            LabeledWindow g = windows[a];
            for (std::size_t j = 0; j < g.features.size(); ++j)
                g.features[j] = lambda * windows[a].features[j] + (1.0 - lambda) * windows[b].features[j];
            res.windows.push_back(std::move(g));
            res.parents.push_back({a, b, lambda});
        }
    }
    return res;
}

// ---- text IO ----

std::string windows_to_csv(std::span<const LabeledWindow> windows) {
    const std::size_t d = windows.empty() ? 0 : windows[0].features.size();
    std::string out;
    for (std::size_t j = 0; j < d; ++j) out += fmt::format("feature_{},", j);
    out += "rpm,label,sensor_kind,axes\n";
    for (const auto& w : windows) {
        if (w.features.size() != d) throw InvalidInput("windows_to_csv: mixed feature lengths");
        for (double v : w.features) {
            out += io::format_double(v);
            out += ',';
        }
        out += fmt::format("{},{},{},{}\n", w.rpm, pdm::to_string(w.label), pdm::to_string(w.sensor_kind), to_string(w.axes));
    }
    return out;
}

std::vector<LabeledWindow> windows_from_csv(const std::filesystem::path& path) {
    auto table = io::read_csv(path);
    const auto c_rpm = table.column("rpm");
    const auto c_label = table.column("label");
    const auto c_kind = table.column("sensor_kind");
    const auto c_axes = table.column("axes");
    std::size_t d = 0;
    while (d < table.header.size() && table.header[d] == fmt::format("feature_{}", d)) ++d;
    std::vector<LabeledWindow> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        LabeledWindow w;
        w.features.resize(d);
        for (std::size_t j = 0; j < d; ++j) w.features[j] = io::parse_double(row[j], "feature");
        w.rpm = static_cast<int>(io::parse_int(row[c_rpm], "rpm"));
        w.label = parse_health(row[c_label]);
        w.sensor_kind = parse_sensor_kind(row[c_kind]);
        w.axes = parse_axis_set(row[c_axes]);
        if (d % w.axes.size() != 0)
            throw InvalidInput(fmt::format("{}: {} features do not divide into axes {}", path.string(), d, row[c_axes]));
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace pdm::features
