#include "pdm/classifier.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "pdm/error.hpp"
#include "pdm/io.hpp"
#include "pdm/random.hpp"
#include "pdm/series.hpp"

namespace pdm::classifier {

std::string to_string(ClassSet c) { return c == ClassSet::Binary ? "binary" : "three-class"; }
std::string to_string(Provenance p) { return p == Provenance::Transferred ? "transferred" : "trained-fresh"; }
std::size_t class_count(ClassSet c) { return c == ClassSet::Binary ? 2 : 3; }

std::vector<std::string> class_names(ClassSet c) {
    if (c == ClassSet::Binary) return {"Normal", "NotNormal"};
    return {"Normal", "NearFailure", "Failure"};
}

std::size_t class_index(Health label, ClassSet c) {
    if (c == ClassSet::Binary) return label == Health::Normal ? 0 : 1;
    if (label == Health::NotNormal) throw InvalidInput("NotNormal label in a three-class set");
    return static_cast<std::size_t>(label);
}

namespace {

ClassSet parse_class_set(std::string_view s) {
    if (s == "binary") return ClassSet::Binary;
    if (s == "three-class") return ClassSet::ThreeClass;
    throw InvalidInput(fmt::format("unknown class set '{}'", s));
}

Provenance parse_provenance(std::string_view s) {
    if (s == "transferred") return Provenance::Transferred;
    if (s == "trained-fresh") return Provenance::TrainedFresh;
    throw InvalidInput(fmt::format("unknown provenance '{}'", s));
}

Dataset make_dataset(const features::FeatureEncoder& enc, std::span<const LabeledWindow> windows, ClassSet classes) {
    std::vector<std::size_t> labels(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) labels[i] = class_index(windows[i].label, classes);
    return {enc.apply(features::feature_matrix(windows)), one_hot(labels, class_count(classes))};
}

}  // namespace

const std::vector<Preset>& preset_ladder() {
    static const std::vector<Preset> ladder = [] {
        std::vector<Preset> v;
        Preset p{.name = "none", .axes = features::kAllAxes, .normalize = false};
        v.push_back(p);
        p.name = "feature-selection";
        p.axes = features::kXZ;
        v.push_back(p);
        p.name = "normalization";
        p.normalize = true;
        v.push_back(p);
        p.name = "neurons";
        p.hidden = {100, 100};
        v.push_back(p);
        p.name = "layers";
        p.hidden = {100, 100, 100};
        v.push_back(p);
        p.name = "epochs";
        p.epochs = 100;
        v.push_back(p);
        p.name = "batch";
        p.batch_size = 100;
        v.push_back(p);
        return v;
    }();
    return ladder;
}

Preset preset(std::string_view name) {
    if (name == "baseline") name = "normalization";
    for (const auto& p : preset_ladder())
        if (p.name == name) return p;
    std::string known = "baseline";
    for (const auto& p : preset_ladder()) known += ", " + p.name;
    throw InvalidInput(fmt::format("unknown preset '{}' (known: {})", name, known));
}

std::size_t argmax(std::span<const double> v) {
    if (v.empty()) throw InvalidInput("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

void DefectClassifier::validate() const {
    if (network.layer_sizes().empty()) throw InvalidInput("classifier has no network");
    if (network.input_size() != encoder.dim())
        throw InvalidInput(fmt::format("network input {} does not match encoder dimensionality {}", network.input_size(),
                                       encoder.dim()));
    if (network.output_size() != class_count(classes))
        throw InvalidInput(fmt::format("network output {} does not match {} classes", network.output_size(),
                                       class_count(classes)));
    if (network.output_activation() != OutputActivation::Softmax) throw InvalidInput("classifier head must be softmax");
}

Prediction DefectClassifier::predict(std::span<const double> window) const {
    Prediction p;
    p.probabilities = network.forward(encoder.apply(window));
    p.cls = argmax(p.probabilities);
    return p;
}

std::vector<std::size_t> DefectClassifier::predict_classes(std::span<const LabeledWindow> windows) const {
    std::vector<std::size_t> out(windows.size());
    if (windows.empty()) return out;
    const Matrix probs = network.forward_batch(encoder.apply(features::feature_matrix(windows)));
    for (std::size_t i = 0; i < windows.size(); ++i) out[i] = argmax(probs.row(i));
    return out;
}

ModelArtifact DefectClassifier::to_artifact() const {
    validate();
    ModelArtifact art = network.to_artifact();
    ModelArtifact out("classifier");
    for (const auto& [k, v] : art.metadata()) out.set("network." + k, v);
    for (const auto& a : art.arrays()) out.add_array("network." + a.name, a.values);
    encoder.store(out);
    out.set("classes", to_string(classes));
    out.set("provenance", to_string(provenance));
    return out;
}

DefectClassifier DefectClassifier::from_artifact(const ModelArtifact& art) {
    art.expect_kind("classifier");
    ModelArtifact net("dense");
    for (const auto& [k, v] : art.metadata())
        if (k.starts_with("network.")) net.set(k.substr(8), v);
    for (const auto& a : art.arrays())
        if (a.name.starts_with("network.")) net.add_array(a.name.substr(8), a.values);
    DefectClassifier c{DenseNetwork::from_artifact(net), features::FeatureEncoder::load(art),
                       parse_class_set(art.get("classes")), parse_provenance(art.get("provenance"))};
    c.validate();
    return c;
}

Split split_windows(std::span<const LabeledWindow> windows, double train_fraction, std::uint64_t seed) {
    const std::size_t n_train = train_length(windows.size(), train_fraction);
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    Split s;
    s.train.reserve(n_train);
    s.test.reserve(windows.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i) (i < n_train ? s.train : s.test).push_back(windows[order[i]]);
    return s;
}

DefectClassifier train_dnn_r(std::span<const LabeledWindow> train, const TrainConfig& cfg,
                             const std::vector<std::size_t>& hidden, ClassSet classes, bool normalize) {
    cfg.validate();
    if (train.empty()) throw InvalidInput("no training windows");
    std::vector<bool> seen(class_count(classes), false);
    for (const auto& w : train) seen[class_index(w.label, classes)] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2)
        throw InvalidInput("training data must contain at least two classes");

    const auto& first = train.front();
    DefectClassifier c;
    c.classes = classes;
    c.provenance = Provenance::TrainedFresh;
    c.encoder = normalize ? features::fit_encoder(train) : features::FeatureEncoder::identity(first.axes, first.window_len());

    std::vector<std::size_t> sizes{c.encoder.dim()};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(class_count(classes));
    TrainConfig tc = cfg;
    tc.loss = LossKind::CrossEntropy;
    auto net = DenseNetwork::initialize(sizes, OutputActivation::Softmax, derive_seed(cfg.seed, {1}));
    tc.seed = derive_seed(cfg.seed, {2});
    c.network = pdm::train(std::move(net), make_dataset(c.encoder, train, classes), tc).network;
    return c;
}

std::vector<LabeledWindow> reconcile(const features::FeatureEncoder& source, std::span<const LabeledWindow> target) {
    std::vector<LabeledWindow> out;
    out.reserve(target.size());
    for (const auto& w : target) {
        if (w.features.size() == source.dim() && w.axes == source.axes) {
            out.push_back(w);
            continue;
        }
        const std::size_t len = w.window_len();
        const bool axes_ok = std::all_of(source.axes.begin(), source.axes.end(), [&](Axis a) {
            return std::find(w.axes.begin(), w.axes.end(), a) != w.axes.end();
        });
        if (!axes_ok || source.window_len == 0 || len < source.window_len || len % source.window_len != 0)
            throw InvalidInput(fmt::format(
                "target windows of dimensionality {} ({} x {}) cannot be reconciled with source dimensionality {} ({} x {})",
                w.features.size(), features::to_string(w.axes), len, source.dim(), features::to_string(source.axes),
                source.window_len));
        const auto selected = features::select_axes(std::span(&w, 1), source.axes);
        out.push_back(features::decimate(selected[0], len / source.window_len));
    }
    return out;
}

TrainConfig fine_tune_config(const TrainConfig& fresh) {
    TrainConfig t = fresh;
    t.learning_rate = fresh.learning_rate / 10.0;
    return t;
}

DefectClassifier transfer(const DefectClassifier& source, std::span<const LabeledWindow> target,
                          const std::optional<TrainConfig>& fine_tune) {
    source.validate();
    DefectClassifier c = source;
    c.provenance = Provenance::Transferred;
    if (!fine_tune || target.empty()) return c;
    fine_tune->validate();
    const auto aligned = reconcile(source.encoder, target);
    TrainConfig tc = *fine_tune;
    tc.loss = LossKind::CrossEntropy;
    tc.batch_size = std::min<int>(tc.batch_size, static_cast<int>(aligned.size()));
    c.network = pdm::train(c.network, make_dataset(c.encoder, aligned, c.classes), tc).network;
    return c;
}

ConfusionMatrix tally(std::span<const std::size_t> truth, std::span<const std::size_t> predicted, ClassSet classes) {
    if (truth.size() != predicted.size())
        throw InvalidInput(fmt::format("tally: {} labels vs {} predictions", truth.size(), predicted.size()));
    const std::size_t k = class_count(classes);
    ConfusionMatrix m;
    m.classes = classes;
    m.counts.assign(k, std::vector<std::size_t>(k, 0));
    m.rates.assign(k, std::vector<double>(k, 0.0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= k || predicted[i] >= k) throw InvalidInput("tally: class index out of range");
        ++m.counts[truth[i]][predicted[i]];
        if (truth[i] == predicted[i]) ++correct;
    }
    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t row = std::accumulate(m.counts[r].begin(), m.counts[r].end(), std::size_t{0});
        if (row == 0) continue;
        for (std::size_t c = 0; c < k; ++c) m.rates[r][c] = static_cast<double>(m.counts[r][c]) / static_cast<double>(row);
    }
    m.total = truth.size();
    m.accuracy = m.total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(m.total);
    return m;
}

ConfusionMatrix confusion(const DefectClassifier& c, std::span<const LabeledWindow> test) {
    if (test.empty()) throw InvalidInput("confusion needs at least one test window");
    const auto aligned = reconcile(c.encoder, test);
    std::vector<std::size_t> truth(aligned.size());
    for (std::size_t i = 0; i < aligned.size(); ++i) truth[i] = class_index(aligned[i].label, c.classes);
    return tally(truth, c.predict_classes(aligned), c.classes);
}

std::string ConfusionMatrix::to_table() const {
    const auto names = class_names(classes);
    std::string out = "true\\predicted";
    for (const auto& n : names) out += "," + n;
    out += '\n';
    for (std::size_t r = 0; r < names.size(); ++r) {
        out += names[r];
        for (double v : rates[r]) out += "," + io::format_double(v);
        out += '\n';
    }
    out += fmt::format("# accuracy={} total={}\n", io::format_double(accuracy), total);
    return out;
}

std::vector<LabeledWindow> binarize(std::span<const LabeledWindow> windows) {
    std::vector<LabeledWindow> out(windows.begin(), windows.end());
    for (auto& w : out)
        if (w.label != Health::Normal) w.label = Health::NotNormal;
    return out;
}

double RpmGrid::grid_average() const {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& row : accuracy)
        for (double v : row) {
            s += v;
            ++n;
        }
    return n == 0 ? 0.0 : s / static_cast<double>(n);
}

std::string RpmGrid::to_table() const {
    std::string out = "train\\test";
    for (int r : rpms) out += fmt::format(",{}", r);
    out += ",average\n";
    auto row = [&](const std::string& label, const std::vector<double>& vals, double avg) {
        out += label;
        for (double v : vals) out += "," + io::format_double(v);
        out += "," + io::format_double(avg) + "\n";
    };
    for (std::size_t i = 0; i < rpms.size(); ++i) row(std::to_string(rpms[i]), accuracy[i], row_average[i]);
    if (augmented) row("augmented", *augmented, *augmented_average);
    return out;
}

RpmGrid rpm_generalization_grid(const std::map<int, std::vector<LabeledWindow>>& by_rpm, const GridOptions& opt) {
    if (by_rpm.empty()) throw InvalidInput("rpm grid needs at least one rpm group");
    RpmGrid g;
    std::vector<Split> splits;
    for (const auto& [rpm, windows] : by_rpm) {
        g.rpms.push_back(rpm);
        splits.push_back(split_windows(windows, opt.train_fraction, derive_seed(opt.seed, {static_cast<std::uint64_t>(rpm)})));
    }
    const std::size_t n = g.rpms.size();
    const std::size_t rows = n + (opt.include_augmented ? 1 : 0);
    std::vector<std::vector<double>> acc(rows, std::vector<double>(n, 0.0));
    std::vector<std::exception_ptr> errors(rows);

    auto run_row = [&](std::size_t r) {
        std::vector<LabeledWindow> train;
        if (r < n) {
            train = splits[r].train;
        } else {
            for (const auto& s : splits) train.insert(train.end(), s.train.begin(), s.train.end());
            if (opt.interpolants_per_rpm > 0)
                train = features::augment(train, opt.interpolants_per_rpm, derive_seed(opt.seed, {0xa5})).windows;
        }
        TrainConfig cfg = opt.train;
        cfg.seed = derive_seed(opt.train.seed, {r});
        const auto model = train_dnn_r(train, cfg, opt.hidden, opt.classes, opt.normalize);
        for (std::size_t c = 0; c < n; ++c) acc[r][c] = confusion(model, splits[c].test).accuracy;
    };

#pragma omp parallel for schedule(dynamic)
    for (std::size_t r = 0; r < rows; ++r) {
        try {
            run_row(r);
        } catch (...) {
            errors[r] = std::current_exception();
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (!errors[r]) continue;
        const std::string row = r < n ? fmt::format("rpm {}", g.rpms[r]) : std::string("augmented");
        try {
            std::rethrow_exception(errors[r]);
        } catch (const InvalidInput& e) {
            throw InvalidInput(fmt::format("grid row {}: {}", row, e.what()));
        } catch (const DegenerateData& e) {
            throw DegenerateData(fmt::format("grid row {}: {}", row, e.what()));
        } catch (const TrainingFailure& e) {
            throw TrainingFailure(fmt::format("grid row {}: {}", row, e.what()));
        }
    }

    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
    for (std::size_t r = 0; r < n; ++r) {
        g.accuracy.push_back(acc[r]);
        g.row_average.push_back(mean(acc[r]));
    }
    if (opt.include_augmented) {
        g.augmented = acc[n];
        g.augmented_average = mean(acc[n]);
    }
    return g;
}

}  // namespace pdm::classifier
