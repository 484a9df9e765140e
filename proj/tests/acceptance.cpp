// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Every run is seeded; timings are wall clock.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <unistd.h>

#include "support/oracles.hpp"
#include "pdm/anomaly.hpp"
#include "pdm/arima.hpp"
#include "pdm/classifier.hpp"
#include "pdm/cli.hpp"
#include "pdm/dense.hpp"
#include "pdm/io.hpp"
#include "pdm/lstm.hpp"
#include "pdm/random.hpp"
#include "pdm/simulator.hpp"

using namespace pdm;
using namespace pdm::classifier;
namespace fs = std::filesystem;
namespace F = pdm::features;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}); }

// Central differences of the public loss functions, compared with the analytic gradients.
double dense_check(DenseNetwork net, const Dataset& batch, LossKind loss, double h) {
    const auto g = backprop(net, batch, loss);
    double worst = 0.0;
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
        auto probe = [&](double& p, double analytic) {
            const double keep = p;
            p = keep + h;
            const double up = batch_loss(net, batch, loss);
            p = keep - h;
            const double down = batch_loss(net, batch, loss);
            p = keep;
            worst = std::max(worst, rel_err(analytic, (up - down) / (2 * h)));
        };
        auto& layer = net.layers()[k];
        for (std::size_t i = 0; i < layer.weights.data.size(); ++i) probe(layer.weights.data[i], g.weights[k].data[i]);
        for (std::size_t i = 0; i < layer.biases.size(); ++i) probe(layer.biases[i], g.biases[k][i]);
    }
    return worst;
}

double lstm_check(lstm::LstmModel m, const lstm::SequenceBatch& batch, double h) {
    const auto g = lstm::bptt(m, batch);
    double worst = 0.0;
    auto probe = [&](double& p, double analytic) {
        const double keep = p;
        p = keep + h;
        const double up = lstm::sequence_loss(m, batch);
        p = keep - h;
        const double down = lstm::sequence_loss(m, batch);
        p = keep;
        worst = std::max(worst, rel_err(analytic, (up - down) / (2 * h)));
    };
    for (std::size_t i = 0; i < m.weights.data.size(); ++i) probe(m.weights.data[i], g.weights.data[i]);
    for (std::size_t i = 0; i < m.bias.size(); ++i) probe(m.bias[i], g.bias[i]);
    for (std::size_t i = 0; i < m.readout.size(); ++i) probe(m.readout[i], g.readout[i]);
    probe(m.readout_bias, g.readout_bias);
    return worst;
}

// Central differences in double: h = 1e-5 sits near the cube root of machine epsilon, where truncation and
// cancellation error balance. Smaller steps let roundoff swamp gradients of order 1e-7.
Outcome gradients() {
    Rng rng(2024);
    double dense_worst = 0.0, lstm_worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::size_t> sizes{1 + rng.index(5)};
        for (std::size_t k = 0, depth = 1 + rng.index(2); k < depth; ++k) sizes.push_back(1 + rng.index(8));
        sizes.push_back(2 + rng.index(3));
        const bool softmax = trial % 2 == 0;
        auto net = DenseNetwork::initialize(sizes, softmax ? OutputActivation::Softmax : OutputActivation::Identity,
                                            derive_seed(7, {static_cast<std::uint64_t>(trial)}));
        for (auto& l : net.layers())
            for (auto& b : l.biases) b = rng.uniform(-0.5, 0.5);
        Dataset batch{Matrix(4, sizes.front()), Matrix(4, sizes.back())};
        for (auto& v : batch.inputs.data) v = rng.uniform(-2, 2);
        for (std::size_t i = 0; i < 4; ++i) {
            if (softmax)
                batch.targets(i, rng.index(sizes.back())) = 1.0;
            else
                for (std::size_t j = 0; j < sizes.back(); ++j) batch.targets(i, j) = rng.uniform(-1, 1);
        }
        dense_worst =
            std::max(dense_worst, dense_check(net, batch, softmax ? LossKind::CrossEntropy : LossKind::MSE, 1e-5));

        const std::size_t hidden = 1 + rng.index(6), window = 1 + rng.index(6);
        auto m = lstm::LstmModel::initialize(1, hidden, rng.next());
        for (auto& w : m.weights.data) w = rng.uniform(-0.7, 0.7);
        for (auto& b : m.bias) b = rng.uniform(-0.7, 0.7);
        for (auto& r : m.readout) r = rng.uniform(-0.7, 0.7);
        lstm::SequenceBatch seq{Matrix(4, window), Vector(4)};
        for (auto& v : seq.windows.data) v = rng.uniform(-2, 2);
        for (auto& v : seq.targets) v = rng.uniform(-1, 1);
        lstm_worst = std::max(lstm_worst, lstm_check(m, seq, 1e-5));
    }
    return {dense_worst < 1e-4 && lstm_worst < 1e-4,
            fmt::format("max relative error dense {:.2e}, lstm {:.2e} over 50 models each", dense_worst, lstm_worst)};
}

Outcome ar_oracle() {
    Rng rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int p = 1 + static_cast<int>(rng.index(10));
        const int d = static_cast<int>(rng.index(2));
        const std::size_t n = 200 + rng.index(1801);
        Vector phi(static_cast<std::size_t>(p));
        for (auto& v : phi) v = rng.uniform(-0.8, 0.8) / p;
        Vector x(n, 0.0);
        const double drift = rng.uniform(-0.5, 0.5);
        for (std::size_t t = 0; t < n; ++t) {
            double v = drift + rng.normal();
            for (std::size_t i = 0; i < phi.size() && i < t; ++i) v += phi[i] * x[t - 1 - i];
            x[t] = v;
        }
        if (d == 1)
            for (std::size_t t = 1; t < n; ++t) x[t] += x[t - 1];
        const bool intercept = trial % 3 != 0;
        const auto m = arima::fit_ar(x, {.p = p, .d = d, .q = 0, .include_intercept = intercept});
        const auto ref = oracle::ar_normal_equations(x, p, d, intercept);
        const std::size_t off = intercept ? 1 : 0;
        if (intercept) worst = std::max(worst, std::abs(m.intercept - ref[0]) / std::max(1.0, std::abs(ref[0])));
        for (std::size_t i = 0; i < phi.size(); ++i)
            worst = std::max(worst, std::abs(m.coefficients[i] - ref[off + i]) / std::max(1.0, std::abs(ref[off + i])));
    }
    return {worst <= 1e-9, fmt::format("max deviation from the normal-equations solve {:.2e} over 100 series", worst)};
}

anomaly::Forecaster farm_lstm(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.05;
    cfg.loss = LossKind::MSE;
    cfg.seed = seed;
    return anomaly::lstm_forecaster({10, 1}, cfg, 64);
}

Outcome anomaly_recall() {
    std::size_t missed = 0, spikes = 0, false_flags = 0, clean = 0;
    double worst_rate = 0.0;
    for (auto t : sim::kFarmSensorTypes)
        for (auto kind : {sim::AnomalyKind::Spike, sim::AnomalyKind::Drop}) {
            auto spec = sim::FarmSpec::defaults(t, derive_seed(33, {static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(kind)}));
            spec.anomalies.count = 5;
            spec.anomalies.magnitude = 0.5;
            spec.anomalies.kind = kind;
            const auto s = sim::gen_farm(spec);
            for (const auto& f : {anomaly::arima_forecaster({}), farm_lstm(spec.seed)}) {
                const auto rep = anomaly::detect(s.values, f, 0.66, {});
                const auto got = rep.flagged_indices();
                std::size_t fp = 0, n_clean = 0;
                for (std::size_t i = rep.first_test_index; i < s.size(); ++i) {
                    const bool flagged = std::binary_search(got.begin(), got.end(), i);
                    if (s.is_anomaly[i]) {
                        ++spikes;
                        missed += !flagged;
                    } else {
                        ++n_clean;
                        fp += flagged;
                    }
                }
                false_flags += fp;
                clean += n_clean;
                worst_rate = std::max(worst_rate, static_cast<double>(fp) / static_cast<double>(n_clean));
            }
        }
    return {missed == 0 && worst_rate < 0.02,
            fmt::format("{} of {} injected +-50% anomalies flagged; clean samples flagged {} of {}, worst series {:.2f}%",
                        spikes - missed, spikes, false_flags, clean, 100 * worst_rate)};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / fmt::format("pdm_acceptance_{}_{}", tag, ::getpid());
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int pdmkit(const std::vector<std::string>& args, std::string* out = nullptr) {
    std::ostringstream o, e;
    const int code = cli::run(args, o, e);
    if (out) *out = o.str();
    if (code != 0) std::cerr << e.str();
    return code;
}

// Parses "# ... lstm_better=k/n" from an aggregate table.
std::pair<int, int> lstm_wins(const fs::path& aggregate) {
    const auto text = io::read_file(aggregate);
    const auto at = text.find("lstm_better=");
    if (at == std::string::npos) return {-1, -1};
    int k = 0, n = 0;
    std::sscanf(text.c_str() + at, "lstm_better=%d/%d", &k, &n);
    return {k, n};
}

Outcome forecaster_ordering() {
    TempDir dir("ordering");
    std::string detail;
    bool pass = true;
    for (const auto& [label, anomalies] : {std::pair{"clean", "0"}, std::pair{"default", "5"}}) {
        const auto bundle = (dir.path / label).string();
        const auto out = (dir.path / (std::string(label) + "_detect")).string();
        if (pdmkit({"generate", "--out", bundle, "--set", std::string("farm.anomaly_count=") + anomalies}) != 0 ||
            pdmkit({"detect", "--data", bundle, "--out", out}) != 0)
            return {false, fmt::format("{} bundle: command failed", label)};
        const auto [k, n] = lstm_wins(fs::path(out) / "aggregate.csv");
        pass = pass && n == 7 && k >= 5;
        detail += fmt::format("{}LSTM lower average RMSE on {}/{} sensor types ({} bundle)", detail.empty() ? "" : "; ", k,
                              n, label);
    }
    return {pass, detail};
}

TrainConfig motor_train() {
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.seed = 11;
    return cfg;
}

sim::MotorSpec motor_base() {
    sim::MotorSpec s;
    s.seed = 5;
    return s;
}

std::vector<ConfusionMatrix> emitted;

Outcome transfer_ordering() {
    auto mems = motor_base();
    mems.recordings_per_condition = 6;
    const auto mw = F::window_recordings(sim::gen_motor(mems), {10, 10}, F::kXZ);
    const auto split = split_windows(mw, 0.7, 1);
    const auto cfg = motor_train();
    const auto fresh = confusion(train_dnn_r(split.train, cfg, {50, 50}), split.test);

    // The piezo source sees one-second windows (the MEMS window span) decimated to the MEMS rate.
    auto piezo = motor_base();
    piezo.sensor_kind = SensorKind::Piezo;
    piezo.recordings_per_condition = 5;
    piezo.seed = 99;
    const auto pw = F::decimate_to(F::window_recordings(sim::gen_motor(piezo), {3200, 320}, F::kXZ), 10);
    const auto source = train_dnn_r(pw, cfg, {50, 50});
    const auto tl = confusion(transfer(source, split.train, fine_tune_config(cfg)), split.test);
    emitted.push_back(fresh);
    emitted.push_back(tl);
    const double gain = tl.accuracy - fresh.accuracy;
    return {mw.size() <= 2000 && gain >= 0.03,
            fmt::format("{} MEMS windows: DNN-R {:.4f}, DNN-TL {:.4f}, gain {:+.4f}", mw.size(), fresh.accuracy,
                        tl.accuracy, gain)};
}

std::map<int, std::vector<LabeledWindow>> by_rpm(std::span<const LabeledWindow> ws) {
    std::map<int, std::vector<LabeledWindow>> out;
    for (const auto& w : ws) out[w.rpm].push_back(w);
    return out;
}

Outcome augmentation_ordering() {
    auto spec = motor_base();
    spec.rpm_list = {sim::kGridRpms.begin(), sim::kGridRpms.end()};
    spec.recordings_per_condition = 50;
    GridOptions opt;
    opt.train = motor_train();
    opt.seed = 3;
    opt.include_augmented = true;
    opt.interpolants_per_rpm = 1000;
    const auto g = rpm_generalization_grid(by_rpm(F::window_recordings(sim::gen_motor(spec), {10, 10}, F::kXZ)), opt);
    const double best = *std::max_element(g.row_average.begin(), g.row_average.end());
    const double worst = *std::min_element(g.row_average.begin(), g.row_average.end());
    const double aug = *g.augmented_average;
    return {aug >= best - 0.02 && aug > worst + 0.05,
            fmt::format("augmented {:.4f}; single-rpm rows best {:.4f}, worst {:.4f}", aug, best, worst)};
}

Outcome feature_selection() {
    auto spec = motor_base();
    spec.recordings_per_condition = 20;
    const auto all = F::window_recordings(sim::gen_motor(spec), {10, 10}, F::kAllAxes);
    double acc[2];
    int i = 0;
    for (const auto& axes : {F::kAllAxes, F::kXZ}) {
        const auto split = split_windows(F::select_axes(all, axes), 0.7, 1);
        const auto m = confusion(train_dnn_r(split.train, motor_train(), {50, 50}), split.test);
        emitted.push_back(m);
        acc[i++] = m.accuracy;
    }
    return {acc[1] >= acc[0], fmt::format("{} windows: XZ {:.4f} vs XYZ {:.4f}", all.size(), acc[1], acc[0])};
}

Outcome binary_relaxation() {
    auto spec = motor_base();
    spec.rpm_list = {sim::kNarrowRpms.begin(), sim::kNarrowRpms.end()};
    spec.recordings_per_condition = 50;
    const auto ws = F::window_recordings(sim::gen_motor(spec), {10, 10}, F::kXZ);
    GridOptions opt;
    opt.train = motor_train();
    opt.seed = 3;
    const double three = rpm_generalization_grid(by_rpm(ws), opt).grid_average();
    opt.classes = ClassSet::Binary;
    const double two = rpm_generalization_grid(by_rpm(binarize(ws)), opt).grid_average();
    return {two > three, fmt::format("grid average over rpms 300-380: binary {:.4f} vs three-class {:.4f}", two, three)};
}

Outcome confusion_validity() {
    Rng rng(17);
    bool tally_ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        const auto classes = trial % 2 ? ClassSet::Binary : ClassSet::ThreeClass;
        const std::size_t k = class_count(classes), n = 1 + rng.index(2000);
        std::vector<std::size_t> truth(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) truth[i] = rng.index(k), pred[i] = rng.index(k);
        const auto m = tally(truth, pred, classes);
        tally_ok = tally_ok && m.counts == oracle::tally(truth, pred, k);
        emitted.push_back(m);
    }
    double worst = 0.0;
    std::size_t rows = 0;
    for (const auto& m : emitted)
        for (std::size_t r = 0; r < m.rates.size(); ++r) {
            std::size_t row_total = 0;
            for (auto c : m.counts[r]) row_total += c;
            if (row_total == 0) continue;
            double s = 0.0;
            for (double v : m.rates[r]) s += v;
            worst = std::max(worst, std::abs(s - 1.0));
            ++rows;
        }
    return {tally_ok && worst <= 1e-9,
            fmt::format("{} matrices, {} nonempty rows, worst |row sum - 1| {:.1e}; tally {} the brute-force count",
                        emitted.size(), rows, worst, tally_ok ? "matches" : "differs from")};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = io::hex64(io::fnv1a(io::read_file(e.path())));
    return files;
}

Outcome determinism() {
    TempDir dir("determinism");
    const auto root = dir.path / "run";
    const auto b = (root / "bundle").string();
    auto run_all = [&] {
        return pdmkit({"generate", "--out", b, "--set", "farm.devices=1", "--set", "farm.days=6", "--set",
                       "motor.rpms=300,340,380", "--set", "mems.recordings=10"}) == 0 &&
               pdmkit({"detect", "--data", b, "--out", (root / "detect").string(), "--set", "lstm.epochs=2"}) == 0 &&
               pdmkit({"classify", "--data", b, "--out", (root / "classify").string(), "--augment", "50"}) == 0 &&
               pdmkit({"classify", "--data", b, "--out", (root / "grid").string(), "--grid", "--set",
                       "classify.grid_augment=100"}) == 0;
    };
    if (!run_all()) return {false, "first run failed"};
    const auto first = snapshot(root);
    fs::remove_all(root);
    if (!run_all()) return {false, "second run failed"};
    const auto second = snapshot(root);
    std::size_t differing = 0;
    for (const auto& [name, hash] : first) differing += !second.contains(name) || second.at(name) != hash;
    return {differing == 0 && first.size() == second.size(),
            fmt::format("{} output files compared across reruns, {} differ", first.size(), differing)};
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;  // 0: no budget
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    // Optional arguments select criteria by number.
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const std::vector<Criterion> criteria{
        {1, "gradient-correctness", 60, gradients},
        {2, "ar-oracle-equivalence", 60, ar_oracle},
        {3, "anomaly-recall-precision", 300, anomaly_recall},
        {4, "forecaster-ordering", 900, forecaster_ordering},
        {5, "transfer-ordering", 600, transfer_ordering},
        {6, "augmentation-ordering", 1200, augmentation_ordering},
        {7, "feature-selection-direction", 0, feature_selection},
        {8, "binary-relaxation-direction", 0, binary_relaxation},
        {9, "confusion-matrix-validity", 0, confusion_validity},
        {10, "determinism", 0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.contains(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = c.budget_seconds == 0 || secs < c.budget_seconds;
        const bool pass = o.pass && in_budget;
        failures += !pass;
        std::cout << fmt::format("{} {:>2} {}: {} [{:.1f}s{}]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail, secs,
                                 in_budget ? "" : fmt::format(" over the {:.0f}s budget", c.budget_seconds))
                  << std::flush;
    }
    return failures == 0 ? 0 : 1;
}
