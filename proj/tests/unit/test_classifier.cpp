#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "../support/oracles.hpp"
#include "pdm/classifier.hpp"
#include "pdm/error.hpp"
#include "pdm/random.hpp"
#include "pdm/simulator.hpp"

using namespace pdm;
using namespace pdm::classifier;
using features::kXZ;

namespace {

std::vector<LabeledWindow> clusters(std::uint64_t seed, std::size_t per_class, double spread) {
    Rng rng(seed);
    std::vector<LabeledWindow> out;
    for (std::size_t i = 0; i < per_class; ++i)
        for (auto h : kHealthStates) {
            LabeledWindow w{Vector(4), 300, h, SensorKind::Mems, kXZ};
            for (std::size_t j = 0; j < 4; ++j)
                w.features[j] = (j % 3 == static_cast<std::size_t>(h) ? 10.0 : 0.0) + spread * rng.normal();
            out.push_back(std::move(w));
        }
    return out;
}

std::vector<LabeledWindow> mems_windows(std::vector<int> rpms, std::size_t recordings, std::uint64_t seed) {
    sim::MotorSpec s;
    s.rpm_list = std::move(rpms);
    s.recordings_per_condition = recordings;
    s.seed = seed;
    return features::window_recordings(sim::gen_motor(s), {10, 10}, kXZ);
}

DefectClassifier constant_classifier(std::size_t dim, std::size_t favored) {
    DenseLayer layer{Matrix(3, dim), Vector(3, 0.0)};
    layer.biases[favored] = 1.0;
    DefectClassifier c;
    c.network = DenseNetwork({dim, 3}, {layer}, OutputActivation::Softmax);
    c.encoder = features::FeatureEncoder::identity(kXZ, dim / 2);
    return c;
}

TrainConfig seeded(std::uint64_t seed) {
    TrainConfig c;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("class sets") {
    CHECK(class_names(ClassSet::ThreeClass) == std::vector<std::string>{"Normal", "NearFailure", "Failure"});
    CHECK(class_names(ClassSet::Binary) == std::vector<std::string>{"Normal", "NotNormal"});
    CHECK(class_index(Health::Failure, ClassSet::ThreeClass) == 2);
    CHECK(class_index(Health::NearFailure, ClassSet::Binary) == 1);
    CHECK(class_index(Health::NotNormal, ClassSet::Binary) == 1);
    CHECK_THROWS_AS(class_index(Health::NotNormal, ClassSet::ThreeClass), InvalidInput);
}

TEST_CASE("preset ladder") {
    const auto& ladder = preset_ladder();
    REQUIRE(ladder.size() == 7);
    CHECK(ladder[0].name == "none");
    CHECK(!ladder[0].normalize);
    CHECK(ladder[0].axes == features::kAllAxes);
    CHECK(ladder[1].axes == kXZ);
    CHECK(ladder[2].normalize);
    CHECK(ladder[3].hidden == std::vector<std::size_t>{100, 100});
    CHECK(ladder[4].hidden.size() == 3);
    CHECK(ladder[5].epochs == 100);
    CHECK(ladder[6].batch_size == 100);
    CHECK(preset("baseline").name == "normalization");
    CHECK(preset("baseline").hidden == std::vector<std::size_t>{50, 50});
    CHECK_THROWS_AS(preset("huge"), InvalidInput);
}

TEST_CASE("argmax ties and logit rescaling") {
    CHECK(argmax(Vector{0.2, 0.5, 0.5}) == 1);
    CHECK(argmax(Vector{1.0, 1.0, 1.0}) == 0);
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        Vector logits(3);
        for (auto& v : logits) v = rng.normal(0, 5);
        const double temperature = rng.uniform(0.01, 100.0);
        Vector scaled = logits, p1 = logits;
        for (auto& v : scaled) v /= temperature;
        softmax(p1);
        softmax(scaled);
        CHECK(argmax(scaled) == argmax(logits));
        CHECK(argmax(p1) == argmax(logits));
    }
}

TEST_CASE("predict") {
    auto c = constant_classifier(4, 0);
    c.network.layers()[0].biases = Vector(3, 0.0);
    auto p = c.predict(Vector{1, 2, 3, 4});
    CHECK(p.cls == 0);
    for (double v : p.probabilities) CHECK(std::abs(v - 1.0 / 3.0) < 1e-15);

    auto trained = train_dnn_r(clusters(1, 30, 1.0), seeded(1), {8, 8});
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        Vector x(4);
        for (auto& v : x) v = rng.normal(0, 50);
        auto q = trained.predict(x);
        double s = 0;
        for (double v : q.probabilities) s += v;
        CHECK(std::abs(s - 1.0) < 1e-9);
        CHECK(q.cls == argmax(q.probabilities));
    }
    CHECK_THROWS_AS(trained.predict(Vector{1, 2}), InvalidInput);
}

TEST_CASE("separated clusters") {
    auto split = split_windows(clusters(7, 100, 0.5), 0.7, 3);
    CHECK(split.train.size() == 210);
    CHECK(split.test.size() == 90);

    // Nearest-centroid oracle on the same split.
    std::map<int, Vector> centroid;
    std::map<int, double> count;
    for (const auto& w : split.train) {
        auto& c = centroid[static_cast<int>(w.label)];
        c.resize(4, 0.0);
        for (std::size_t j = 0; j < 4; ++j) c[j] += w.features[j];
        count[static_cast<int>(w.label)] += 1;
    }
    std::size_t oracle_hits = 0;
    for (const auto& w : split.test) {
        int best = -1;
        double best_d = 1e300;
        for (auto& [label, c] : centroid) {
            double d = 0;
            for (std::size_t j = 0; j < 4; ++j) d += std::pow(w.features[j] - c[j] / count[label], 2);
            if (d < best_d) best_d = d, best = label;
        }
        oracle_hits += best == static_cast<int>(w.label);
    }
    REQUIRE(oracle_hits == split.test.size());

    auto c = train_dnn_r(split.train, seeded(4), {50, 50});
    CHECK(c.provenance == Provenance::TrainedFresh);
    CHECK(confusion(c, split.test).accuracy >= 0.99);
}

TEST_CASE("piezo windows, three classes, baseline architecture") {
    sim::MotorSpec s;
    s.sensor_kind = SensorKind::Piezo;
    s.recordings_per_condition = 10;
    s.recording_seconds = 1.0;
    s.seed = 5;
    auto windows = features::window_recordings(sim::gen_motor(s), {320, 320}, kXZ);
    auto split = split_windows(windows, 0.7, 1);
    const auto p = preset("baseline");
    TrainConfig cfg = seeded(11);
    cfg.epochs = p.epochs;
    cfg.batch_size = p.batch_size;
    auto c = train_dnn_r(split.train, cfg, p.hidden);
    const auto m = confusion(c, split.test);
    MESSAGE("piezo DNN-R accuracy " << m.accuracy);
    CHECK(m.accuracy >= 0.75);

    auto again = train_dnn_r(split.train, cfg, p.hidden);
    CHECK(confusion(again, split.test).counts == m.counts);
}

TEST_CASE("training needs two classes") {
    auto ws = clusters(3, 10, 1.0);
    std::vector<LabeledWindow> normal;
    for (const auto& w : ws)
        if (w.label == Health::Normal) normal.push_back(w);
    CHECK_THROWS_AS(train_dnn_r(normal, seeded(1), {4}), InvalidInput);
    CHECK_THROWS_AS(train_dnn_r(std::vector<LabeledWindow>{}, seeded(1), {4}), InvalidInput);
}

TEST_CASE("transfer") {
    auto source_data = clusters(5, 40, 1.0);
    const auto source = train_dnn_r(source_data, seeded(2), {8, 8});
    const auto snapshot = source;

    auto pure = transfer(source, clusters(6, 10, 1.0), std::nullopt);
    CHECK(pure.provenance == Provenance::Transferred);
    CHECK(pure.network == source.network);
    CHECK(pure.encoder == source.encoder);

    auto empty = transfer(source, std::vector<LabeledWindow>{}, std::nullopt);
    for (const auto& w : source_data) CHECK(empty.predict(w.features).probabilities == source.predict(w.features).probabilities);

    auto tuned = transfer(source, clusters(6, 10, 1.0), fine_tune_config(seeded(3)));
    CHECK(tuned.provenance == Provenance::Transferred);
    CHECK(!(tuned.network == source.network));
    CHECK(source == snapshot);
    CHECK(fine_tune_config(seeded(3)).learning_rate == 0.001);

    // Longer windows reconcile by decimation; incompatible ones are rejected naming both sizes.
    std::vector<LabeledWindow> longer{{Vector(8, 1.0), 300, Health::Normal, SensorKind::Piezo, kXZ}};
    auto aligned = reconcile(source.encoder, longer);
    CHECK(aligned[0].features.size() == 4);
    std::vector<LabeledWindow> odd{{Vector(6, 1.0), 300, Health::Normal, SensorKind::Piezo, kXZ}};
    try {
        transfer(source, odd, seeded(1));
        FAIL("expected InvalidInput");
    } catch (const InvalidInput& e) {
        const std::string msg = e.what();
        CHECK(msg.find("dimensionality 6") != std::string::npos);
        CHECK(msg.find("dimensionality 4") != std::string::npos);
    }
}

TEST_CASE("transfer from piezo helps a sparse mems set") {
    auto mems = mems_windows({300, 340, 380}, 6, 1);
    auto split = split_windows(mems, 0.7, 2);
    const TrainConfig cfg = seeded(9);
    const double fresh = confusion(train_dnn_r(split.train, cfg, {50, 50}), split.test).accuracy;

    sim::MotorSpec p;
    p.rpm_list = {300, 340, 380};
    p.sensor_kind = SensorKind::Piezo;
    p.recordings_per_condition = 5;
    p.seed = 99;
    auto piezo = features::decimate_to(features::window_recordings(sim::gen_motor(p), {3200, 320}, kXZ), 10);
    auto source = train_dnn_r(piezo, cfg, {50, 50});
    const double tl = confusion(transfer(source, split.train, fine_tune_config(cfg)), split.test).accuracy;
    MESSAGE("DNN-R " << fresh << " DNN-TL " << tl);
    CHECK(tl >= fresh);
}

TEST_CASE("confusion counting") {
    Rng rng(44);
    std::vector<std::size_t> truth(1000), pred(1000);
    for (std::size_t i = 0; i < 1000; ++i) truth[i] = rng.index(3), pred[i] = rng.index(3);
    const auto m = tally(truth, pred, ClassSet::ThreeClass);
    CHECK(m.counts == oracle::tally(truth, pred, 3));
    double indicator_mean = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < 1000; ++i) hits += truth[i] == pred[i];
    indicator_mean = static_cast<double>(hits) / 1000.0;
    CHECK(m.accuracy == indicator_mean);
    for (const auto& row : m.rates) {
        double s = 0;
        for (double v : row) s += v;
        CHECK(std::abs(s - 1.0) <= 1e-9);
    }

    const auto perfect = tally(truth, truth, ClassSet::ThreeClass);
    CHECK(perfect.accuracy == 1.0);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(perfect.rates[r][c] == (r == c ? 1.0 : 0.0));

    auto balanced = clusters(1, 20, 1.0);
    const auto constant = confusion(constant_classifier(4, 0), balanced);
    CHECK(constant.accuracy == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const auto partial = tally(std::vector<std::size_t>{0, 0}, std::vector<std::size_t>{0, 1}, ClassSet::ThreeClass);
    CHECK(partial.rates[1] == std::vector<double>{0, 0, 0});
    CHECK(partial.to_table().starts_with("true\\predicted,Normal,NearFailure,Failure\nNormal,0.5,0.5,0\n"));
    CHECK_THROWS_AS(tally(std::vector<std::size_t>{3}, std::vector<std::size_t>{0}, ClassSet::ThreeClass), InvalidInput);
    CHECK_THROWS_AS(confusion(constant_classifier(4, 0), std::vector<LabeledWindow>{}), InvalidInput);
}

TEST_CASE("binarize") {
    std::vector<LabeledWindow> ws;
    for (int i = 0; i < 10; ++i) ws.push_back({Vector(2), 300, Health::Normal, SensorKind::Mems, kXZ});
    const auto all_normal = binarize(ws);
    for (const auto& w : all_normal) CHECK(w.label == Health::Normal);
    for (int i = 0; i < 5; ++i) ws.push_back({Vector(2), 300, Health::NearFailure, SensorKind::Mems, kXZ});
    for (int i = 0; i < 5; ++i) ws.push_back({Vector(2), 300, Health::Failure, SensorKind::Mems, kXZ});
    const auto b = binarize(ws);
    CHECK(b.size() == 20);
    CHECK(std::count_if(b.begin(), b.end(), [](auto& w) { return w.label == Health::Normal; }) == 10);
    CHECK(std::count_if(b.begin(), b.end(), [](auto& w) { return w.label == Health::NotNormal; }) == 10);
}

TEST_CASE("binary relaxation does not lose accuracy") {
    auto split = split_windows(mems_windows({320, 360}, 20, 3), 0.7, 4);
    const TrainConfig cfg = seeded(5);
    const double three = confusion(train_dnn_r(split.train, cfg, {50, 50}), split.test).accuracy;
    const double two =
        confusion(train_dnn_r(binarize(split.train), cfg, {50, 50}, ClassSet::Binary), binarize(split.test)).accuracy;
    MESSAGE("three-class " << three << " binary " << two);
    CHECK(two >= three);
}

TEST_CASE("rpm grid") {
    std::map<int, std::vector<LabeledWindow>> by_rpm;
    for (auto& w : mems_windows({sim::kGridRpms.begin(), sim::kGridRpms.end()}, 20, 6)) by_rpm[w.rpm].push_back(w);

    GridOptions opt;
    opt.train = seeded(2);
    opt.seed = 3;
    opt.include_augmented = true;
    opt.interpolants_per_rpm = 300;
    const auto g = rpm_generalization_grid(by_rpm, opt);
    MESSAGE(g.to_table());
    REQUIRE(g.accuracy.size() == 6);
    REQUIRE(g.augmented.has_value());
    std::size_t dominant = 0, cells = 0;
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 6; ++c) {
            if (r == c) continue;
            ++cells;
            dominant += g.accuracy[r][r] >= g.accuracy[r][c];
        }
    CHECK(dominant >= 0.8 * cells);
    CHECK(*g.augmented_average >= *std::max_element(g.row_average.begin(), g.row_average.end()) - 0.02);
    CHECK(g.to_table().starts_with("train\\test,100,200,300,400,500,600,average\n"));
    CHECK(g.to_table().find("\naugmented,") != std::string::npos);
    CHECK(rpm_generalization_grid(by_rpm, opt).accuracy == g.accuracy);

    // A single rpm gives the within-rpm accuracy.
    std::map<int, std::vector<LabeledWindow>> one{{300, by_rpm[300]}};
    opt.include_augmented = false;
    const auto g1 = rpm_generalization_grid(one, opt);
    REQUIRE(g1.accuracy.size() == 1);
    auto split = split_windows(by_rpm[300], 0.7, derive_seed(3, {300}));
    TrainConfig cell = seeded(derive_seed(2, {0}));
    CHECK(g1.accuracy[0][0] == confusion(train_dnn_r(split.train, cell, {50, 50}), split.test).accuracy);
}

TEST_CASE("classifier artifact round trip") {
    auto c = train_dnn_r(clusters(8, 20, 1.0), seeded(1), {6});
    auto back = DefectClassifier::from_artifact(ModelArtifact::deserialize(c.to_artifact().serialize()));
    CHECK(back == c);
    CHECK_THROWS_AS(DefectClassifier::from_artifact(ModelArtifact("lstm")), InvalidInput);
}
