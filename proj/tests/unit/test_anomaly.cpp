#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdm/anomaly.hpp"
#include "pdm/error.hpp"
#include "pdm/random.hpp"
#include "pdm/simulator.hpp"

using namespace pdm;
using namespace pdm::anomaly;

namespace {

sim::FarmSpec temperature(std::size_t spikes) {
    auto spec = sim::FarmSpec::defaults(sim::FarmSensorType::Temperature, 21);
    spec.anomalies.count = spikes;
    return spec;
}

Forecaster small_lstm() {
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.05;
    cfg.loss = LossKind::MSE;
    cfg.seed = 3;
    return lstm_forecaster({10, 1}, cfg, 16);
}

Forecaster echo_forecaster() {
    // Predicts the previous observation.
    return {"echo", [](std::span<const double> s, std::size_t first) {
                return Vector(s.begin() + static_cast<std::ptrdiff_t>(first) - 1, s.end() - 1);
            }};
}

}  // namespace

TEST_CASE("flag examples") {
    const AnomalyRule rule;
    CHECK(rule.threshold == 0.2);
    CHECK(std::abs(relative_error(10, 7.9, rule) - 0.21) < 1e-12);
    CHECK(flag(10, 7.9, rule));
    CHECK(!flag(10, 9, rule));
    CHECK(!flag(10, 12, rule));
    CHECK(flag(10, 12.5, rule));
    for (double t : {1e-9, 0.2, 5.0}) CHECK(!flag(3.7, 3.7, {t}));
    CHECK(relative_error(0.0, 1e-7, rule) == doctest::Approx(0.1));
    CHECK_THROWS_AS(AnomalyRule{0.0}.validate(), InvalidInput);
    CHECK_THROWS_AS((AnomalyRule{0.2, 0.0}.validate()), InvalidInput);
}

TEST_CASE("flag is symmetric and the one-sided option is not") {
    Rng rng(5);
    const AnomalyRule rule;
    for (int i = 0; i < 1000; ++i) {
        const double p = rng.uniform(-100, 100);
        const double delta = rng.uniform(0, 1);
        if (std::abs(p) < 1e-3) continue;
        CHECK(flag(p, p * (1 + delta), rule) == flag(p, p * (1 - delta), rule));
    }
    const AnomalyRule one_sided{0.2, 1e-6, false};
    CHECK(flag(10, 7.9, one_sided));
    CHECK(!flag(10, 12.1, one_sided));
}

TEST_CASE("raising the threshold never adds flags") {
    Rng rng(8);
    Vector p(500), a(500);
    for (std::size_t i = 0; i < 500; ++i) p[i] = rng.normal(10, 2), a[i] = p[i] * rng.uniform(0.5, 1.5);
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (double t = 0.01; t < 1.0; t += 0.01) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < 500; ++i) n += flag(p[i], a[i], {t});
        CHECK(n <= previous);
        previous = n;
    }
}

TEST_CASE("rmse") {
    CHECK(rmse(Vector{1, 2, 3}, Vector{1, 2, 3}) == 0.0);
    CHECK(rmse(Vector{0, 0}, Vector{3, 4}) == std::sqrt(12.5));
    Rng rng(9);
    Vector p(200), a(200);
    for (std::size_t i = 0; i < 200; ++i) p[i] = rng.normal(), a[i] = rng.normal();
    const double base = rmse(p, a);
    CHECK(base >= 0.0);
    std::vector<std::size_t> order(200);
    for (std::size_t i = 0; i < 200; ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));
    Vector ps(200), as(200);
    for (std::size_t i = 0; i < 200; ++i) ps[i] = p[order[i]], as[i] = a[order[i]];
    CHECK(std::abs(rmse(ps, as) - base) <= 1e-12 * base);
    CHECK_THROWS_AS(rmse(Vector{1}, Vector{1, 2}), InvalidInput);
    CHECK_THROWS_AS(rmse(Vector{}, Vector{}), InvalidInput);
}

TEST_CASE("detect with a known forecaster") {
    Vector s{10, 10, 10, 10, 10, 10, 10, 13, 13, 10};
    auto rep = detect(s, echo_forecaster(), 0.6, {});
    CHECK(rep.first_test_index == 6);
    CHECK(rep.test_count() == 4);
    CHECK(rep.flagged_indices() == std::vector<std::size_t>{7, 9});
    CHECK(rep.flagged[0].relative_error == doctest::Approx(0.3));
    for (const auto& f : rep.flagged) CHECK(f.relative_error > rep.rule.threshold);
    CHECK(rep.rmse == rmse(rep.predictions, rep.actuals));
    CHECK(rep.to_table({}) ==
          "index,timestamp,predicted,actual,relative_error\n"
          "7,7,10,13,0.3\n"
          "9,9,13,10,0.23076923076923078\n"
          "# summary model=echo first_test_index=6 test_samples=4 rmse=2.1213203435596424 flagged=2 threshold=0.2\n");

    Forecaster short_one{"short", [](std::span<const double>, std::size_t) { return Vector{1.0}; }};
    CHECK_THROWS_AS(detect(s, short_one, 0.6, {}), TrainingFailure);
    Forecaster nan_one{"nan", [](std::span<const double>, std::size_t) { return Vector(4, std::nan("")); }};
    CHECK_THROWS_AS(detect(s, nan_one, 0.6, {}), TrainingFailure);
    CHECK_THROWS_AS(detect(s, echo_forecaster(), 1.0, {}), InvalidInput);
}

TEST_CASE("clean farm series raises few flags") {
    const auto clean = sim::gen_farm(temperature(0));
    for (const auto& f : {arima_forecaster({}), small_lstm()}) {
        const auto rep = detect(clean.values, f, 0.66, {});
        MESSAGE(f.name << " flagged " << rep.flagged.size() << " of " << rep.test_count());
        CHECK(static_cast<double>(rep.flagged.size()) <= 0.02 * static_cast<double>(rep.test_count()));
        CHECK(detect(clean.values, f, 0.66, {1e9}).flagged.empty());
    }
}

TEST_CASE("injected spikes are all flagged") {
    const auto series = sim::gen_farm(temperature(5));
    const auto truth = series.anomaly_indices();
    REQUIRE(truth.size() == 5);
    for (const auto& f : {arima_forecaster({}), small_lstm()}) {
        const auto rep = detect(series.values, f, 0.66, {});
        const auto got = rep.flagged_indices();
        for (auto i : truth) CHECK(std::find(got.begin(), got.end(), i) != got.end());
        CHECK(rep.rmse == rmse(rep.predictions, rep.actuals));
        CHECK(rep.rmse >= 0.0);
    }
}
