#include "pdm/anomaly.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "pdm/error.hpp"
#include "pdm/io.hpp"
#include "pdm/lstm.hpp"
#include "pdm/series.hpp"

namespace pdm::anomaly {

void AnomalyRule::validate() const {
    if (!(threshold > 0.0)) throw InvalidInput("anomaly threshold must be positive");
    if (!(denominator_floor > 0.0)) throw InvalidInput("anomaly denominator floor must be positive");
}

double relative_error(double predicted, double actual, const AnomalyRule& rule) {
    const double denom = std::max(std::abs(predicted), rule.denominator_floor);
    const double diff = predicted - actual;
    return (rule.two_sided ? std::abs(diff) : diff) / denom;
}

bool flag(double predicted, double actual, const AnomalyRule& rule) {
    return relative_error(predicted, actual, rule) > rule.threshold;
}

double rmse(std::span<const double> predictions, std::span<const double> actuals) {
    if (predictions.size() != actuals.size())
        throw InvalidInput(fmt::format("rmse: {} predictions vs {} actuals", predictions.size(), actuals.size()));
    if (predictions.empty()) throw InvalidInput("rmse of an empty set");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double e = predictions[i] - actuals[i];
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(predictions.size()));
}

std::vector<std::size_t> AnomalyReport::flagged_indices() const {
    std::vector<std::size_t> out;
    for (const auto& f : flagged) out.push_back(f.index);
    return out;
}

std::string AnomalyReport::to_table(std::span<const std::int64_t> timestamps) const {
    std::string out = "index,timestamp,predicted,actual,relative_error\n";
    for (const auto& f : flagged) {
        const auto ts = timestamps.empty() ? static_cast<std::int64_t>(f.index) : timestamps[f.index];
        out += fmt::format("{},{},{},{},{}\n", f.index, ts, io::format_double(f.predicted),
                           io::format_double(f.actual), io::format_double(f.relative_error));
    }
    out += fmt::format("# summary model={} first_test_index={} test_samples={} rmse={} flagged={} threshold={}\n",
                       model_type, first_test_index, test_count(), io::format_double(rmse), flagged.size(),
                       io::format_double(rule.threshold));
    return out;
}

Forecaster arima_forecaster(const arima::ArimaConfig& config) {
    config.validate();
    return {"arima", [config](std::span<const double> series, std::size_t first_test) {
                return arima::rolling_refit_predict(series, config, first_test).predictions;
            }};
}

Forecaster lstm_forecaster(const WindowSpec& window, const TrainConfig& cfg, std::size_t hidden_dim) {
    window.validate();
    cfg.validate();
    return {"lstm", [=](std::span<const double> series, std::size_t first_test) {
                auto f = lstm::train_lstm(series.first(first_test), window, cfg, hidden_dim);
                return lstm::forecast_series(f, series, first_test);
            }};
}

AnomalyReport detect(std::span<const double> series, const Forecaster& forecaster, double split_fraction,
                     const AnomalyRule& rule) {
    rule.validate();
    const std::size_t first = train_length(series.size(), split_fraction);
    AnomalyReport rep;
    rep.model_type = forecaster.name;
    rep.first_test_index = first;
    rep.rule = rule;
    try {
        rep.predictions = forecaster.predict(series, first);
    } catch (const Error& e) {
        throw TrainingFailure(fmt::format("{} forecaster failed on test region starting at sample {}: {}",
                                          forecaster.name, first, e.what()));
    }
    rep.actuals.assign(series.begin() + static_cast<std::ptrdiff_t>(first), series.end());
    if (rep.predictions.size() != rep.actuals.size())
        throw TrainingFailure(fmt::format("{} forecaster returned {} predictions for {} test samples",
                                          forecaster.name, rep.predictions.size(), rep.actuals.size()));
    for (std::size_t i = 0; i < rep.predictions.size(); ++i) {
        const double p = rep.predictions[i], a = rep.actuals[i];
        if (!std::isfinite(p))
            throw TrainingFailure(fmt::format("{} forecaster produced a non-finite prediction at sample {}",
                                              forecaster.name, first + i));
        if (flag(p, a, rule)) rep.flagged.push_back({first + i, p, a, relative_error(p, a, rule)});
    }
    rep.rmse = rmse(rep.predictions, rep.actuals);
    return rep;
}

}  // namespace pdm::anomaly
