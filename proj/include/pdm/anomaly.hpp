#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pdm/arima.hpp"
#include "pdm/dense.hpp"
#include "pdm/matrix.hpp"
#include "pdm/window.hpp"

namespace pdm::anomaly {

/// Flags a sample when |predicted - actual| / max(|predicted|, floor) exceeds
/// the threshold. With two_sided = false only over-predictions count, i.e.
/// (predicted - actual) / max(|predicted|, floor) > threshold.
struct AnomalyRule {
    double threshold = 0.2;
    double denominator_floor = 1e-6;
    bool two_sided = true;

    void validate() const;
};

double relative_error(double predicted, double actual, const AnomalyRule& rule);
bool flag(double predicted, double actual, const AnomalyRule& rule);

/// sqrt(mean((p - a)^2)); throws InvalidInput on empty or mismatched input.
double rmse(std::span<const double> predictions, std::span<const double> actuals);

struct FlaggedSample {
    std::size_t index = 0;  // position in the full series
    double predicted = 0.0;
    double actual = 0.0;
    double relative_error = 0.0;
};

struct AnomalyReport {
    std::string model_type;
    std::size_t first_test_index = 0;
    Vector predictions;
    Vector actuals;
    std::vector<FlaggedSample> flagged;
    double rmse = 0.0;
    AnomalyRule rule;

    std::size_t test_count() const { return predictions.size(); }
    std::vector<std::size_t> flagged_indices() const;

    /// "index,timestamp,predicted,actual,relative_error" rows plus a trailing
    /// "# summary" line. `timestamps` may be empty (index is used instead).
    std::string to_table(std::span<const std::int64_t> timestamps) const;
};

/// A one-step forecaster: given the whole series and the first test index,
/// returns one prediction per test index using only earlier observations.
struct Forecaster {
    std::string name;
    std::function<Vector(std::span<const double>, std::size_t)> predict;
};

/// Rolling per-sample ARIMA refit.
Forecaster arima_forecaster(const arima::ArimaConfig& config);

/// LSTM trained once on the training region.
Forecaster lstm_forecaster(const WindowSpec& window, const TrainConfig& cfg, std::size_t hidden_dim);

AnomalyReport detect(std::span<const double> series, const Forecaster& forecaster, double split_fraction,
                     const AnomalyRule& rule);

}  // namespace pdm::anomaly
