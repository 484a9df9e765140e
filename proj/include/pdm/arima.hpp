#pragma once

// ARIMA(p, d, 0) forecasting: differencing, autocorrelation-based lag choice,
// conditional least-squares AR fitting, one-step forecasts and the per-sample
// rolling refit loop.

#include <cstddef>
#include <span>
#include <vector>

#include "pdm/artifact.hpp"
#include "pdm/matrix.hpp"

namespace pdm::arima {

struct ArimaConfig {
    int p = 10;
    int d = 1;
    int q = 0;  // moving-average terms are not supported
    bool include_intercept = true;

    void validate() const;
    friend bool operator==(const ArimaConfig&, const ArimaConfig&) = default;
};

struct ArModel {
    ArimaConfig config;
    Vector coefficients;  // lag 1 first
    double intercept = 0.0;
    Vector training_tail;  // last p + d raw observations of the fit window

    ModelArtifact to_artifact() const;
    static ArModel from_artifact(const ModelArtifact& art);

    friend bool operator==(const ArModel&, const ArModel&) = default;
};

/// d-th order differences; output has series.size() - d entries.
Vector difference(std::span<const double> series, int d);

/// First element of each intermediate difference level: x_0, (dx)_0, ..., (d^{d-1}x)_0.
Vector difference_heads(std::span<const double> series, int d);

/// Inverse of difference() given the heads from difference_heads().
Vector integrate(std::span<const double> diffs, std::span<const double> heads);

/// Sample autocorrelation at lags 0..max_lag (biased estimator, lag 0 == 1).
Vector autocorrelation(std::span<const double> series, std::size_t max_lag);

/// Smallest lag whose autocorrelation falls below `threshold`; `fallback` if none does.
int recommend_lag(std::span<const double> acf, double threshold = 0.9, int fallback = 10);

ArModel fit_ar(std::span<const double> series, const ArimaConfig& config);

/// Undifferenced one-step prediction of the value following `history`.
double forecast_next(const ArModel& model, std::span<const double> history);

struct RollingForecast {
    std::size_t first_test_index = 0;
    Vector predictions;
    std::size_t fitted_models = 0;
};

/// Refit on a constant-length window ending just before each test index, then
/// predict that index. Train length is floor(n * train_fraction).
RollingForecast rolling_refit_predict(std::span<const double> series, const ArimaConfig& config,
                                      double train_fraction);

/// Same, with an explicit training-window length; n_train == series.size()
/// yields an empty test region.
RollingForecast rolling_refit_predict(std::span<const double> series, const ArimaConfig& config,
                                      std::size_t n_train);

/// A single fit on the training region, then one-step forecasts from the
/// observed history over the test region.
RollingForecast fixed_fit_predict(std::span<const double> series, const ArimaConfig& config,
                                  double train_fraction);

}  // namespace pdm::arima
