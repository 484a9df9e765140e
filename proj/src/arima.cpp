#include "pdm/arima.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "pdm/error.hpp"
#include "pdm/linalg.hpp"
#include "pdm/series.hpp"

namespace pdm::arima {

void ArimaConfig::validate() const {
    if (p < 0 || d < 0) throw InvalidInput("ARIMA orders must be nonnegative");
    if (q != 0) throw InvalidInput("moving-average order q must be 0");
    if (p + d < 1) throw InvalidInput("ARIMA needs p + d >= 1");
}

Vector difference(std::span<const double> series, int d) {
    if (d < 0) throw InvalidInput("differencing order must be nonnegative");
    if (series.size() <= static_cast<std::size_t>(d))
        throw InvalidInput(fmt::format("cannot difference {} values {} times", series.size(), d));
    Vector out(series.begin(), series.end());
    for (int k = 0; k < d; ++k) {
        for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
        out.pop_back();
    }
    return out;
}

Vector difference_heads(std::span<const double> series, int d) {
    if (series.size() <= static_cast<std::size_t>(d))
        throw InvalidInput(fmt::format("cannot difference {} values {} times", series.size(), d));
    Vector heads;
    Vector level(series.begin(), series.end());
    for (int k = 0; k < d; ++k) {
        heads.push_back(level.front());
        level = difference(level, 1);
    }
    return heads;
}

Vector integrate(std::span<const double> diffs, std::span<const double> heads) {
    Vector level(diffs.begin(), diffs.end());
    for (std::size_t k = heads.size(); k-- > 0;) {
        Vector up(level.size() + 1);
        up[0] = heads[k];
        for (std::size_t i = 0; i < level.size(); ++i) up[i + 1] = up[i] + level[i];
        level = std::move(up);
    }
    return level;
}

Vector autocorrelation(std::span<const double> series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (n <= max_lag + 1)
        throw InvalidInput(fmt::format("autocorrelation to lag {} needs more than {} samples", max_lag, max_lag + 1));
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    double denom = 0.0;
    for (double v : series) denom += (v - mean) * (v - mean);
    if (denom <= 0.0) throw DegenerateData("autocorrelation of a constant series is undefined");
    Vector acf(max_lag + 1);
    acf[0] = 1.0;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double s = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) s += (series[t] - mean) * (series[t + k] - mean);
        acf[k] = std::clamp(s / denom, -1.0, 1.0);
    }
    return acf;
}

int recommend_lag(std::span<const double> acf, double threshold, int fallback) {
    for (std::size_t k = 1; k < acf.size(); ++k)
        if (acf[k] < threshold) return static_cast<int>(k);
    return fallback;
}

namespace {

// Exact fit of a constant differenced series; the design matrix is singular
// here, but the least-squares problem still has a zero-residual solution.
bool constant_fit(const Vector& w, const ArimaConfig& cfg, ArModel& model) {
    const double c = w.front();
    for (double v : w)
        if (v != c) return false;
    model.coefficients.assign(static_cast<std::size_t>(cfg.p), 0.0);
    model.intercept = 0.0;
    if (cfg.include_intercept)
        model.intercept = c;
    else if (c != 0.0 && cfg.p > 0)
        model.coefficients[0] = 1.0;
    else if (c != 0.0)
        return false;
    return true;
}

}  // namespace

ArModel fit_ar(std::span<const double> series, const ArimaConfig& config) {
    config.validate();
    const auto p = static_cast<std::size_t>(config.p);
    const auto d = static_cast<std::size_t>(config.d);
    if (series.size() < p + d + 10)
        throw InvalidInput(fmt::format("fit_ar needs at least p + d + 10 = {} samples, got {}", p + d + 10,
                                       series.size()));
    for (double v : series)
        if (!std::isfinite(v)) throw InvalidInput("series contains a non-finite value");

    ArModel model;
    model.config = config;
    model.training_tail.assign(series.end() - static_cast<std::ptrdiff_t>(p + d), series.end());

    const Vector w = difference(series, config.d);
    if (constant_fit(w, config, model)) return model;

    const std::size_t k = p + (config.include_intercept ? 1 : 0);
    if (k == 0) return model;
    const std::size_t off = config.include_intercept ? 1 : 0;

    // Normal equations of the lagged design: row t -> [1, w_{t-1}, ..., w_{t-p}].
    Matrix gram(k, k);
    Vector rhs(k, 0.0);
    Vector x(k);
    for (std::size_t t = p; t < w.size(); ++t) {
        if (off) x[0] = 1.0;
        for (std::size_t i = 0; i < p; ++i) x[off + i] = w[t - 1 - i];
        for (std::size_t a = 0; a < k; ++a) {
            rhs[a] += x[a] * w[t];
            for (std::size_t b = a; b < k; ++b) gram(a, b) += x[a] * x[b];
        }
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < a; ++b) gram(a, b) = gram(b, a);

    linalg::SolveResult sol;
    try {
        sol = linalg::solve(gram, rhs, 1e12);
    } catch (const DegenerateData& e) {
        throw DegenerateData(fmt::format("AR({}) fit on {}-differenced series is degenerate "
                                         "(intercept={}, design columns: {}lags 1..{}): {}",
                                         p, d, config.include_intercept, off ? "intercept, " : "", p, e.what()));
    }
    if (off) model.intercept = sol.x[0];
    model.coefficients.assign(sol.x.begin() + static_cast<std::ptrdiff_t>(off), sol.x.end());
    return model;
}

double forecast_next(const ArModel& model, std::span<const double> history) {
    const auto p = static_cast<std::size_t>(model.config.p);
    const auto d = static_cast<std::size_t>(model.config.d);
    if (history.size() < p + d || history.empty())
        throw InvalidInput(fmt::format("forecast needs {} observations of history, got {}", std::max<std::size_t>(p + d, 1),
                                       history.size()));

    // AR prediction of the next d-th difference from the last p differences.
    double next_diff = model.intercept;
    if (p > 0) {
        auto tail = history.subspan(history.size() - (p + d));
        const Vector w = difference(tail, model.config.d);
        for (std::size_t i = 0; i < p; ++i) next_diff += model.coefficients[i] * w[p - 1 - i];
    }

    // x_{t+1} = next_diff - sum_{k=1..d} (-1)^k C(d,k) x_{t+1-k}
    double pred = next_diff;
    double binom = 1.0;
    for (std::size_t k = 1; k <= d; ++k) {
        binom = binom * static_cast<double>(d - k + 1) / static_cast<double>(k);
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        pred += sign * binom * history[history.size() - k];
    }
    return pred;
}

RollingForecast rolling_refit_predict(std::span<const double> series, const ArimaConfig& config,
                                      double train_fraction) {
    return rolling_refit_predict(series, config, train_length(series.size(), train_fraction));
}

RollingForecast rolling_refit_predict(std::span<const double> series, const ArimaConfig& config,
                                      std::size_t n_train) {
    if (n_train > series.size()) throw InvalidInput("training window longer than the series");
    RollingForecast out{n_train, {}, 0};
    out.predictions.reserve(series.size() - n_train);
    for (std::size_t t = n_train; t < series.size(); ++t) {
        auto window = series.subspan(t - n_train, n_train);
        ArModel model;
        try {
            model = fit_ar(window, config);
        } catch (const Error& e) {
            throw DegenerateData(fmt::format("rolling refit at test index {}: {}", t, e.what()));
        }
        ++out.fitted_models;
        out.predictions.push_back(forecast_next(model, window));
    }
    return out;
}

RollingForecast fixed_fit_predict(std::span<const double> series, const ArimaConfig& config,
                                  double train_fraction) {
    const std::size_t n_train = train_length(series.size(), train_fraction);
    RollingForecast out{n_train, {}, 0};
    if (n_train == series.size()) return out;
    const auto model = fit_ar(series.first(n_train), config);
    out.fitted_models = 1;
    for (std::size_t t = n_train; t < series.size(); ++t) out.predictions.push_back(forecast_next(model, series.first(t)));
    return out;
}

ModelArtifact ArModel::to_artifact() const {
    ModelArtifact art("arima");
    art.set("p", config.p);
    art.set("d", config.d);
    art.set("q", config.q);
    art.set("include_intercept", config.include_intercept ? 1 : 0);
    art.set("intercept", intercept);
    art.add_vector("coefficients", coefficients);
    art.add_vector("training_tail", training_tail);
    return art;
}

ArModel ArModel::from_artifact(const ModelArtifact& art) {
    art.expect_kind("arima");
    ArModel m;
    m.config.p = static_cast<int>(art.get_int("p"));
    m.config.d = static_cast<int>(art.get_int("d"));
    m.config.q = static_cast<int>(art.get_int("q"));
    m.config.include_intercept = art.get_int("include_intercept") != 0;
    m.config.validate();
    m.intercept = art.get_double("intercept");
    m.coefficients = art.vector("coefficients");
    m.training_tail = art.vector("training_tail");
    if (m.coefficients.size() != static_cast<std::size_t>(m.config.p))
        throw InvalidInput("arima artifact: coefficient count does not match p");
    return m;
}

}  // namespace pdm::arima
