#include "pdm/lstm.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdm/error.hpp"
#include "pdm/kernels.hpp"
#include "pdm/random.hpp"

namespace pdm::lstm {

namespace {

template <typename T>
inline T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

std::size_t gate_row(Gate g, std::size_t hidden) { return static_cast<std::size_t>(g) * hidden; }

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw InvalidInput(fmt::format("{} contains a non-finite value", what));
}

std::size_t timesteps(const LstmModel& m, std::size_t width) {
    if (width == 0 || width % m.input_dim != 0)
        throw InvalidInput(fmt::format("window of {} values is not a whole number of {}-dim steps", width,
                                       m.input_dim));
    return width / m.input_dim;
}

// Activations of one timestep for a batch, each B x H.
struct StepCache {
    Matrix z;  // B x (I + H): the [x_t; h_{t-1}] fed to the gates
    Matrix i, f, g, o, c, tanh_c, h;
};

struct BatchTrace {
    std::vector<StepCache> steps;
    Vector outputs;
};

BatchTrace run_batch(const LstmModel& m, const Matrix& windows, bool keep) {
    const std::size_t B = windows.rows;
    const std::size_t H = m.hidden_dim;
    const std::size_t I = m.input_dim;
    const std::size_t T = timesteps(m, windows.cols);
    BatchTrace trace;
    Matrix h(B, H), c(B, H), a;
    StepCache step;
    for (std::size_t t = 0; t < T; ++t) {
        step.z = Matrix(B, I + H);
        for (std::size_t b = 0; b < B; ++b) {
            auto zr = step.z.row(b);
            std::copy_n(windows.row(b).begin() + static_cast<std::ptrdiff_t>(t * I), I, zr.begin());
            std::copy_n(h.row(b).begin(), H, zr.begin() + static_cast<std::ptrdiff_t>(I));
        }
        kernels::affine(step.z, m.weights, m.bias, a);
        step.i = Matrix(B, H), step.f = Matrix(B, H), step.g = Matrix(B, H), step.o = Matrix(B, H);
        step.tanh_c = Matrix(B, H);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t j = 0; j < H; ++j) {
                const double ig = sigmoid(a(b, j));
                const double fg = sigmoid(a(b, H + j));
                const double gg = std::tanh(a(b, 2 * H + j));
                const double og = sigmoid(a(b, 3 * H + j));
                const double cn = fg * c(b, j) + ig * gg;
                const double tc = std::tanh(cn);
                step.i(b, j) = ig, step.f(b, j) = fg, step.g(b, j) = gg, step.o(b, j) = og;
                c(b, j) = cn;
                step.tanh_c(b, j) = tc;
                h(b, j) = og * tc;
            }
        }
        if (keep) {
            step.c = c;
            step.h = h;
            trace.steps.push_back(step);
        }
    }
    trace.outputs.resize(B);
    for (std::size_t b = 0; b < B; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < H; ++j) s += m.readout[j] * h(b, j);
        trace.outputs[b] = s + m.readout_bias;
    }
    return trace;
}

// Scalar-type generic loss used by the gradient oracle.
template <typename T>
T loss_in(const LstmModel& m, const SequenceBatch& batch) {
    const std::size_t H = m.hidden_dim, I = m.input_dim;
    const std::size_t T_steps = batch.windows.cols / I;
    T total = 0;
    std::vector<T> h(H), c(H), hn(H), z(I + H);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        std::fill(h.begin(), h.end(), T(0));
        std::fill(c.begin(), c.end(), T(0));
        for (std::size_t t = 0; t < T_steps; ++t) {
            for (std::size_t k = 0; k < I; ++k) z[k] = batch.windows(b, t * I + k);
            for (std::size_t k = 0; k < H; ++k) z[I + k] = h[k];
            for (std::size_t j = 0; j < H; ++j) {
                T pre[4];
                for (std::size_t g = 0; g < 4; ++g) {
                    T s = m.bias[g * H + j];
                    for (std::size_t k = 0; k < I + H; ++k) s += static_cast<T>(m.weights(g * H + j, k)) * z[k];
                    pre[g] = s;
                }
                const T ig = sigmoid(pre[0]), fg = sigmoid(pre[1]), gg = std::tanh(pre[2]), og = sigmoid(pre[3]);
                c[j] = fg * c[j] + ig * gg;
                hn[j] = og * std::tanh(c[j]);
            }
            h = hn;
        }
        T y = m.readout_bias;
        for (std::size_t j = 0; j < H; ++j) y += static_cast<T>(m.readout[j]) * h[j];
        const T e = y - static_cast<T>(batch.targets[b]);
        total += e * e;
    }
    return total / static_cast<T>(batch.size());
}

void check_batch(const LstmModel& m, const SequenceBatch& batch) {
    if (batch.size() == 0) throw InvalidInput("sequence batch is empty");
    if (batch.targets.size() != batch.size()) throw InvalidInput("sequence batch targets do not match windows");
    timesteps(m, batch.windows.cols);
    require_finite(batch.windows.data, "sequence windows");
    require_finite(batch.targets, "sequence targets");
}

}  // namespace

LstmModel LstmModel::initialize(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
    if (input_dim == 0 || hidden_dim == 0) throw InvalidInput("LSTM dimensions must be positive");
    LstmModel m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.weights = Matrix(4 * hidden_dim, input_dim + hidden_dim);
    m.bias.assign(4 * hidden_dim, 0.0);
    m.readout.assign(hidden_dim, 0.0);
    Rng rng(seed);
    const double gate_limit = std::sqrt(6.0 / static_cast<double>(input_dim + 2 * hidden_dim));
    for (auto& w : m.weights.data) w = rng.uniform(-gate_limit, gate_limit);
    const double out_limit = std::sqrt(6.0 / static_cast<double>(hidden_dim + 1));
    for (auto& w : m.readout) w = rng.uniform(-out_limit, out_limit);
    for (std::size_t j = 0; j < hidden_dim; ++j) m.bias[gate_row(Gate::Forget, hidden_dim) + j] = 1.0;
    return m;
}

Matrix LstmModel::gate_weights(Gate g) const {
    Matrix out(hidden_dim, input_dim + hidden_dim);
    const auto r0 = gate_row(g, hidden_dim);
    for (std::size_t r = 0; r < hidden_dim; ++r)
        std::copy_n(weights.row(r0 + r).begin(), out.cols, out.row(r).begin());
    return out;
}

Vector LstmModel::gate_bias(Gate g) const {
    const auto r0 = static_cast<std::ptrdiff_t>(gate_row(g, hidden_dim));
    return Vector(bias.begin() + r0, bias.begin() + r0 + static_cast<std::ptrdiff_t>(hidden_dim));
}

void LstmModel::set_gate(Gate g, const Matrix& w, const Vector& b) {
    if (w.rows != hidden_dim || w.cols != input_dim + hidden_dim || b.size() != hidden_dim)
        throw InvalidInput("gate parameter shape mismatch");
    const auto r0 = gate_row(g, hidden_dim);
    for (std::size_t r = 0; r < hidden_dim; ++r) std::copy_n(w.row(r).begin(), w.cols, weights.row(r0 + r).begin());
    std::copy(b.begin(), b.end(), bias.begin() + static_cast<std::ptrdiff_t>(r0));
}

void LstmModel::validate() const {
    if (input_dim == 0 || hidden_dim == 0) throw InvalidInput("LSTM dimensions must be positive");
    if (weights.rows != 4 * hidden_dim || weights.cols != input_dim + hidden_dim || bias.size() != 4 * hidden_dim ||
        readout.size() != hidden_dim)
        throw InvalidInput("LSTM parameter shapes do not match its dimensions");
}

LstmState cell_step(const LstmModel& m, std::span<const double> x, std::span<const double> h,
                    std::span<const double> c) {
    const std::size_t H = m.hidden_dim, I = m.input_dim;
    if (x.size() != I || h.size() != H || c.size() != H)
        throw InvalidInput(fmt::format("cell_step expects x[{}], h[{}], c[{}]; got {}, {}, {}", I, H, H, x.size(),
                                       h.size(), c.size()));
    require_finite(x, "cell input");
    require_finite(h, "hidden state");
    require_finite(c, "cell state");
    Vector z(I + H);
    std::copy(x.begin(), x.end(), z.begin());
    std::copy(h.begin(), h.end(), z.begin() + static_cast<std::ptrdiff_t>(I));
    Vector a(4 * H);
    for (std::size_t r = 0; r < 4 * H; ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < I + H; ++k) s += m.weights(r, k) * z[k];
        a[r] = s + m.bias[r];
    }
    LstmState out{Vector(H), Vector(H)};
    for (std::size_t j = 0; j < H; ++j) {
        const double ig = sigmoid(a[j]);
        const double fg = sigmoid(a[H + j]);
        const double gg = std::tanh(a[2 * H + j]);
        const double og = sigmoid(a[3 * H + j]);
        out.c[j] = fg * c[j] + ig * gg;
        out.h[j] = og * std::tanh(out.c[j]);
    }
    return out;
}

double predict_window(const LstmModel& m, std::span<const double> window) {
    const std::size_t T = timesteps(m, window.size());
    LstmState s{Vector(m.hidden_dim, 0.0), Vector(m.hidden_dim, 0.0)};
    for (std::size_t t = 0; t < T; ++t) s = cell_step(m, window.subspan(t * m.input_dim, m.input_dim), s.h, s.c);
    double y = 0.0;
    for (std::size_t j = 0; j < m.hidden_dim; ++j) y += m.readout[j] * s.h[j];
    return y + m.readout_bias;
}

double sequence_loss(const LstmModel& model, const SequenceBatch& batch) {
    check_batch(model, batch);
    auto trace = run_batch(model, batch.windows, false);
    double s = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const double e = trace.outputs[b] - batch.targets[b];
        s += e * e;
    }
    return s / static_cast<double>(batch.size());
}

Vector predict_batch(const LstmModel& model, const Matrix& windows) {
    require_finite(windows.data, "windows");
    if (windows.rows == 0) return {};
    return run_batch(model, windows, false).outputs;
}

LstmGradients bptt(const LstmModel& m, const SequenceBatch& batch) {
    check_batch(m, batch);
    const std::size_t B = batch.size(), H = m.hidden_dim, I = m.input_dim;
    auto trace = run_batch(m, batch.windows, true);
    const std::size_t T = trace.steps.size();

    LstmGradients g;
    g.weights = Matrix(4 * H, I + H);
    g.bias.assign(4 * H, 0.0);
    g.readout.assign(H, 0.0);

    Vector dy(B);
    for (std::size_t b = 0; b < B; ++b) dy[b] = 2.0 * (trace.outputs[b] - batch.targets[b]) / static_cast<double>(B);

    const Matrix& h_last = trace.steps.back().h;
    Matrix dh(B, H), dc(B, H);
    for (std::size_t b = 0; b < B; ++b) {
        g.readout_bias += dy[b];
        for (std::size_t j = 0; j < H; ++j) {
            g.readout[j] += dy[b] * h_last(b, j);
            dh(b, j) = dy[b] * m.readout[j];
        }
    }

    Matrix da(B, 4 * H), step_gw, dz;
    Vector step_gb(4 * H);
    for (std::size_t t = T; t-- > 0;) {
        const auto& s = trace.steps[t];
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t j = 0; j < H; ++j) {
                const double tc = s.tanh_c(b, j);
                const double c_prev = t > 0 ? trace.steps[t - 1].c(b, j) : 0.0;
                const double dct = dc(b, j) + dh(b, j) * s.o(b, j) * (1.0 - tc * tc);
                const double ig = s.i(b, j), fg = s.f(b, j), gg = s.g(b, j), og = s.o(b, j);
                da(b, j) = dct * gg * ig * (1.0 - ig);
                da(b, H + j) = dct * c_prev * fg * (1.0 - fg);
                da(b, 2 * H + j) = dct * ig * (1.0 - gg * gg);
                da(b, 3 * H + j) = dh(b, j) * tc * og * (1.0 - og);
                dc(b, j) = dct * fg;
            }
        }
        kernels::outer_accumulate(da, s.z, 1.0, step_gw, step_gb);
        for (std::size_t k = 0; k < g.weights.size(); ++k) g.weights.data[k] += step_gw.data[k];
        for (std::size_t k = 0; k < g.bias.size(); ++k) g.bias[k] += step_gb[k];
        if (t == 0) break;
        kernels::backproject(da, m.weights, dz);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t j = 0; j < H; ++j) dh(b, j) = dz(b, I + j);
    }
    return g;
}

double gradient_check(const LstmModel& model, const SequenceBatch& batch, double h) {
    if (!(h > 0.0 && h <= 1e-3)) throw InvalidInput("gradient-check step must lie in (0, 1e-3]");
    const auto analytic = bptt(model, batch);
    LstmModel probe = model;
    double worst = 0.0;
    auto compare = [&](double& param, double a) {
        const double saved = param;
        param = saved + h;
        const long double up = loss_in<long double>(probe, batch);
        param = saved - h;
        const long double down = loss_in<long double>(probe, batch);
        param = saved;
        const auto numeric = static_cast<double>((up - down) / (2.0L * h));
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    };
    for (std::size_t k = 0; k < probe.weights.size(); ++k) compare(probe.weights.data[k], analytic.weights.data[k]);
    for (std::size_t k = 0; k < probe.bias.size(); ++k) compare(probe.bias[k], analytic.bias[k]);
    for (std::size_t k = 0; k < probe.readout.size(); ++k) compare(probe.readout[k], analytic.readout[k]);
    compare(probe.readout_bias, analytic.readout_bias);
    return worst;
}

void sgd_step(LstmModel& m, const LstmGradients& g, double lr) {
    if (g.weights.rows != m.weights.rows || g.weights.cols != m.weights.cols || g.bias.size() != m.bias.size() ||
        g.readout.size() != m.readout.size())
        throw InvalidInput("LSTM gradient shape mismatch");
    kernels::axpy(lr, g.weights.data, m.weights.data);
    kernels::axpy(lr, g.bias, m.bias);
    kernels::axpy(lr, g.readout, m.readout);
    m.readout_bias -= lr * g.readout_bias;
}

double LstmForecaster::predict_next(std::span<const double> history) const {
    const std::size_t L = window.window_len;
    if (history.size() < L)
        throw InvalidInput(fmt::format("LSTM forecast needs {} observations of history, got {}", L, history.size()));
    Vector w(L);
    for (std::size_t k = 0; k < L; ++k) w[k] = (history[history.size() - L + k] - mean) / scale;
    return predict_window(model, w) * scale + mean;
}

LstmForecaster train_lstm(std::span<const double> training, const WindowSpec& window, const TrainConfig& cfg,
                          std::size_t hidden_dim) {
    window.validate();
    cfg.validate();
    const std::size_t L = window.window_len;
    if (training.size() <= L + 1)
        throw InvalidInput(fmt::format("LSTM training region of {} samples is too short for window {}",
                                       training.size(), L));
    require_finite(training, "training series");

    LstmForecaster f;
    f.window = window;
    f.config = cfg;
    double mean = std::accumulate(training.begin(), training.end(), 0.0) / static_cast<double>(training.size());
    double var = 0.0;
    for (double v : training) var += (v - mean) * (v - mean);
    var /= static_cast<double>(training.size());
    f.mean = mean;
    f.scale = var > 0.0 ? std::sqrt(var) : 1.0;

    SequenceBatch all;
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + L < training.size(); s += window.stride) starts.push_back(s);
    all.windows = Matrix(starts.size(), L);
    all.targets.resize(starts.size());
    for (std::size_t r = 0; r < starts.size(); ++r) {
        for (std::size_t k = 0; k < L; ++k) all.windows(r, k) = (training[starts[r] + k] - f.mean) / f.scale;
        all.targets[r] = (training[starts[r] + L] - f.mean) / f.scale;
    }
    const std::size_t n = all.size();
    if (static_cast<std::size_t>(cfg.batch_size) > n)
        throw InvalidInput(fmt::format("batch_size {} exceeds {} training windows", cfg.batch_size, n));

    f.model = LstmModel::initialize(1, hidden_dim, derive_seed(cfg.seed, {1}));
    Rng rng(derive_seed(cfg.seed, {2}));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    SequenceBatch batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t len = std::min(bs, n - start);
            batch.windows = Matrix(len, L);
            batch.targets.resize(len);
            for (std::size_t i = 0; i < len; ++i) {
                std::copy_n(all.windows.row(order[start + i]).begin(), L, batch.windows.row(i).begin());
                batch.targets[i] = all.targets[order[start + i]];
            }
            sgd_step(f.model, bptt(f.model, batch), cfg.learning_rate);
        }
        const double l = sequence_loss(f.model, all);
        if (!std::isfinite(l)) throw TrainingFailure(fmt::format("LSTM loss became non-finite at epoch {}", epoch));
        f.loss_history.push_back(l);
    }
    return f;
}

Vector forecast_series(const LstmForecaster& f, std::span<const double> series, std::size_t first_test) {
    const std::size_t L = f.window.window_len;
    if (first_test < L)
        throw InvalidInput(fmt::format("first test index {} leaves less than {} warm-up observations", first_test, L));
    if (first_test > series.size()) throw InvalidInput("first test index beyond the series");
    Matrix windows(series.size() - first_test, L);
    for (std::size_t r = 0; r < windows.rows; ++r)
        for (std::size_t k = 0; k < L; ++k) windows(r, k) = (series[first_test + r - L + k] - f.mean) / f.scale;
    Vector out = predict_batch(f.model, windows);
    for (auto& v : out) v = v * f.scale + f.mean;
    return out;
}

ModelArtifact LstmForecaster::to_artifact() const {
    ModelArtifact art("lstm");
    art.set("input_dim", model.input_dim);
    art.set("hidden_dim", model.hidden_dim);
    art.set("window_len", window.window_len);
    art.set("stride", window.stride);
    art.set("norm_mean", mean);
    art.set("norm_scale", scale);
    art.set("train.epochs", config.epochs);
    art.set("train.batch_size", config.batch_size);
    art.set("train.learning_rate", config.learning_rate);
    art.set("train.seed", std::to_string(config.seed));
    art.set("train.final_loss", loss_history.empty() ? std::string("none") : fmt::format("{}", loss_history.back()));
    art.add_array("gates", model.weights);
    art.add_vector("gate_bias", model.bias);
    art.add_vector("readout", model.readout);
    art.add_vector("readout_bias", Vector{model.readout_bias});
    return art;
}

LstmForecaster LstmForecaster::from_artifact(const ModelArtifact& art) {
    art.expect_kind("lstm");
    LstmForecaster f;
    f.model.input_dim = static_cast<std::size_t>(art.get_int("input_dim"));
    f.model.hidden_dim = static_cast<std::size_t>(art.get_int("hidden_dim"));
    f.model.weights = art.array("gates");
    f.model.bias = art.vector("gate_bias");
    f.model.readout = art.vector("readout");
    auto rb = art.vector("readout_bias");
    if (rb.size() != 1) throw InvalidInput("lstm artifact: readout_bias must be scalar");
    f.model.readout_bias = rb[0];
    f.model.validate();
    f.window.window_len = static_cast<std::size_t>(art.get_int("window_len"));
    f.window.stride = static_cast<std::size_t>(art.get_int("stride"));
    f.mean = art.get_double("norm_mean");
    f.scale = art.get_double("norm_scale");
    f.config.epochs = static_cast<int>(art.get_int("train.epochs"));
    f.config.batch_size = static_cast<int>(art.get_int("train.batch_size"));
    f.config.learning_rate = art.get_double("train.learning_rate");
    f.config.seed = std::stoull(art.get("train.seed"));
    f.config.loss = LossKind::MSE;
    return f;
}

}  // namespace pdm::lstm
