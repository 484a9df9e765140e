#pragma once

// Single-layer LSTM for one-step prediction of a scalar series.
//
// Gate parameters are packed into one (4H x (I + H)) matrix, rows grouped by
// gate in the order input, forget, cell, output; each block is the usual
// (hidden x (input + hidden)) gate matrix acting on [x_t; h_{t-1}].

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pdm/artifact.hpp"
#include "pdm/dense.hpp"
#include "pdm/matrix.hpp"
#include "pdm/window.hpp"

namespace pdm::lstm {

enum class Gate : std::size_t { Input = 0, Forget = 1, Cell = 2, Output = 3 };

struct LstmModel {
    std::size_t input_dim = 1;
    std::size_t hidden_dim = 64;
    Matrix weights;  // 4H x (I + H)
    Vector bias;     // 4H
    Vector readout;  // H
    double readout_bias = 0.0;

    /// Glorot-uniform weights, zero biases except forget gate = 1.
    static LstmModel initialize(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed);

    Matrix gate_weights(Gate g) const;
    Vector gate_bias(Gate g) const;
    void set_gate(Gate g, const Matrix& w, const Vector& b);

    void validate() const;
    friend bool operator==(const LstmModel&, const LstmModel&) = default;
};

struct LstmState {
    Vector h;
    Vector c;
};

/// One step of the gate equations.
LstmState cell_step(const LstmModel& model, std::span<const double> x, std::span<const double> h,
                    std::span<const double> c);

/// Runs a window (timesteps x input_dim, row-major) from zero state and applies the readout.
double predict_window(const LstmModel& model, std::span<const double> window);

/// Windows as rows (window_len * input_dim columns) with scalar targets.
struct SequenceBatch {
    Matrix windows;
    Vector targets;

    std::size_t size() const { return windows.rows; }
};

struct LstmGradients {
    Matrix weights;
    Vector bias;
    Vector readout;
    double readout_bias = 0.0;
};

/// Mean squared one-step error over the batch.
double sequence_loss(const LstmModel& model, const SequenceBatch& batch);

/// Batched predictions; bitwise equal to predict_window row by row.
Vector predict_batch(const LstmModel& model, const Matrix& windows);

/// Full-window backpropagation through time of sequence_loss.
LstmGradients bptt(const LstmModel& model, const SequenceBatch& batch);

/// Max relative error of bptt against central differences (same formula as the dense check).
double gradient_check(const LstmModel& model, const SequenceBatch& batch, double h);

void sgd_step(LstmModel& model, const LstmGradients& grads, double learning_rate);

/// Trained predictor with the z-score constants of its training region.
struct LstmForecaster {
    LstmModel model;
    WindowSpec window;
    double mean = 0.0;
    double scale = 1.0;
    TrainConfig config;
    std::vector<double> loss_history;

    /// Prediction of the value following `history` (uses its last window_len values).
    double predict_next(std::span<const double> history) const;

    ModelArtifact to_artifact() const;
    static LstmForecaster from_artifact(const ModelArtifact& art);
};

/// Trains on every window of `training` (windows at `window.stride`, target = next value).
LstmForecaster train_lstm(std::span<const double> training, const WindowSpec& window, const TrainConfig& cfg,
                          std::size_t hidden_dim = 64);

/// One prediction per index in [first_test, series.size()), each from the
/// window_len observations strictly before it. Batched and parallel.
Vector forecast_series(const LstmForecaster& f, std::span<const double> series, std::size_t first_test);

}  // namespace pdm::lstm
