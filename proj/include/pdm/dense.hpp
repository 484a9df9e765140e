#pragma once

// Fully connected feed-forward network: ReLU hidden layers, Softmax or
// Identity head, trained with plain minibatch SGD.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdm/artifact.hpp"
#include "pdm/matrix.hpp"

namespace pdm {

enum class HiddenActivation { ReLU };
enum class OutputActivation { Softmax, Identity };
enum class LossKind { CrossEntropy, MSE };

std::string to_string(OutputActivation a);
std::string to_string(LossKind l);
OutputActivation parse_output_activation(const std::string& s);
LossKind parse_loss(const std::string& s);

struct DenseLayer {
    Matrix weights;  // fan_out x fan_in
    Vector biases;   // fan_out

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct DenseGradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

/// A batch of row-aligned samples.
struct Dataset {
    Matrix inputs;
    Matrix targets;

    std::size_t size() const { return inputs.rows; }
};

struct TrainConfig {
    int epochs = 50;
    int batch_size = 50;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::CrossEntropy;

    /// Throws InvalidInput if a field is out of range.
    void validate() const;
};

class DenseNetwork {
public:
    DenseNetwork() = default;
    DenseNetwork(std::vector<std::size_t> layer_sizes, std::vector<DenseLayer> layers, OutputActivation output,
                 std::uint64_t init_seed = 0);

    /// Glorot-uniform weights, zero biases, drawn from `seed`.
    static DenseNetwork initialize(std::vector<std::size_t> layer_sizes, OutputActivation output,
                                   std::uint64_t seed);

    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    HiddenActivation hidden_activation() const { return HiddenActivation::ReLU; }
    OutputActivation output_activation() const { return output_; }
    std::uint64_t init_seed() const { return init_seed_; }
    std::size_t input_size() const { return sizes_.front(); }
    std::size_t output_size() const { return sizes_.back(); }
    std::size_t parameter_count() const;

    Vector forward(std::span<const double> x) const;
    Matrix forward_batch(const Matrix& x) const;
    /// Pre-activation of the output layer (before Softmax).
    Vector logits(std::span<const double> x) const;

    ModelArtifact to_artifact() const;
    static DenseNetwork from_artifact(const ModelArtifact& art);

    friend bool operator==(const DenseNetwork&, const DenseNetwork&) = default;

private:
    std::vector<std::size_t> sizes_;
    std::vector<DenseLayer> layers_;
    OutputActivation output_ = OutputActivation::Softmax;
    std::uint64_t init_seed_ = 0;
};

/// In-place numerically stable softmax.
void softmax(std::span<double> logits);

/// Mean loss over the batch.
double batch_loss(const DenseNetwork& net, const Dataset& batch, LossKind loss);

/// Gradient of the mean batch loss with respect to every weight and bias.
DenseGradients backprop(const DenseNetwork& net, const Dataset& batch, LossKind loss);

/// w <- w - lr * g for every parameter.
void sgd_step(DenseNetwork& net, const DenseGradients& grads, double learning_rate);

struct TrainOutcome {
    DenseNetwork network;
    std::vector<double> loss_history;  // full-data loss after each epoch
    TrainConfig config;

    ModelArtifact artifact() const;
};

TrainOutcome train(DenseNetwork net, const Dataset& data, const TrainConfig& cfg);

/// max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
/// numeric by central differences of step h.
double numerical_gradient_check(const DenseNetwork& net, const Dataset& batch, LossKind loss, double h);

/// Same comparison against caller-supplied analytic gradients.
double gradient_check_against(const DenseNetwork& net, const Dataset& batch, LossKind loss, double h,
                              const DenseGradients& analytic);

/// Row-wise one-hot encoding of class indices.
Matrix one_hot(std::span<const std::size_t> classes, std::size_t num_classes);

}  // namespace pdm
