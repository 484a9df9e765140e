#include "pdm/dense.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pdm/error.hpp"
#include "pdm/kernels.hpp"
#include "pdm/random.hpp"

namespace pdm {

std::string to_string(OutputActivation a) { return a == OutputActivation::Softmax ? "softmax" : "identity"; }
std::string to_string(LossKind l) { return l == LossKind::CrossEntropy ? "cross_entropy" : "mse"; }

OutputActivation parse_output_activation(const std::string& s) {
    if (s == "softmax") return OutputActivation::Softmax;
    if (s == "identity") return OutputActivation::Identity;
    throw InvalidInput("unknown output activation '" + s + "'");
}

LossKind parse_loss(const std::string& s) {
    if (s == "cross_entropy") return LossKind::CrossEntropy;
    if (s == "mse") return LossKind::MSE;
    throw InvalidInput("unknown loss '" + s + "'");
}

void TrainConfig::validate() const {
    if (epochs < 0) throw InvalidInput("epochs must be nonnegative");
    if (batch_size <= 0) throw InvalidInput("batch_size must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw InvalidInput("learning_rate must be positive and finite");
}

DenseNetwork::DenseNetwork(std::vector<std::size_t> layer_sizes, std::vector<DenseLayer> layers,
                           OutputActivation output, std::uint64_t init_seed)
    : sizes_(std::move(layer_sizes)), layers_(std::move(layers)), output_(output), init_seed_(init_seed) {
    if (sizes_.size() < 2) throw InvalidInput("a network needs at least input and output sizes");
    if (std::find(sizes_.begin(), sizes_.end(), 0u) != sizes_.end())
        throw InvalidInput("layer sizes must be positive");
    if (layers_.size() != sizes_.size() - 1) throw InvalidInput("layer count does not match layer sizes");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& l = layers_[k];
        if (l.weights.rows != sizes_[k + 1] || l.weights.cols != sizes_[k] || l.biases.size() != sizes_[k + 1])
            throw InvalidInput(fmt::format("layer {} has shape {}x{} (+{}), expected {}x{}", k, l.weights.rows,
                                           l.weights.cols, l.biases.size(), sizes_[k + 1], sizes_[k]));
    }
}

DenseNetwork DenseNetwork::initialize(std::vector<std::size_t> layer_sizes, OutputActivation output,
                                      std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw InvalidInput("a network needs at least input and output sizes");
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        const auto fan_in = layer_sizes[k];
        const auto fan_out = layer_sizes[k + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer layer{Matrix(fan_out, fan_in), Vector(fan_out, 0.0)};
        for (auto& w : layer.weights.data) w = rng.uniform(-limit, limit);
        layers.push_back(std::move(layer));
    }
    return DenseNetwork(std::move(layer_sizes), std::move(layers), output, seed);
}

std::size_t DenseNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
    return n;
}

void softmax(std::span<double> z) {
    if (z.empty()) return;
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (auto& v : z) v /= sum;
}

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidInput(fmt::format("{} contains a non-finite value", what));
}

Matrix single_row(std::span<const double> x) {
    Matrix m(1, x.size());
    std::copy(x.begin(), x.end(), m.data.begin());
    return m;
}

// Activations of every layer; acts[0] is the input, acts.back() the logits.
struct ForwardTrace {
    std::vector<Matrix> acts;
};

ForwardTrace trace_forward(const DenseNetwork& net, const Matrix& x) {
    if (x.cols != net.input_size())
        throw InvalidInput(fmt::format("input has {} features, network expects {}", x.cols, net.input_size()));
    ForwardTrace t;
    const auto& layers = net.layers();
    t.acts.reserve(layers.size() + 1);
    t.acts.push_back(x);
    for (std::size_t k = 0; k < layers.size(); ++k) {
        Matrix z;
        kernels::affine(t.acts.back(), layers[k].weights, layers[k].biases, z);
        if (k + 1 < layers.size())
            for (auto& v : z.data) v = v > 0.0 ? v : 0.0;
        t.acts.push_back(std::move(z));
    }
    return t;
}

void apply_output(const DenseNetwork& net, Matrix& logits) {
    if (net.output_activation() == OutputActivation::Softmax)
        for (std::size_t r = 0; r < logits.rows; ++r) softmax(logits.row(r));
}

void check_batch(const DenseNetwork& net, const Dataset& batch, LossKind loss) {
    if (batch.inputs.rows == 0) throw InvalidInput("batch is empty");
    if (batch.targets.rows != batch.inputs.rows || batch.targets.cols != net.output_size())
        throw InvalidInput(fmt::format("targets are {}x{}, expected {}x{}", batch.targets.rows, batch.targets.cols,
                                       batch.inputs.rows, net.output_size()));
    if (loss == LossKind::CrossEntropy && net.output_activation() != OutputActivation::Softmax)
        throw InvalidInput("cross-entropy loss requires a softmax output");
    require_finite(batch.inputs.data, "batch inputs");
    require_finite(batch.targets.data, "batch targets");
}

double loss_from_logits(const DenseNetwork& net, const Matrix& logits, const Matrix& targets, LossKind loss) {
    double total = 0.0;
    const std::size_t n = logits.rows;
    const std::size_t m = logits.cols;
    Vector row(m);
    for (std::size_t r = 0; r < n; ++r) {
        auto z = logits.row(r);
        auto t = targets.row(r);
        if (loss == LossKind::CrossEntropy) {
            const double mx = *std::max_element(z.begin(), z.end());
            double s = 0.0;
            for (double v : z) s += std::exp(v - mx);
            const double lse = mx + std::log(s);
            for (std::size_t j = 0; j < m; ++j)
                if (t[j] != 0.0) total -= t[j] * (z[j] - lse);
        } else {
            std::copy(z.begin(), z.end(), row.begin());
            if (net.output_activation() == OutputActivation::Softmax) softmax(row);
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += (row[j] - t[j]) * (row[j] - t[j]);
            total += s / static_cast<double>(m);
        }
    }
    return total / static_cast<double>(n);
}

}  // namespace

Matrix DenseNetwork::forward_batch(const Matrix& x) const {
    require_finite(x.data, "input");
    auto t = trace_forward(*this, x);
    Matrix out = std::move(t.acts.back());
    apply_output(*this, out);
    return out;
}

Vector DenseNetwork::forward(std::span<const double> x) const { return forward_batch(single_row(x)).data; }

Vector DenseNetwork::logits(std::span<const double> x) const {
    require_finite(x, "input");
    return trace_forward(*this, single_row(x)).acts.back().data;
}

ModelArtifact DenseNetwork::to_artifact() const {
    ModelArtifact art("dense");
    std::string sizes;
    for (std::size_t k = 0; k < sizes_.size(); ++k) sizes += (k ? " " : "") + std::to_string(sizes_[k]);
    art.set("layer_sizes", sizes);
    art.set("hidden_activation", std::string("relu"));
    art.set("output_activation", to_string(output_));
    art.set("init_seed", std::to_string(init_seed_));
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        art.add_array(fmt::format("w{}", k), layers_[k].weights);
        art.add_vector(fmt::format("b{}", k), layers_[k].biases);
    }
    return art;
}

DenseNetwork DenseNetwork::from_artifact(const ModelArtifact& art) {
    std::vector<std::size_t> sizes;
    std::string text = art.get("layer_sizes");
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto sp = text.find(' ', pos);
        if (sp == std::string::npos) sp = text.size();
        sizes.push_back(static_cast<std::size_t>(std::stoull(text.substr(pos, sp - pos))));
        pos = sp + 1;
    }
    if (sizes.size() < 2) throw InvalidInput("artifact layer_sizes too short");
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k)
        layers.push_back({art.array(fmt::format("w{}", k)), art.vector(fmt::format("b{}", k))});
    return DenseNetwork(std::move(sizes), std::move(layers), parse_output_activation(art.get("output_activation")),
                        std::stoull(art.get("init_seed")));
}

double batch_loss(const DenseNetwork& net, const Dataset& batch, LossKind loss) {
    check_batch(net, batch, loss);
    auto t = trace_forward(net, batch.inputs);
    return loss_from_logits(net, t.acts.back(), batch.targets, loss);
}

DenseGradients backprop(const DenseNetwork& net, const Dataset& batch, LossKind loss) {
    check_batch(net, batch, loss);
    auto trace = trace_forward(net, batch.inputs);
    const auto& layers = net.layers();
    const std::size_t n = batch.inputs.rows;
    const std::size_t m = net.output_size();
    const double inv_n = 1.0 / static_cast<double>(n);

    // dL/d(logits)
    Matrix delta = trace.acts.back();
    for (std::size_t r = 0; r < n; ++r) {
        auto d = delta.row(r);
        auto t = batch.targets.row(r);
        const bool soft = net.output_activation() == OutputActivation::Softmax;
        if (soft) softmax(d);
        if (loss == LossKind::CrossEntropy) {
            double tsum = 0.0;
            for (double v : t) tsum += v;
            for (std::size_t j = 0; j < m; ++j) d[j] = (d[j] * tsum - t[j]) * inv_n;
        } else {
            const double scale = 2.0 * inv_n / static_cast<double>(m);
            if (soft) {
                // Softmax Jacobian: dz_j = p_j (g_j - sum_k g_k p_k)
                double gp = 0.0;
                for (std::size_t j = 0; j < m; ++j) gp += scale * (d[j] - t[j]) * d[j];
                for (std::size_t j = 0; j < m; ++j) d[j] = d[j] * (scale * (d[j] - t[j]) - gp);
            } else {
                for (std::size_t j = 0; j < m; ++j) d[j] = scale * (d[j] - t[j]);
            }
        }
    }

    DenseGradients g;
    g.weights.resize(layers.size());
    g.biases.resize(layers.size());
    for (std::size_t k = layers.size(); k-- > 0;) {
        g.biases[k].assign(layers[k].biases.size(), 0.0);
        kernels::outer_accumulate(delta, trace.acts[k], 1.0, g.weights[k], g.biases[k]);
        if (k == 0) break;
        Matrix prev;
        kernels::backproject(delta, layers[k].weights, prev);
        const auto& act = trace.acts[k];  // ReLU output of layer k-1
        for (std::size_t i = 0; i < prev.size(); ++i)
            if (act.data[i] <= 0.0) prev.data[i] = 0.0;
        delta = std::move(prev);
    }
    return g;
}

void sgd_step(DenseNetwork& net, const DenseGradients& grads, double learning_rate) {
    auto& layers = net.layers();
    if (grads.weights.size() != layers.size() || grads.biases.size() != layers.size())
        throw InvalidInput("gradient layer count does not match network");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (grads.weights[k].rows != layers[k].weights.rows || grads.weights[k].cols != layers[k].weights.cols ||
            grads.biases[k].size() != layers[k].biases.size())
            throw InvalidInput(fmt::format("gradient shape mismatch at layer {}", k));
        kernels::axpy(learning_rate, grads.weights[k].data, layers[k].weights.data);
        kernels::axpy(learning_rate, grads.biases[k], layers[k].biases);
    }
}

ModelArtifact TrainOutcome::artifact() const {
    auto art = network.to_artifact();
    art.set("train.epochs", config.epochs);
    art.set("train.batch_size", config.batch_size);
    art.set("train.learning_rate", config.learning_rate);
    art.set("train.seed", std::to_string(config.seed));
    art.set("train.loss", to_string(config.loss));
    art.set("train.final_loss", loss_history.empty() ? std::string("none") : fmt::format("{}", loss_history.back()));
    return art;
}

TrainOutcome train(DenseNetwork net, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t n = data.size();
    if (n == 0) throw InvalidInput("training data is empty");
    check_batch(net, data, cfg.loss);
    if (static_cast<std::size_t>(cfg.batch_size) > n)
        throw InvalidInput(fmt::format("batch_size {} exceeds training-set size {}", cfg.batch_size, n));

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    TrainOutcome out{std::move(net), {}, cfg};
    Dataset batch;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t len = std::min(bs, n - start);
            batch.inputs = Matrix(len, data.inputs.cols);
            batch.targets = Matrix(len, data.targets.cols);
            for (std::size_t i = 0; i < len; ++i) {
                auto src = order[start + i];
                std::copy_n(data.inputs.row(src).begin(), data.inputs.cols, batch.inputs.row(i).begin());
                std::copy_n(data.targets.row(src).begin(), data.targets.cols, batch.targets.row(i).begin());
            }
            sgd_step(out.network, backprop(out.network, batch, cfg.loss), cfg.learning_rate);
        }
        const double l = batch_loss(out.network, data, cfg.loss);
        if (!std::isfinite(l)) throw TrainingFailure(fmt::format("loss became non-finite at epoch {}", epoch));
        out.loss_history.push_back(l);
    }
    return out;
}

namespace {

// Loss evaluated entirely in extended precision. Used only by the gradient
// check so that central differences are not dominated by cancellation.
long double extended_loss(const DenseNetwork& net, const Dataset& batch, LossKind loss) {
    const auto& layers = net.layers();
    long double total = 0.0L;
    std::vector<long double> a, z;
    for (std::size_t r = 0; r < batch.inputs.rows; ++r) {
        auto x = batch.inputs.row(r);
        a.assign(x.begin(), x.end());
        for (std::size_t k = 0; k < layers.size(); ++k) {
            const auto& l = layers[k];
            z.assign(l.weights.rows, 0.0L);
            for (std::size_t i = 0; i < l.weights.rows; ++i) {
                long double s = l.biases[i];
                for (std::size_t j = 0; j < l.weights.cols; ++j) s += static_cast<long double>(l.weights(i, j)) * a[j];
                z[i] = (k + 1 < layers.size() && s < 0.0L) ? 0.0L : s;
            }
            a.swap(z);
        }
        auto t = batch.targets.row(r);
        const std::size_t m = a.size();
        const bool soft = net.output_activation() == OutputActivation::Softmax;
        long double mx = *std::max_element(a.begin(), a.end());
        long double se = 0.0L;
        for (auto v : a) se += std::exp(v - mx);
        const long double lse = mx + std::log(se);
        if (loss == LossKind::CrossEntropy) {
            for (std::size_t j = 0; j < m; ++j)
                if (t[j] != 0.0) total -= t[j] * (a[j] - lse);
        } else {
            long double s = 0.0L;
            for (std::size_t j = 0; j < m; ++j) {
                const long double y = soft ? std::exp(a[j] - lse) : a[j];
                s += (y - t[j]) * (y - t[j]);
            }
            total += s / static_cast<long double>(m);
        }
    }
    return total / static_cast<long double>(batch.inputs.rows);
}

}  // namespace

double gradient_check_against(const DenseNetwork& net, const Dataset& batch, LossKind loss, double h,
                              const DenseGradients& analytic) {
    if (!(h > 0.0 && h <= 1e-3)) throw InvalidInput("gradient-check step must lie in (0, 1e-3]");
    check_batch(net, batch, loss);
    DenseNetwork probe = net;
    double worst = 0.0;
    auto compare = [&](double& param, double a) {
        const double saved = param;
        param = saved + h;
        const long double up = extended_loss(probe, batch, loss);
        param = saved - h;
        const long double down = extended_loss(probe, batch, loss);
        param = saved;
        const auto numeric = static_cast<double>((up - down) / (2.0L * h));
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    };
    auto& layers = probe.layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
        for (std::size_t i = 0; i < layers[k].weights.size(); ++i)
            compare(layers[k].weights.data[i], analytic.weights.at(k).data.at(i));
        for (std::size_t i = 0; i < layers[k].biases.size(); ++i)
            compare(layers[k].biases[i], analytic.biases.at(k).at(i));
    }
    return worst;
}

double numerical_gradient_check(const DenseNetwork& net, const Dataset& batch, LossKind loss, double h) {
    return gradient_check_against(net, batch, loss, h, backprop(net, batch, loss));
}

Matrix one_hot(std::span<const std::size_t> classes, std::size_t num_classes) {
    Matrix m(classes.size(), num_classes);
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] >= num_classes) throw InvalidInput("class index out of range for one-hot encoding");
        m(i, classes[i]) = 1.0;
    }
    return m;
}

}  // namespace pdm
