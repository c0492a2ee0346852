#include "oihrl/nn/dense_net.hpp"

#include <Eigen/SparseCore>

#include <cmath>
#include <string>

#include "oihrl/common/errors.hpp"

namespace oihrl::nn {

namespace {

void apply_activation(Activation act, const Vector &pre, Vector &out) {
    if (act == Activation::relu) {
        out = pre.cwiseMax(0.0);
    } else {
        out = pre;
    }
}

}    // namespace

DenseNet::DenseNet(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) {
        throw InvalidInput("DenseNet requires at least one layer");
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto &l = layers_[i];
        if (l.bias.size() != l.weights.rows()) {
            throw InvalidInput("layer " + std::to_string(i) + ": bias length does not match weight rows");
        }
        if (l.weights.rows() == 0 || l.weights.cols() == 0) {
            throw InvalidInput("layer " + std::to_string(i) + ": zero-sized weight matrix");
        }
        if (i > 0 && layers_[i - 1].output_dim() != l.input_dim()) {
            throw InvalidInput("layer " + std::to_string(i) + ": input dim " + std::to_string(l.input_dim())
                               + " does not chain with previous output dim "
                               + std::to_string(layers_[i - 1].output_dim()));
        }
    }
}

auto glorot_bound(std::size_t fan_in, std::size_t fan_out) -> double {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void glorot_fill(Matrix &m, std::size_t fan_in, std::size_t fan_out, Rng &rng) {
    const double bound = glorot_bound(fan_in, fan_out);
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            m(i, j) = (2.0 * uniform01(rng) - 1.0) * bound;
        }
    }
}

auto DenseNet::glorot(std::span<const std::size_t> widths, Activation hidden, Activation output, Rng &rng)
    -> DenseNet {
    if (widths.size() < 2) {
        throw InvalidInput("DenseNet::glorot needs at least input and output widths");
    }
    std::vector<Layer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        Layer l;
        const auto in = widths[i];
        const auto out = widths[i + 1];
        l.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
        glorot_fill(l.weights, in, out, rng);
        l.bias = Vector::Zero(static_cast<Eigen::Index>(out));
        l.activation = (i + 2 == widths.size()) ? output : hidden;
        layers.push_back(std::move(l));
    }
    return DenseNet(std::move(layers));
}

auto DenseNet::input_dim() const noexcept -> Eigen::Index {
    return layers_.empty() ? 0 : layers_.front().input_dim();
}

auto DenseNet::output_dim() const noexcept -> Eigen::Index {
    return layers_.empty() ? 0 : layers_.back().output_dim();
}

auto DenseNet::parameter_count() const noexcept -> std::size_t {
    std::size_t n = 0;
    for (const auto &l : layers_) {
        n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    }
    return n;
}

auto DenseNet::all_finite() const noexcept -> bool {
    for (const auto &l : layers_) {
        if (!l.weights.allFinite() || !l.bias.allFinite()) {
            return false;
        }
    }
    return true;
}

namespace {

// Binary state encodings are sparse; sparse products pay off below this density.
template <typename Derived>
auto mostly_zero(const Eigen::MatrixBase<Derived> &m) -> bool {
    return m.size() > 0 && static_cast<double>((m.array() != 0.0).count()) < 0.1 * static_cast<double>(m.size());
}

}    // namespace

auto forward_trace(const DenseNet &net, const Vector &input) -> ForwardTrace {
    if (input.size() != net.input_dim()) {
        throw InvalidInput("forward: input length " + std::to_string(input.size()) + " != net input dim "
                           + std::to_string(net.input_dim()));
    }
    ForwardTrace trace;
    const auto &layers = net.layers();
    trace.activations.reserve(layers.size() + 1);
    trace.pre_activations.reserve(layers.size());
    trace.activations.push_back(input);
    for (const auto &l : layers) {
        Vector pre = l.weights * trace.activations.back() + l.bias;
        Vector out;
        apply_activation(l.activation, pre, out);
        trace.pre_activations.push_back(std::move(pre));
        trace.activations.push_back(std::move(out));
    }
    return trace;
}

auto forward(const DenseNet &net, const Vector &input) -> Vector {
    if (input.size() != net.input_dim()) {
        throw InvalidInput("forward: input length " + std::to_string(input.size()) + " != net input dim "
                           + std::to_string(net.input_dim()));
    }
    Vector x = input;
    bool first = true;
    for (const auto &l : net.layers()) {
        Vector pre = l.bias;
        if (first && mostly_zero(x)) {
            for (Eigen::Index j = 0; j < x.size(); ++j) {
                if (x[j] != 0.0) {
                    pre.noalias() += x[j] * l.weights.col(j);
                }
            }
        } else {
            pre.noalias() += l.weights * x;
        }
        first = false;
        apply_activation(l.activation, pre, x);
    }
    return x;
}

auto Gradients::zeros_like(const DenseNet &net) -> Gradients {
    Gradients g;
    g.layers.reserve(net.layers().size());
    for (const auto &l : net.layers()) {
        g.layers.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()), Vector::Zero(l.bias.size())});
    }
    return g;
}

auto Gradients::operator+=(const Gradients &other) -> Gradients & {
    if (other.layers.size() != layers.size()) {
        throw InvalidInput("Gradients::operator+=: layer count mismatch");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].weights += other.layers[i].weights;
        layers[i].bias += other.layers[i].bias;
    }
    return *this;
}

auto Gradients::operator*=(double scale) -> Gradients & {
    for (auto &l : layers) {
        l.weights *= scale;
        l.bias *= scale;
    }
    return *this;
}

auto Gradients::all_finite() const noexcept -> bool {
    for (const auto &l : layers) {
        if (!l.weights.allFinite() || !l.bias.allFinite()) {
            return false;
        }
    }
    return true;
}

auto Gradients::congruent_with(const DenseNet &net) const noexcept -> bool {
    if (layers.size() != net.layers().size()) {
        return false;
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto &a = layers[i];
        const auto &b = net.layers()[i];
        if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols()
            || a.bias.size() != b.bias.size()) {
            return false;
        }
    }
    return true;
}

void accumulate_backward(const DenseNet &net, const ForwardTrace &trace, const Vector &output_grad, Gradients &acc) {
    const auto &layers = net.layers();
    if (trace.pre_activations.size() != layers.size() || trace.activations.size() != layers.size() + 1) {
        throw InvalidInput("backward: forward trace does not belong to this network");
    }
    if (output_grad.size() != net.output_dim()) {
        throw InvalidInput("backward: output gradient length " + std::to_string(output_grad.size())
                           + " != net output dim " + std::to_string(net.output_dim()));
    }
    if (!acc.congruent_with(net)) {
        throw InvalidInput("backward: gradient accumulator is not congruent with the network");
    }
    Vector delta = output_grad;
    for (std::size_t idx = layers.size(); idx-- > 0;) {
        const auto &l = layers[idx];
        if (l.activation == Activation::relu) {
            // Subgradient at 0 is 0.
            delta = (trace.pre_activations[idx].array() > 0.0).select(delta, 0.0);
        }
        acc.layers[idx].weights.noalias() += delta * trace.activations[idx].transpose();
        acc.layers[idx].bias += delta;
        if (idx > 0) {
            delta = l.weights.transpose() * delta;
        }
    }
}

auto backward(const DenseNet &net, const ForwardTrace &trace, const Vector &output_grad, Vector *input_grad)
    -> Gradients {
    auto grads = Gradients::zeros_like(net);
    accumulate_backward(net, trace, output_grad, grads);
    if (input_grad != nullptr) {
        // Re-run the chain to the input; cheap for the sizes used here.
        Vector delta = output_grad;
        const auto &layers = net.layers();
        for (std::size_t idx = layers.size(); idx-- > 0;) {
            if (layers[idx].activation == Activation::relu) {
                delta = (trace.pre_activations[idx].array() > 0.0).select(delta, 0.0);
            }
            delta = layers[idx].weights.transpose() * delta;
        }
        *input_grad = std::move(delta);
    }
    return grads;
}

auto backward(const DenseNet &net, const Vector &input, const Vector &output_grad) -> Gradients {
    return backward(net, forward_trace(net, input), output_grad);
}

auto forward_batch(const DenseNet &net, const Matrix &inputs) -> BatchTrace {
    if (inputs.rows() != net.input_dim()) {
        throw InvalidInput("forward: input length " + std::to_string(inputs.rows()) + " != net input dim "
                           + std::to_string(net.input_dim()));
    }
    BatchTrace trace;
    trace.activations.reserve(net.layers().size() + 1);
    trace.pre_activations.reserve(net.layers().size());
    trace.activations.push_back(inputs);
    for (const auto &l : net.layers()) {
        Matrix pre = trace.activations.size() == 1 && mostly_zero(inputs)
                         ? Matrix(l.weights * inputs.sparseView())
                         : Matrix(l.weights * trace.activations.back());
        pre.colwise() += l.bias;
        Matrix out = l.activation == Activation::relu ? Matrix(pre.cwiseMax(0.0)) : pre;
        trace.pre_activations.push_back(std::move(pre));
        trace.activations.push_back(std::move(out));
    }
    return trace;
}

auto backward_batch(const DenseNet &net, const BatchTrace &trace, const Matrix &output_grads) -> Gradients {
    const auto &layers = net.layers();
    if (trace.pre_activations.size() != layers.size() || trace.activations.size() != layers.size() + 1) {
        throw InvalidInput("backward: forward trace does not belong to this network");
    }
    if (output_grads.rows() != net.output_dim() || output_grads.cols() != trace.activations.front().cols()) {
        throw InvalidInput("backward: output gradient shape does not match the batch");
    }
    auto grads = Gradients::zeros_like(net);
    Matrix delta = output_grads;
    for (std::size_t idx = layers.size(); idx-- > 0;) {
        const auto &l = layers[idx];
        if (l.activation == Activation::relu) {
            delta = (trace.pre_activations[idx].array() > 0.0).select(delta, 0.0);
        }
        if (idx == 0 && mostly_zero(trace.activations[0])) {
            grads.layers[idx].weights = delta * trace.activations[0].transpose().sparseView();
        } else {
            grads.layers[idx].weights.noalias() = delta * trace.activations[idx].transpose();
        }
        grads.layers[idx].bias = delta.rowwise().sum();
        if (idx > 0) {
            delta = l.weights.transpose() * delta;
        }
    }
    return grads;
}

}    // namespace oihrl::nn
