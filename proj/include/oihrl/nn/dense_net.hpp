#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "oihrl/common/rng.hpp"

namespace oihrl::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation : std::uint8_t { identity = 0, relu = 1 };

struct Layer {
    Matrix weights;    // out x in
    Vector bias;       // out
    Activation activation = Activation::identity;

    [[nodiscard]] auto input_dim() const noexcept -> Eigen::Index { return weights.cols(); }
    [[nodiscard]] auto output_dim() const noexcept -> Eigen::Index { return weights.rows(); }
};

/// Fully connected feed-forward network with per-layer activation.
class DenseNet {
  public:
    DenseNet() = default;

    /// Throws InvalidInput when layer dimensions do not chain.
    explicit DenseNet(std::vector<Layer> layers);

    /// Glorot-uniform weights, zero biases. `widths` lists input, hidden..., output sizes.
    static auto glorot(std::span<const std::size_t> widths, Activation hidden, Activation output, Rng &rng)
        -> DenseNet;

    [[nodiscard]] auto input_dim() const noexcept -> Eigen::Index;
    [[nodiscard]] auto output_dim() const noexcept -> Eigen::Index;
    [[nodiscard]] auto layers() const noexcept -> const std::vector<Layer> & { return layers_; }
    [[nodiscard]] auto layers() noexcept -> std::vector<Layer> & { return layers_; }
    [[nodiscard]] auto parameter_count() const noexcept -> std::size_t;
    [[nodiscard]] auto all_finite() const noexcept -> bool;

  private:
    std::vector<Layer> layers_;
};

/// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
auto glorot_bound(std::size_t fan_in, std::size_t fan_out) -> double;

/// Fill `m` with Glorot-uniform values for the given fans.
void glorot_fill(Matrix &m, std::size_t fan_in, std::size_t fan_out, Rng &rng);

/// Intermediate values of one forward pass; `activations[0]` is the input.
struct ForwardTrace {
    std::vector<Vector> activations;        // size L + 1
    std::vector<Vector> pre_activations;    // size L
    [[nodiscard]] auto output() const -> const Vector & { return activations.back(); }
};

auto forward(const DenseNet &net, const Vector &input) -> Vector;
auto forward_trace(const DenseNet &net, const Vector &input) -> ForwardTrace;

struct LayerGradient {
    Matrix weights;
    Vector bias;
};

/// Parameter gradients, shape-congruent with a DenseNet.
struct Gradients {
    std::vector<LayerGradient> layers;

    static auto zeros_like(const DenseNet &net) -> Gradients;

    auto operator+=(const Gradients &other) -> Gradients &;
    auto operator*=(double scale) -> Gradients &;
    [[nodiscard]] auto all_finite() const noexcept -> bool;
    [[nodiscard]] auto congruent_with(const DenseNet &net) const noexcept -> bool;
};

/// Exact gradients of a scalar loss whose gradient w.r.t. the network output is `output_grad`.
/// When `input_grad` is non-null it receives d loss / d input.
auto backward(const DenseNet &net, const ForwardTrace &trace, const Vector &output_grad, Vector *input_grad = nullptr)
    -> Gradients;

/// Convenience overload that recomputes the forward pass.
auto backward(const DenseNet &net, const Vector &input, const Vector &output_grad) -> Gradients;

/// Adds the gradients of one sample into `acc` without allocating a new Gradients.
void accumulate_backward(const DenseNet &net, const ForwardTrace &trace, const Vector &output_grad, Gradients &acc);

/// Forward pass over a batch stored one sample per column.
struct BatchTrace {
    std::vector<Matrix> activations;        // size L + 1, each width x batch
    std::vector<Matrix> pre_activations;    // size L
    [[nodiscard]] auto output() const -> const Matrix & { return activations.back(); }
};

auto forward_batch(const DenseNet &net, const Matrix &inputs) -> BatchTrace;

/// Sum over the batch of per-sample gradients; column j of `output_grads` belongs to sample j.
auto backward_batch(const DenseNet &net, const BatchTrace &trace, const Matrix &output_grads) -> Gradients;

}    // namespace oihrl::nn
