#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oihrl/nn/dense_net.hpp"

namespace oihrl::nn {

enum class OptimizerKind : std::uint8_t { sgd, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One contiguous parameter array and its gradient.
struct ParamBlock {
    std::span<double> values;
    std::span<const double> grads;
};

class OptimizerState {
  public:
    OptimizerState() = default;
    explicit OptimizerState(OptimizerConfig config);

    [[nodiscard]] auto config() const noexcept -> const OptimizerConfig & { return config_; }
    [[nodiscard]] auto step() const noexcept -> std::int64_t { return step_; }
    [[nodiscard]] auto first_moments() const noexcept -> const std::vector<std::vector<double>> & { return m_; }
    [[nodiscard]] auto second_moments() const noexcept -> const std::vector<std::vector<double>> & { return v_; }

  private:
    friend auto optimizer_step(std::span<const ParamBlock>, OptimizerState &) -> bool;

    OptimizerConfig config_;
    std::int64_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

/// Applies one SGD/Adam update to every block. Returns false (and leaves parameters, moments and the
/// step counter untouched) when any gradient is non-finite. Throws InvalidInput on shape mismatch.
auto optimizer_step(std::span<const ParamBlock> blocks, OptimizerState &state) -> bool;

/// Parameter blocks of `net` paired with `grads` (weights then bias, layer by layer).
auto parameter_blocks(DenseNet &net, const Gradients &grads) -> std::vector<ParamBlock>;

auto optimizer_step(DenseNet &net, const Gradients &grads, OptimizerState &state) -> bool;

}    // namespace oihrl::nn
