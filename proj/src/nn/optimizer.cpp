#include "oihrl/nn/optimizer.hpp"

#include <cmath>
#include <string>

#include "oihrl/common/errors.hpp"
#include "oihrl/common/log.hpp"

namespace oihrl::nn {

OptimizerState::OptimizerState(OptimizerConfig config) : config_(config) {
    if (!(config_.learning_rate > 0.0) || !std::isfinite(config_.learning_rate)) {
        throw InvalidInput("optimizer: learning rate must be positive and finite");
    }
}

auto optimizer_step(std::span<const ParamBlock> blocks, OptimizerState &state) -> bool {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].values.size() != blocks[b].grads.size()) {
            throw InvalidInput("optimizer_step: block " + std::to_string(b) + " value/gradient size mismatch");
        }
    }
    for (const auto &blk : blocks) {
        for (double g : blk.grads) {
            if (!std::isfinite(g)) {
                log::warn("optimizer_step: non-finite gradient, update skipped");
                return false;
            }
        }
    }

    const auto &cfg = state.config_;
    if (cfg.kind == OptimizerKind::sgd) {
        for (const auto &blk : blocks) {
            for (std::size_t i = 0; i < blk.values.size(); ++i) {
                blk.values[i] -= cfg.learning_rate * blk.grads[i];
            }
        }
        ++state.step_;
        return true;
    }

    if (state.m_.empty()) {
        state.m_.resize(blocks.size());
        state.v_.resize(blocks.size());
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            state.m_[b].assign(blocks[b].values.size(), 0.0);
            state.v_[b].assign(blocks[b].values.size(), 0.0);
        }
    }
    if (state.m_.size() != blocks.size()) {
        throw InvalidInput("optimizer_step: block count differs from optimizer moments");
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (state.m_[b].size() != blocks[b].values.size()) {
            throw InvalidInput("optimizer_step: block " + std::to_string(b) + " shape differs from optimizer moments");
        }
    }

    const auto t = static_cast<double>(state.step_ + 1);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        auto &m = state.m_[b];
        auto &v = state.v_[b];
        const auto &blk = blocks[b];
        for (std::size_t i = 0; i < blk.values.size(); ++i) {
            const double g = blk.grads[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            blk.values[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
    ++state.step_;
    return true;
}

auto parameter_blocks(DenseNet &net, const Gradients &grads) -> std::vector<ParamBlock> {
    if (!grads.congruent_with(net)) {
        throw InvalidInput("parameter_blocks: gradients are not congruent with the network");
    }
    std::vector<ParamBlock> blocks;
    blocks.reserve(net.layers().size() * 2);
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        auto &l = net.layers()[i];
        const auto &g = grads.layers[i];
        blocks.push_back({{l.weights.data(), static_cast<std::size_t>(l.weights.size())},
                          {g.weights.data(), static_cast<std::size_t>(g.weights.size())}});
        blocks.push_back({{l.bias.data(), static_cast<std::size_t>(l.bias.size())},
                          {g.bias.data(), static_cast<std::size_t>(g.bias.size())}});
    }
    return blocks;
}

auto optimizer_step(DenseNet &net, const Gradients &grads, OptimizerState &state) -> bool {
    const auto blocks = parameter_blocks(net, grads);
    return optimizer_step(blocks, state);
}

}    // namespace oihrl::nn
