#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "oihrl/common/rng.hpp"
#include "oihrl/env/smdp_env.hpp"
#include "oihrl/nn/dense_net.hpp"
#include "oihrl/nn/optimizer.hpp"

namespace oihrl::index {

using nn::Matrix;
using nn::Vector;

/// Learned keys, one row per library option (row i belongs to option i).
struct OptionIndex {
    Matrix keys;    // k x d

    static auto glorot(int option_count, int key_dim, Rng &rng) -> OptionIndex;

    [[nodiscard]] auto option_count() const noexcept -> int { return static_cast<int>(keys.rows()); }
    [[nodiscard]] auto key_dim() const noexcept -> int { return static_cast<int>(keys.cols()); }
};

/// Query-generation network: initial state -> ReLU hidden layer -> query in key space.
struct Qgn {
    nn::DenseNet net;

    static auto glorot(int state_dim, int hidden, int key_dim, Rng &rng) -> Qgn;

    [[nodiscard]] auto input_dim() const noexcept -> int { return static_cast<int>(net.input_dim()); }
    [[nodiscard]] auto key_dim() const noexcept -> int { return static_cast<int>(net.output_dim()); }
};

/// Index plus query network, the unit that is trained and checkpointed.
struct IndexModel {
    OptionIndex index;
    Qgn qgn;

    static auto create(int state_dim, int option_count, int hidden, int key_dim, std::uint64_t seed) -> IndexModel;
};

struct RetrievalResult {
    std::vector<int> fetched;    // ascending option ids
    Vector probabilities;        // over all k options
};

/// Options in fetch order: descending probability, ties broken by lower id, until the mass exceeds p.
auto top_p_order(const Vector &probs, double p) -> std::vector<int>;

/// Logits s = E q for the query of state s0.
auto option_logits(const IndexModel &model, const Vector &s0) -> Vector;

auto select_options(const IndexModel &model, const Vector &s0, double p) -> RetrievalResult;

struct TargetVector {
    Vector y;
    bool skip = false;    // empty trajectory set or non-positive total reward
};

/// Normalized option-usage counts weighted by trajectory reward.
auto target_from_trajectories(std::span<const env::Trajectory> trajectories, int option_count) -> TargetVector;

struct TrainingSample {
    Vector s0;
    Vector y;
};

struct ModelGradients {
    nn::Gradients qgn;
    Matrix keys;
};

struct LossAndGradients {
    double loss = 0.0;
    ModelGradients grads;
};

/// Cross-entropy of one sample and its gradient w.r.t. QGN parameters and keys.
/// Non-finite logits give a NaN loss and zero gradients.
auto loss_and_gradients(const IndexModel &model, const TrainingSample &sample) -> LossAndGradients;

auto sample_loss(const IndexModel &model, const TrainingSample &sample) -> double;

struct UpdateResult {
    double mean_loss = 0.0;    // before the step
    bool applied = false;
};

/// One joint optimizer step on QGN parameters and keys over the batch mean loss.
/// Skipped (parameters untouched) when the loss or any gradient is non-finite.
auto update(IndexModel &model, std::span<const TrainingSample> batch, nn::OptimizerState &optimizer) -> UpdateResult;

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointExpectation {
    std::optional<std::uint64_t> domain_hash;
    std::optional<int> option_count;
    std::optional<int> key_dim;
    std::optional<int> state_dim;
};

struct Checkpoint {
    IndexModel model;
    std::uint64_t domain_hash = 0;
};

void save_checkpoint(const std::filesystem::path &path, const IndexModel &model, std::uint64_t domain_hash);

/// Throws LoadError on I/O failure, truncation, unknown version or any mismatch against `expect`.
auto load_checkpoint(const std::filesystem::path &path, const CheckpointExpectation &expect = {}) -> Checkpoint;

}    // namespace oihrl::index
