#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "oihrl/env/smdp_env.hpp"
#include "oihrl/index/option_index.hpp"
#include "oihrl/nn/optimizer.hpp"

namespace oihrl::meta {

using task::VariantRef;

struct OracleConfig {
    int trajectories_per_call = 4;
    /// Enumeration stops after this many executable orders per variant.
    int max_orders = 20000;
};

/// Stand-in for a converged hierarchical policy: replays executable orders of the goal recipe.
class HrlOracle {
  public:
    HrlOracle(std::shared_ptr<const env::DomainModel> model, OracleConfig config);

    /// Every recipe order that respects preconditions and first reaches the goal on its last option,
    /// starting from the goal's distractor-free scene. Computed once per variant.
    auto valid_orders(VariantRef goal) const -> const std::vector<std::vector<int>> &;

    /// Up to M deduplicated successful trajectories executed from `initial`; empty when `fetched`
    /// (ascending option ids) does not cover the recipe.
    auto solve(VariantRef goal, const env::EnvState &initial, std::span<const int> fetched,
               const task::EpisodeConfig &episode, std::uint64_t seed) const -> std::vector<env::Trajectory>;

    [[nodiscard]] auto config() const noexcept -> const OracleConfig & { return config_; }
    [[nodiscard]] auto model() const noexcept -> const env::DomainModel & { return *model_; }

  private:
    std::shared_ptr<const env::DomainModel> model_;
    OracleConfig config_;
    mutable std::vector<std::unique_ptr<std::vector<std::vector<int>>>> cache_;
    std::vector<std::size_t> offset_;
};

/// Resets an environment for `goal` with `seed` and asks a fresh oracle to solve it.
auto oracle_solve(std::shared_ptr<const env::DomainModel> model, VariantRef goal, std::span<const int> fetched,
                  const task::EpisodeConfig &episode, const OracleConfig &config, std::uint64_t seed)
    -> std::vector<env::Trajectory>;

struct MetaTrainConfig {
    int iterations = 5000;
    int batch_size = 32;
    double top_p = 0.9;
    std::uint64_t seed = 0;
    int hidden = 100;
    int key_dim = 50;
    nn::OptimizerConfig optimizer;
    OracleConfig oracle;
};

struct IterationRecord {
    int iteration = 0;
    double mean_loss = 0.0;    // NaN when every sample was skipped
    int skipped = 0;
    bool applied = false;
};

struct TrainingReport {
    std::vector<IterationRecord> records;

    /// Mean loss over applied iterations in [begin, end).
    [[nodiscard]] auto mean_loss(std::size_t begin, std::size_t end) const -> double;
};

/// Writes "iteration,mean_loss,skipped_count" lines.
void write_metrics(std::ostream &os, const TrainingReport &report);

using ProgressFn = std::function<void(const IterationRecord &)>;

/// Meta-trains `model` on the given train variants.
auto meta_train(const HrlOracle &oracle, std::span<const VariantRef> train, index::IndexModel &model,
                const task::EpisodeConfig &episode, const MetaTrainConfig &config, const ProgressFn &progress = {})
    -> TrainingReport;

}    // namespace oihrl::meta
