#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oihrl/task/domain.hpp"
#include "oihrl/task/recipe.hpp"

namespace oihrl::env {

using task::VariantRef;

/// Per-object metadata flags (kitchen physics only; craftworld states carry none).
enum Flag : int { kCooked = 0, kSliced, kBroken, kHasCoffee, kHasWater, kHasWine, kActivated, kKitchenFlagCount };

/// Sizes of the encoded state blocks for one domain.
struct StateLayout {
    int objects = 0;
    int flags = 0;
    std::vector<int> receptacles;        // object ids that can hold other objects
    std::vector<int> receptacle_slot;    // object id -> index into receptacles, or -1

    /// [presence | inventory | flags (object-major) | on-relation (object x receptacle)]
    [[nodiscard]] auto dim() const noexcept -> int {
        return objects * (2 + flags + static_cast<int>(receptacles.size()));
    }
};

struct EnvState {
    std::vector<std::uint8_t> presence;     // in the scene
    std::vector<std::uint8_t> inventory;    // held by the agent
    std::vector<std::uint8_t> flags;        // objects x layout.flags
    std::vector<int> location;              // receptacle the object sits on, or -1
    int step_count = 0;

    auto operator==(const EnvState &) const -> bool = default;
};

/// Domain compiled for simulation: recipes, per-option object requirements and the state layout.
class DomainModel {
  public:
    explicit DomainModel(task::Domain domain);

    [[nodiscard]] auto domain() const noexcept -> const task::Domain & { return domain_; }
    [[nodiscard]] auto graph() const noexcept -> const task::TaskGraph & { return domain_.graph; }
    [[nodiscard]] auto layout() const noexcept -> const StateLayout & { return layout_; }
    [[nodiscard]] auto option_count() const noexcept -> int { return domain_.graph.option_count(); }
    [[nodiscard]] auto state_dim() const noexcept -> int { return layout_.dim(); }

    [[nodiscard]] auto recipe(VariantRef ref) const -> const std::vector<int> & { return recipes_.at(ref); }
    /// Objects an option needs in the scene (e.g. fill needs the receptacle and the liquid source).
    [[nodiscard]] auto option_objects(int option) const -> const std::vector<int> &;
    /// Union of option_objects over the variant's recipe, sorted.
    [[nodiscard]] auto required_objects(VariantRef ref) const -> const std::vector<int> &;
    /// Simple objects consumed when crafting this composite variant at a workshop.
    [[nodiscard]] auto ingredients(VariantRef ref) const -> const std::vector<int> &;
    [[nodiscard]] auto liquid_source(task::Liquid l) const -> std::optional<int>;

  private:
    auto flat(VariantRef ref) const -> std::size_t;

    task::Domain domain_;
    task::RecipeTable recipes_;
    StateLayout layout_;
    std::vector<std::vector<int>> option_objects_;
    std::vector<std::size_t> variant_offset_;
    std::vector<std::vector<int>> required_;
    std::vector<std::vector<int>> ingredients_;
    std::vector<std::optional<int>> liquid_sources_;
};

/// Empty scene: nothing present, nothing held.
auto empty_state(const DomainModel &model) -> EnvState;

/// Scene for `goal`: every recipe-required object plus distractors drawn per `config`.
auto reset(const DomainModel &model, VariantRef goal, const task::EpisodeConfig &config, std::uint64_t seed)
    -> EnvState;

/// Throws InvalidInput for unknown option ids.
auto precondition_holds(const DomainModel &model, const EnvState &state, int option) -> bool;

struct StepOutcome {
    double reward = 0.0;
    bool done = false;
    bool executed = false;    // precondition held
};

/// In-place transition. A failed precondition is a no-op that still consumes a step.
auto apply_option_inplace(const DomainModel &model, EnvState &state, int option, VariantRef goal,
                          const task::EpisodeConfig &config) -> StepOutcome;

struct Transition {
    EnvState state;
    double reward = 0.0;
    bool done = false;
};

auto apply_option(const DomainModel &model, const EnvState &state, int option, VariantRef goal,
                  const task::EpisodeConfig &config) -> Transition;

/// True iff some variant of the goal's task has all of its goal conditions satisfied.
auto goal_achieved(const DomainModel &model, const EnvState &state, VariantRef goal) -> bool;

auto encode_state(const DomainModel &model, const EnvState &state) -> std::vector<std::uint8_t>;
auto encode_features(const DomainModel &model, const EnvState &state) -> Eigen::VectorXd;

/// Returns a description of the first violated state invariant, if any.
auto check_invariants(const DomainModel &model, const EnvState &state) -> std::optional<std::string>;

/// Ordered option ids and the realized episode return.
struct Trajectory {
    std::vector<int> options;
    double ret = 0.0;
    auto operator==(const Trajectory &) const -> bool = default;
};

struct TransitionRecord {
    int step = 0;
    int option = 0;
    double reward = 0.0;
    bool done = false;
};

/// Writes "step,option,reward,done" lines.
void write_trace(std::ostream &os, const std::vector<TransitionRecord> &records);

/// One MDP instance: a goal variant with a fixed sampled initial scene. reset() restores that scene.
class SmdpEnv {
  public:
    SmdpEnv(std::shared_ptr<const DomainModel> model, VariantRef goal, task::EpisodeConfig config,
            std::uint64_t seed);
    /// Instance with an explicit initial scene.
    SmdpEnv(std::shared_ptr<const DomainModel> model, VariantRef goal, task::EpisodeConfig config,
            EnvState initial);

    auto reset() -> const EnvState &;
    auto step(int option) -> StepOutcome;

    [[nodiscard]] auto state() const noexcept -> const EnvState & { return state_; }
    [[nodiscard]] auto initial_state() const noexcept -> const EnvState & { return initial_; }
    [[nodiscard]] auto goal() const noexcept -> VariantRef { return goal_; }
    [[nodiscard]] auto config() const noexcept -> const task::EpisodeConfig & { return config_; }
    [[nodiscard]] auto model() const noexcept -> const DomainModel & { return *model_; }
    [[nodiscard]] auto done() const noexcept -> bool { return done_; }
    [[nodiscard]] auto episode_return() const noexcept -> double { return return_; }

    /// When set, every step appends a record to `sink`.
    void set_trace(std::vector<TransitionRecord> *sink) noexcept { trace_ = sink; }

  private:
    std::shared_ptr<const DomainModel> model_;
    VariantRef goal_;
    task::EpisodeConfig config_;
    EnvState initial_;
    EnvState state_;
    bool done_ = false;
    double return_ = 0.0;
    std::vector<TransitionRecord> *trace_ = nullptr;
};

}    // namespace oihrl::env
