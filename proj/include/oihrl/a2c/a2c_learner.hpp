#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "oihrl/env/smdp_env.hpp"
#include "oihrl/nn/dense_net.hpp"
#include "oihrl/nn/optimizer.hpp"

namespace oihrl::a2c {

using nn::Matrix;
using nn::Vector;

struct A2CConfig {
    double learning_rate = 3e-4;
    double gamma = 0.99;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    int episodes_per_update = 16;
    std::int64_t total_env_steps = 200000;
    std::int64_t eval_interval_steps = 10000;
    int eval_episodes = 5;
    int hidden = 64;
    double logit_clamp = 20.0;
    std::uint64_t seed = 0;
};

/// Validates ranges; throws ConfigError.
void validate(const A2CConfig &config);

/// Actor-critic over an ordered set of library options.
struct HRLPolicy {
    nn::DenseNet actor;     // state -> |actions| logits
    nn::DenseNet critic;    // state -> value
    std::vector<int> actions;
    double logit_clamp = 20.0;

    static auto create(int state_dim, std::vector<int> actions, int hidden, double logit_clamp, std::uint64_t seed)
        -> HRLPolicy;

    /// Softmax over clamped actor logits.
    [[nodiscard]] auto action_probabilities(const Vector &state) const -> Vector;
    [[nodiscard]] auto value(const Vector &state) const -> double;
};

/// Clamped logits, as used by the policy.
auto clamp_logits(const Vector &logits, double bound) -> Vector;

/// One transition of a frozen rollout batch.
struct Sample {
    Vector state;
    int action = 0;         // index into policy.actions
    double ret = 0.0;       // discounted Monte-Carlo return from this step
};

struct A2CLoss {
    double actor_loss = 0.0;     // mean of -A log pi(a|s) - entropy_coef * H
    double critic_loss = 0.0;    // mean of value_coef * (G - V)^2
    double entropy = 0.0;        // mean policy entropy
    nn::Gradients actor_grads;
    nn::Gradients critic_grads;
};

/// Losses and exact gradients on a batch; the advantage G - V is treated as a constant for the actor.
auto a2c_loss_and_gradients(const HRLPolicy &policy, std::span<const Sample> batch, const A2CConfig &config)
    -> A2CLoss;

/// Discounted returns G_t = r_t + gamma * G_{t+1} for one episode.
auto discounted_returns(std::span<const double> rewards, double gamma) -> std::vector<double>;

enum class ActionMode : std::uint8_t { greedy, sample };

struct EvalResult {
    double mean_reward = 0.0;
    double mean_length = 0.0;
    double completion = 0.0;
};

/// Runs `episodes` episodes from the environment's initial scene.
auto evaluate_policy(const HRLPolicy &policy, const env::SmdpEnv &prototype, int episodes, std::uint64_t seed,
                     ActionMode mode = ActionMode::greedy) -> EvalResult;

struct CurvePoint {
    int update = 0;
    std::int64_t env_steps = 0;    // checkpoint position on the step axis
    double mean_reward = 0.0;
    double mean_length = 0.0;
    double completion = 0.0;
};

struct TrainResult {
    HRLPolicy policy;
    std::vector<CurvePoint> curve;    // one point per evaluation checkpoint
    int updates = 0;
    int skipped_updates = 0;
};

/// Trains a fresh policy over `fetched` options on the environment's fixed goal and scene.
auto train_policy(const env::SmdpEnv &prototype, std::span<const int> fetched, const A2CConfig &config)
    -> TrainResult;

}    // namespace oihrl::a2c
