#include "oihrl/a2c/a2c_learner.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "oihrl/common/errors.hpp"
#include "oihrl/common/rng.hpp"
#include "oihrl/nn/losses.hpp"

namespace oihrl::a2c {

namespace {

auto sample_action(const Vector &probs, Rng &rng) -> int {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(probs.size() - 1);
}

auto greedy_action(const Vector &probs) -> int {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) {
            best = i;
        }
    }
    return static_cast<int>(best);
}

}    // namespace

void validate(const A2CConfig &c) {
    if (!(c.gamma > 0.0 && c.gamma <= 1.0)) {
        throw ConfigError("a2c: gamma must lie in (0, 1]");
    }
    for (double v : {c.learning_rate, c.entropy_coef, c.value_coef, c.logit_clamp}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ConfigError("a2c: coefficients must be finite and non-negative");
        }
    }
    if (c.learning_rate <= 0.0 || c.logit_clamp <= 0.0) {
        throw ConfigError("a2c: learning_rate and logit_clamp must be positive");
    }
    if (c.episodes_per_update < 1 || c.total_env_steps < 1 || c.eval_interval_steps < 1 || c.eval_episodes < 1
        || c.hidden < 1) {
        throw ConfigError("a2c: counts must be positive");
    }
}

auto clamp_logits(const Vector &logits, double bound) -> Vector {
    return logits.cwiseMax(-bound).cwiseMin(bound);
}

auto HRLPolicy::create(int state_dim, std::vector<int> actions, int hidden, double logit_clamp, std::uint64_t seed)
    -> HRLPolicy {
    if (actions.empty()) {
        throw InvalidInput("policy needs at least one action");
    }
    Rng rng(derive_seed(seed, {0xAC7}));
    HRLPolicy p;
    const std::array<std::size_t, 3> aw{static_cast<std::size_t>(state_dim), static_cast<std::size_t>(hidden),
                                        actions.size()};
    const std::array<std::size_t, 3> cw{static_cast<std::size_t>(state_dim), static_cast<std::size_t>(hidden), 1};
    p.actor = nn::DenseNet::glorot(aw, nn::Activation::relu, nn::Activation::identity, rng);
    p.critic = nn::DenseNet::glorot(cw, nn::Activation::relu, nn::Activation::identity, rng);
    p.actions = std::move(actions);
    p.logit_clamp = logit_clamp;
    return p;
}

auto HRLPolicy::action_probabilities(const Vector &state) const -> Vector {
    return nn::softmax(clamp_logits(nn::forward(actor, state), logit_clamp));
}

auto HRLPolicy::value(const Vector &state) const -> double {
    return nn::forward(critic, state)[0];
}

auto discounted_returns(std::span<const double> rewards, double gamma) -> std::vector<double> {
    std::vector<double> g(rewards.size());
    double acc = 0.0;
    for (std::size_t i = rewards.size(); i-- > 0;) {
        acc = rewards[i] + gamma * acc;
        g[i] = acc;
    }
    return g;
}

auto a2c_loss_and_gradients(const HRLPolicy &policy, std::span<const Sample> batch, const A2CConfig &config)
    -> A2CLoss {
    if (batch.empty()) {
        throw InvalidInput("a2c: empty batch");
    }
    const auto n = static_cast<Eigen::Index>(batch.size());
    const auto dim = policy.actor.input_dim();
    Matrix states(dim, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        states.col(j) = batch[static_cast<std::size_t>(j)].state;
    }
    const auto actor_trace = nn::forward_batch(policy.actor, states);
    const auto critic_trace = nn::forward_batch(policy.critic, states);
    const Matrix &logits = actor_trace.output();
    const double inv_n = 1.0 / static_cast<double>(n);

    A2CLoss out;
    Matrix actor_out_grad(logits.rows(), n);
    Matrix critic_out_grad(1, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto &s = batch[static_cast<std::size_t>(j)];
        const Vector z = logits.col(j);
        const Vector zc = clamp_logits(z, policy.logit_clamp);
        const Vector logp = nn::log_softmax(zc);
        const Vector pi = logp.array().exp();
        const double h = -(pi.array() * logp.array()).sum();
        const double v = critic_trace.output()(0, j);
        const double adv = s.ret - v;

        out.actor_loss += (-adv * logp[s.action] - config.entropy_coef * h) * inv_n;
        out.critic_loss += config.value_coef * (s.ret - v) * (s.ret - v) * inv_n;
        out.entropy += h * inv_n;

        // d/dz of -A log pi(a) - beta H
        Vector g = adv * pi;
        g[s.action] -= adv;
        g.array() += config.entropy_coef * pi.array() * (logp.array() + h);
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            if (z[i] > policy.logit_clamp || z[i] < -policy.logit_clamp) {
                g[i] = 0.0;
            }
        }
        actor_out_grad.col(j) = g * inv_n;
        critic_out_grad(0, j) = 2.0 * config.value_coef * (v - s.ret) * inv_n;
    }
    out.actor_grads = nn::backward_batch(policy.actor, actor_trace, actor_out_grad);
    out.critic_grads = nn::backward_batch(policy.critic, critic_trace, critic_out_grad);
    return out;
}

auto evaluate_policy(const HRLPolicy &policy, const env::SmdpEnv &prototype, int episodes, std::uint64_t seed,
                     ActionMode mode) -> EvalResult {
    if (episodes < 1) {
        throw InvalidInput("evaluate_policy: episodes must be at least 1");
    }
    Rng rng(derive_seed(seed, {0xE7A1}));
    env::SmdpEnv sim = prototype;
    const auto &model = sim.model();
    EvalResult r;
    for (int e = 0; e < episodes; ++e) {
        sim.reset();
        int len = 0;
        while (!sim.done()) {
            const Vector probs = policy.action_probabilities(env::encode_features(model, sim.state()));
            const int a = mode == ActionMode::greedy ? greedy_action(probs) : sample_action(probs, rng);
            sim.step(policy.actions[static_cast<std::size_t>(a)]);
            ++len;
        }
        r.mean_reward += sim.episode_return();
        r.mean_length += len;
        r.completion += env::goal_achieved(model, sim.state(), sim.goal()) ? 1.0 : 0.0;
    }
    r.mean_reward /= episodes;
    r.mean_length /= episodes;
    r.completion /= episodes;
    return r;
}

auto train_policy(const env::SmdpEnv &prototype, std::span<const int> fetched, const A2CConfig &config)
    -> TrainResult {
    validate(config);
    if (fetched.empty()) {
        throw InvalidInput("train_policy: empty option set");
    }
    const auto &model = prototype.model();
    TrainResult result;
    result.policy = HRLPolicy::create(model.state_dim(), {fetched.begin(), fetched.end()}, config.hidden,
                                      config.logit_clamp, config.seed);
    auto &policy = result.policy;
    nn::OptimizerConfig oc;
    oc.learning_rate = config.learning_rate;
    nn::OptimizerState actor_opt(oc);
    nn::OptimizerState critic_opt(oc);
    Rng rng(derive_seed(config.seed, {0x2011}));

    env::SmdpEnv sim = prototype;
    std::int64_t steps = 0;
    std::int64_t next_eval = config.eval_interval_steps;
    std::vector<Sample> batch;
    std::vector<double> rewards;
    while (next_eval <= config.total_env_steps) {
        batch.clear();
        for (int e = 0; e < config.episodes_per_update; ++e) {
            sim.reset();
            rewards.clear();
            const auto first = batch.size();
            while (!sim.done()) {
                Vector x = env::encode_features(model, sim.state());
                const Vector probs = policy.action_probabilities(x);
                const int a = sample_action(probs, rng);
                const auto out = sim.step(policy.actions[static_cast<std::size_t>(a)]);
                batch.push_back({std::move(x), a, 0.0});
                rewards.push_back(out.reward);
                ++steps;
            }
            const auto g = discounted_returns(rewards, config.gamma);
            for (std::size_t i = 0; i < g.size(); ++i) {
                batch[first + i].ret = g[i];
            }
        }
        auto loss = a2c_loss_and_gradients(policy, batch, config);
        const bool ok_a = nn::optimizer_step(policy.actor, loss.actor_grads, actor_opt);
        const bool ok_c = nn::optimizer_step(policy.critic, loss.critic_grads, critic_opt);
        ++result.updates;
        if (!ok_a || !ok_c) {
            ++result.skipped_updates;
        }
        while (steps >= next_eval && next_eval <= config.total_env_steps) {
            const auto ev = evaluate_policy(policy, prototype, config.eval_episodes,
                                            derive_seed(config.seed, {0xE7, static_cast<std::uint64_t>(next_eval)}));
            result.curve.push_back({result.updates, next_eval, ev.mean_reward, ev.mean_length, ev.completion});
            next_eval += config.eval_interval_steps;
        }
    }
    return result;
}

}    // namespace oihrl::a2c
