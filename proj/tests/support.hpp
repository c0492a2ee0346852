#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "oihrl/a2c/a2c_learner.hpp"
#include "oihrl/common/rng.hpp"
#include "oihrl/env/smdp_env.hpp"
#include "oihrl/index/option_index.hpp"
#include "oihrl/nn/dense_net.hpp"
#include "oihrl/task/craftworld_generator.hpp"

namespace oihrl::testing {

using nn::Matrix;
using nn::Vector;

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdTolerance = 1e-4;
// Below this magnitude the relative error is measured against the floor instead.
inline constexpr double kFdScaleFloor = 1e-4;
inline constexpr double kKink = 1e-3;

inline auto relative_error(double analytic, double numeric) -> double {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), kFdScaleFloor});
    return std::abs(analytic - numeric) / scale;
}

inline auto random_vector(Eigen::Index n, Rng &rng, double scale = 1.0) -> Vector {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = (2.0 * uniform01(rng) - 1.0) * scale;
    }
    return v;
}

/// Binary vector with roughly `density` ones, like an encoded scene.
inline auto random_binary(Eigen::Index n, Rng &rng, double density = 0.3) -> Vector {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = uniform01(rng) < density ? 1.0 : 0.0;
    }
    return v;
}

/// True when every ReLU pre-activation of `net` on `inputs` is away from zero.
inline auto clear_of_kinks(const nn::DenseNet &net, const std::vector<Vector> &inputs) -> bool {
    for (const auto &x : inputs) {
        const auto trace = nn::forward_trace(net, x);
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            if (net.layers()[l].activation != nn::Activation::relu) {
                continue;
            }
            if ((trace.pre_activations[l].array().abs() < kKink).any()) {
                return false;
            }
        }
    }
    return true;
}

/// Largest relative error between `analytic` and central differences of `loss` over `params`.
inline auto max_fd_error(double *params, std::size_t count, const double *analytic,
                         const std::function<double()> &loss) -> double {
    double worst = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double saved = params[i];
        params[i] = saved + kFdStep;
        const double up = loss();
        params[i] = saved - kFdStep;
        const double down = loss();
        params[i] = saved;
        worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * kFdStep)));
    }
    return worst;
}

inline auto max_fd_error(nn::DenseNet &net, const nn::Gradients &grads, const std::function<double()> &loss)
    -> double {
    double worst = 0.0;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        auto &layer = net.layers()[l];
        worst = std::max(worst, max_fd_error(layer.weights.data(), static_cast<std::size_t>(layer.weights.size()),
                                             grads.layers[l].weights.data(), loss));
        worst = std::max(worst, max_fd_error(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()),
                                             grads.layers[l].bias.data(), loss));
    }
    return worst;
}

struct IndexGradCheck {
    double qgn = 0.0;
    double keys = 0.0;
};

/// One random QGN + index instance checked against central differences of the sample loss.
inline auto check_index_gradients(std::uint64_t seed) -> IndexGradCheck {
    Rng rng(seed);
    const int state_dim = 6 + static_cast<int>(uniform_index(rng, 20));
    const int k = 2 + static_cast<int>(uniform_index(rng, 15));
    const int hidden = 3 + static_cast<int>(uniform_index(rng, 12));
    const int key_dim = 2 + static_cast<int>(uniform_index(rng, 8));
    index::TrainingSample sample;
    index::IndexModel model;
    do {
        model = index::IndexModel::create(state_dim, k, hidden, key_dim, rng());
        model.index.keys *= 3.0;
        sample.s0 = random_binary(state_dim, rng);
        sample.y = Vector::Zero(k);
        for (int i = 0; i < k; ++i) {
            sample.y[i] = uniform01(rng) < 0.4 ? uniform01(rng) : 0.0;
        }
        sample.y[static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(k)))] += 0.5;
        sample.y /= sample.y.sum();
    } while (!clear_of_kinks(model.qgn.net, {sample.s0}));
    const auto lg = index::loss_and_gradients(model, sample);
    const auto loss = [&] { return index::sample_loss(model, sample); };
    IndexGradCheck out;
    out.qgn = max_fd_error(model.qgn.net, lg.grads.qgn, loss);
    out.keys = max_fd_error(model.index.keys.data(), static_cast<std::size_t>(model.index.keys.size()),
                            lg.grads.keys.data(), loss);
    return out;
}

struct PolicyGradCheck {
    double actor = 0.0;
    double critic = 0.0;
};

/// One random actor-critic instance on a frozen rollout batch.
inline auto check_policy_gradients(std::uint64_t seed) -> PolicyGradCheck {
    Rng rng(seed);
    const int state_dim = 6 + static_cast<int>(uniform_index(rng, 20));
    const int actions = 2 + static_cast<int>(uniform_index(rng, 8));
    const int hidden = 3 + static_cast<int>(uniform_index(rng, 12));
    std::vector<int> ids(static_cast<std::size_t>(actions));
    std::iota(ids.begin(), ids.end(), 0);
    a2c::A2CConfig config;
    config.entropy_coef = 0.05;
    std::vector<a2c::Sample> batch(3 + uniform_index(rng, 10));
    a2c::HRLPolicy policy;
    std::vector<Vector> states;
    do {
        policy = a2c::HRLPolicy::create(state_dim, ids, hidden, config.logit_clamp, rng());
        states.clear();
        for (auto &s : batch) {
            s.state = random_binary(state_dim, rng);
            s.action = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(actions)));
            s.ret = 2.0 * uniform01(rng) - 0.5;
            states.push_back(s.state);
        }
    } while (!clear_of_kinks(policy.actor, states) || !clear_of_kinks(policy.critic, states));
    const auto lg = a2c::a2c_loss_and_gradients(policy, batch, config);
    // The advantage is a constant for the actor, so the critic stays frozen while probing the actor.
    PolicyGradCheck out;
    out.actor = max_fd_error(policy.actor, lg.actor_grads,
                             [&] { return a2c::a2c_loss_and_gradients(policy, batch, config).actor_loss; });
    out.critic = max_fd_error(policy.critic, lg.critic_grads,
                              [&] { return a2c::a2c_loss_and_gradients(policy, batch, config).critic_loss; });
    return out;
}

/// Independent top-p: sort ids by (probability desc, id asc), take the shortest prefix with mass > p.
inline auto reference_top_p(const Vector &probs, double p) -> std::vector<int> {
    std::vector<int> ids(static_cast<std::size_t>(probs.size()));
    std::iota(ids.begin(), ids.end(), 0);
    std::sort(ids.begin(), ids.end(), [&](int a, int b) { return probs[a] > probs[b] || (probs[a] == probs[b] && a < b); });
    std::vector<int> out;
    double mass = 0.0;
    for (int id : ids) {
        out.push_back(id);
        mass += probs[id];
        if (mass > p) {
            break;
        }
    }
    return out;
}

/// Random probability vector; some draws are peaked, some near-uniform, some with exact ties.
inline auto random_probabilities(Rng &rng) -> Vector {
    const auto k = static_cast<Eigen::Index>(1 + uniform_index(rng, 64));
    Vector w(k);
    const auto shape = uniform_index(rng, 3);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double u = uniform01(rng);
        w[i] = shape == 0 ? std::exp(6.0 * u) : shape == 1 ? 1.0 + 0.01 * u : std::floor(4.0 * u) + 1.0;
    }
    return w / w.sum();
}

struct TopPCheck {
    long minimality_failures = 0;
    long monotonicity_failures = 0;
    long reference_mismatches = 0;
};

/// Minimality and monotonicity over `vectors` random vectors.
inline auto check_top_p(long vectors, std::uint64_t seed) -> TopPCheck {
    Rng rng(seed);
    TopPCheck out;
    for (long n = 0; n < vectors; ++n) {
        const Vector probs = random_probabilities(rng);
        double p1 = 0.01 + 0.98 * uniform01(rng);
        double p2 = 0.01 + 0.98 * uniform01(rng);
        if (p1 > p2) {
            std::swap(p1, p2);
        }
        const auto a = index::top_p_order(probs, p1);
        const auto b = index::top_p_order(probs, p2);
        for (const auto *fetch : {&a, &b}) {
            const double p = fetch == &a ? p1 : p2;
            double mass = 0.0;
            double smallest = 1.0;
            for (int id : *fetch) {
                mass += probs[id];
                smallest = std::min(smallest, probs[id]);
            }
            const bool exceeds = mass > p || fetch->size() == static_cast<std::size_t>(probs.size());
            if (!exceeds || mass - smallest > p) {
                ++out.minimality_failures;
            }
            if (*fetch != reference_top_p(probs, p)) {
                ++out.reference_mismatches;
            }
        }
        std::vector<int> sa(a.begin(), a.end());
        std::vector<int> sb(b.begin(), b.end());
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        if (!std::includes(sb.begin(), sb.end(), sa.begin(), sa.end())) {
            ++out.monotonicity_failures;
        }
    }
    return out;
}

/// Independent Algorithm 4: every occurrence adds (r / n) / R.
inline auto reference_target(const std::vector<env::Trajectory> &set, int k) -> Vector {
    Vector y = Vector::Zero(k);
    double total = 0.0;
    for (const auto &t : set) {
        total += t.ret;
    }
    for (const auto &t : set) {
        for (int o : t.options) {
            y[o] += (t.ret / static_cast<double>(t.options.size())) / total;
        }
    }
    return y;
}

/// Worst |sum(y) - 1| over random trajectory sets with positive rewards, plus the worst deviation
/// from the independent reference.
inline auto check_target_sums(int sets, std::uint64_t seed) -> std::pair<double, double> {
    Rng rng(seed);
    double worst_sum = 0.0;
    double worst_ref = 0.0;
    for (int n = 0; n < sets; ++n) {
        const int k = 1 + static_cast<int>(uniform_index(rng, 60));
        std::vector<env::Trajectory> set(1 + uniform_index(rng, 6));
        for (auto &t : set) {
            t.options.resize(1 + uniform_index(rng, 12));
            for (auto &o : t.options) {
                o = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k)));
            }
            t.ret = 1e-3 + 2.0 * uniform01(rng);
        }
        const auto tv = index::target_from_trajectories(set, k);
        worst_sum = std::max(worst_sum, tv.skip ? 1.0 : std::abs(tv.y.sum() - 1.0));
        worst_ref = std::max(worst_ref, (tv.y - reference_target(set, k)).cwiseAbs().maxCoeff());
    }
    return {worst_sum, worst_ref};
}

/// Small CraftWorld with explicit schemas over `groups` groups of `group_size` objects.
inline auto small_craftworld(int groups, int group_size, std::vector<std::vector<int>> schemas,
                             int distractors = 0, std::uint64_t seed = 1) -> std::shared_ptr<const env::DomainModel> {
    task::CraftworldGeneratorConfig c;
    c.object_count = groups * group_size;
    c.group_size = group_size;
    c.schema_arity = static_cast<int>(schemas.front().size());
    c.schemas = std::move(schemas);
    c.composite_count = static_cast<int>(c.schemas.size());
    c.episode.distractors.count = distractors;
    return std::make_shared<const env::DomainModel>(task::generate_craftworld_domain(c, seed));
}

}    // namespace oihrl::testing
