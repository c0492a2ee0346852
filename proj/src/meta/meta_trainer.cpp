#include "oihrl/meta/meta_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "oihrl/common/errors.hpp"
#include "oihrl/common/rng.hpp"

namespace oihrl::meta {

namespace {

void enumerate_orders(const env::DomainModel &model, VariantRef goal, const task::EpisodeConfig &episode,
                      const env::EnvState &state, std::vector<int> &remaining, std::vector<int> &prefix,
                      std::vector<std::vector<int>> &out, std::size_t cap) {
    if (out.size() >= cap) {
        return;
    }
    if (remaining.empty()) {
        out.push_back(prefix);
        return;
    }
    for (std::size_t i = 0; i < remaining.size(); ++i) {
        const int o = remaining[i];
        if (!env::precondition_holds(model, state, o)) {
            continue;
        }
        auto next = state;
        env::apply_option_inplace(model, next, o, goal, episode);
        const bool last = remaining.size() == 1;
        if (env::goal_achieved(model, next, goal) != last) {
            continue;
        }
        prefix.push_back(o);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(i));
        enumerate_orders(model, goal, episode, next, remaining, prefix, out, cap);
        remaining.insert(remaining.begin() + static_cast<std::ptrdiff_t>(i), o);
        prefix.pop_back();
    }
}

}    // namespace

HrlOracle::HrlOracle(std::shared_ptr<const env::DomainModel> model, OracleConfig config)
    : model_(std::move(model)), config_(config) {
    if (config_.trajectories_per_call < 1) {
        throw ConfigError("oracle: trajectories_per_call must be at least 1");
    }
    if (config_.max_orders < 1) {
        throw ConfigError("oracle: max_orders must be at least 1");
    }
    std::size_t n = 0;
    for (const auto &t : model_->graph().tasks) {
        offset_.push_back(n);
        n += t.variants.size();
    }
    cache_.resize(n);
}

auto HrlOracle::valid_orders(VariantRef goal) const -> const std::vector<std::vector<int>> & {
    if (!model_->graph().contains(goal)) {
        throw InvalidInput("oracle: unknown goal variant");
    }
    auto &slot = cache_[offset_[static_cast<std::size_t>(goal.task)] + static_cast<std::size_t>(goal.variant)];
    if (!slot) {
        auto episode = model_->domain().episode;
        episode.max_len = std::numeric_limits<int>::max();
        episode.distractors.kind = task::DistractorKind::fixed_count;
        episode.distractors.count = 0;
        const auto s0 = env::reset(*model_, goal, episode, 0);
        auto remaining = model_->recipe(goal);
        std::vector<int> prefix;
        auto orders = std::make_unique<std::vector<std::vector<int>>>();
        enumerate_orders(*model_, goal, episode, s0, remaining, prefix, *orders,
                         static_cast<std::size_t>(config_.max_orders));
        slot = std::move(orders);
    }
    return *slot;
}

auto HrlOracle::solve(VariantRef goal, const env::EnvState &initial, std::span<const int> fetched,
                      const task::EpisodeConfig &episode, std::uint64_t seed) const -> std::vector<env::Trajectory> {
    const auto &recipe = model_->recipe(goal);
    for (int o : recipe) {
        if (std::find(fetched.begin(), fetched.end(), o) == fetched.end()) {
            return {};
        }
    }
    const auto &orders = valid_orders(goal);
    if (orders.empty()) {
        return {};
    }
    Rng rng(derive_seed(seed, {0x0AC1E}));
    std::vector<std::size_t> picks;
    for (int m = 0; m < config_.trajectories_per_call; ++m) {
        const auto idx = static_cast<std::size_t>(uniform_index(rng, orders.size()));
        if (std::find(picks.begin(), picks.end(), idx) == picks.end()) {
            picks.push_back(idx);
        }
    }
    std::vector<env::Trajectory> out;
    for (auto idx : picks) {
        env::SmdpEnv sim(model_, goal, episode, initial);
        env::Trajectory tr;
        bool ok = true;
        for (int o : orders[idx]) {
            if (sim.done()) {
                ok = false;
                break;
            }
            const auto step = sim.step(o);
            ok = ok && step.executed;
            tr.options.push_back(o);
        }
        if (ok && env::goal_achieved(*model_, sim.state(), goal)) {
            tr.ret = sim.episode_return();
            out.push_back(std::move(tr));
        }
    }
    return out;
}

auto oracle_solve(std::shared_ptr<const env::DomainModel> model, VariantRef goal, std::span<const int> fetched,
                  const task::EpisodeConfig &episode, const OracleConfig &config, std::uint64_t seed)
    -> std::vector<env::Trajectory> {
    const auto s0 = env::reset(*model, goal, episode, seed);
    const HrlOracle oracle(std::move(model), config);
    return oracle.solve(goal, s0, fetched, episode, derive_seed(seed, {1}));
}

auto TrainingReport::mean_loss(std::size_t begin, std::size_t end) const -> double {
    end = std::min(end, records.size());
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = begin; i < end; ++i) {
        if (records[i].applied) {
            sum += records[i].mean_loss;
            ++n;
        }
    }
    return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

void write_metrics(std::ostream &os, const TrainingReport &report) {
    os << "iteration,mean_loss,skipped_count\n";
    const auto prec = os.precision(17);
    for (const auto &r : report.records) {
        os << r.iteration << ',' << r.mean_loss << ',' << r.skipped << '\n';
    }
    os.precision(prec);
}

auto meta_train(const HrlOracle &oracle, std::span<const VariantRef> train, index::IndexModel &model,
                const task::EpisodeConfig &episode, const MetaTrainConfig &config, const ProgressFn &progress)
    -> TrainingReport {
    if (train.empty()) {
        throw ConfigError("meta-train: no training variants");
    }
    if (config.iterations < 1 || config.batch_size < 1) {
        throw ConfigError("meta-train: iterations and batch_size must be at least 1");
    }
    const auto &dm = oracle.model();
    nn::OptimizerState optimizer(config.optimizer);
    TrainingReport report;
    report.records.reserve(static_cast<std::size_t>(config.iterations));
    std::vector<index::TrainingSample> batch;
    for (int it = 0; it < config.iterations; ++it) {
        Rng rng(derive_seed(config.seed, {0x3E7A, static_cast<std::uint64_t>(it)}));
        batch.clear();
        IterationRecord rec;
        rec.iteration = it;
        for (int b = 0; b < config.batch_size; ++b) {
            const auto goal = train[static_cast<std::size_t>(uniform_index(rng, train.size()))];
            const auto env_seed = rng();
            const auto s0 = env::reset(dm, goal, episode, env_seed);
            const auto x = env::encode_features(dm, s0);
            const auto fetch = index::select_options(model, x, config.top_p);
            const auto lambda = oracle.solve(goal, s0, fetch.fetched, episode, rng());
            auto target = index::target_from_trajectories(lambda, dm.option_count());
            if (target.skip) {
                ++rec.skipped;
                continue;
            }
            batch.push_back({x, std::move(target.y)});
        }
        if (batch.empty()) {
            rec.mean_loss = std::numeric_limits<double>::quiet_NaN();
        } else {
            const auto r = index::update(model, batch, optimizer);
            rec.mean_loss = r.mean_loss;
            rec.applied = r.applied;
        }
        report.records.push_back(rec);
        if (progress) {
            progress(rec);
        }
    }
    return report;
}

}    // namespace oihrl::meta
