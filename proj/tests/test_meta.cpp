#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "oihrl/meta/meta_trainer.hpp"
#include "oihrl/task/domain_config.hpp"
#include "support.hpp"

using namespace oihrl;
using namespace oihrl::meta;
using env::SmdpEnv;
using task::VariantRef;

namespace {

auto desk() -> std::shared_ptr<const env::DomainModel> {
    return std::make_shared<const env::DomainModel>(
        task::generate_craftworld_domain({60, 5, 8, 3, true, {}, {}, {}}, 7));
}

auto kitchen() -> std::shared_ptr<const env::DomainModel> {
    return std::make_shared<const env::DomainModel>(
        task::load_domain_config(std::filesystem::path(OIHRL_SOURCE_DIR) / "configs" / "kitchen_desk.json"));
}

auto all_options(const env::DomainModel &m) -> std::vector<int> {
    std::vector<int> out(static_cast<std::size_t>(m.option_count()));
    std::iota(out.begin(), out.end(), 0);
    return out;
}

// Replays a trajectory from the same scene; returns the realized return, or NaN if any step misbehaves.
auto replay(const std::shared_ptr<const env::DomainModel> &m, VariantRef goal, std::uint64_t seed,
            const env::Trajectory &t) -> double {
    SmdpEnv e(m, goal, m->domain().episode, seed);
    for (std::size_t i = 0; i < t.options.size(); ++i) {
        if (e.done()) {
            return std::nan("");
        }
        const auto out = e.step(t.options[i]);
        if (!out.executed) {
            return std::nan("");
        }
    }
    if (!e.done() || !env::goal_achieved(*m, e.state(), goal)) {
        return std::nan("");
    }
    return e.episode_return();
}

}    // namespace

TEST_CASE("oracle: craftworld trajectories are three pickups then the workshop, return exactly 1") {
    const auto m = oihrl::testing::small_craftworld(4, 3, {{0, 1, 2}}, 2);
    const auto goal = m->graph().composite_variants().front();
    const auto &recipe = m->recipe(goal);
    HrlOracle oracle(m, {});
    CHECK(oracle.valid_orders(goal).size() == 6);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto set = oracle.solve(goal, env::reset(*m, goal, m->domain().episode, seed), recipe,
                                      m->domain().episode, seed);
        REQUIRE_FALSE(set.empty());
        std::set<std::vector<int>> distinct;
        for (const auto &t : set) {
            CHECK(t.options.size() == 4);
            CHECK(m->graph().option_name(t.options.back()) == "use_workshop");
            CHECK(t.ret == 1.0);
            CHECK(replay(m, goal, seed, t) == 1.0);
            distinct.insert(t.options);
        }
        CHECK(distinct.size() == set.size());
        CHECK(set.size() <= 4);
    }
}

TEST_CASE("oracle: a fetch missing a recipe option yields nothing") {
    const auto m = oihrl::testing::small_craftworld(4, 3, {{0, 1, 2}}, 2);
    const auto goal = m->graph().composite_variants().front();
    auto fetched = all_options(*m);
    const int drop = m->recipe(goal)[1];
    fetched.erase(std::find(fetched.begin(), fetched.end(), drop));
    CHECK(oracle_solve(m, goal, fetched, m->domain().episode, {}, 3).empty());
}

TEST_CASE("oracle: a base goal is solved by its single option") {
    const auto m = oihrl::testing::small_craftworld(3, 3, {{0, 1}}, 0);
    const VariantRef goal{m->graph().base_tasks[0], 0};
    const auto set = oracle_solve(m, goal, all_options(*m), m->domain().episode, {}, 1);
    REQUIRE(set.size() == 1);
    CHECK(set[0].options == std::vector<int>{0});
    CHECK(set[0].ret == 1.0);
}

TEST_CASE("oracle: with the whole library every desk variant is solved and replays") {
    const auto m = desk();
    const auto full = all_options(*m);
    HrlOracle oracle(m, {});
    for (const auto &goal : m->domain().split.train) {
        const auto seed = derive_seed(5, {static_cast<std::uint64_t>(goal.task), static_cast<std::uint64_t>(goal.variant)});
        const auto set = oracle.solve(goal, env::reset(*m, goal, m->domain().episode, seed), full, m->domain().episode, seed);
        REQUIRE_FALSE(set.empty());
        for (const auto &t : set) {
            CHECK(t.options.size() == 4);
            CHECK(t.ret == 1.0);
            CHECK(replay(m, goal, seed, t) == 1.0);
        }
    }
}

TEST_CASE("oracle: kitchen returns are 1 - 0.002 n and replay to the goal") {
    const auto m = kitchen();
    const auto full = all_options(*m);
    HrlOracle oracle(m, {});
    for (const auto &goal : m->graph().composite_variants()) {
        const auto n = static_cast<double>(m->recipe(goal).size());
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            const auto set =
                oracle.solve(goal, env::reset(*m, goal, m->domain().episode, seed), full, m->domain().episode, seed);
            REQUIRE_FALSE(set.empty());
            for (const auto &t : set) {
                CHECK(t.options.size() == m->recipe(goal).size());
                CHECK(std::abs(t.ret - (1.0 - 0.002 * n)) < 1e-12);
                CHECK(std::abs(replay(m, goal, seed, t) - t.ret) < 1e-15);
                auto sorted = t.options;
                std::sort(sorted.begin(), sorted.end());
                CHECK(sorted == m->recipe(goal));
            }
        }
    }
}

TEST_CASE("meta_train: smoke run on a 9-object domain") {
    const auto m = oihrl::testing::small_craftworld(3, 3, {{0, 1}, {1, 2}}, 0);
    auto model = index::IndexModel::create(m->state_dim(), m->option_count(), 16, 8, 1);
    HrlOracle oracle(m, {});
    MetaTrainConfig c;
    c.iterations = 10;
    c.batch_size = 8;
    c.seed = 3;
    const auto report = meta_train(oracle, m->domain().split.train, model, m->domain().episode, c);
    REQUIRE(report.records.size() == 10);
    for (const auto &r : report.records) {
        CHECK(std::isfinite(r.mean_loss));
        CHECK(r.skipped < c.batch_size);
    }
    std::ostringstream os;
    write_metrics(os, report);
    CHECK(os.str().rfind("iteration,mean_loss,skipped_count\n0,", 0) == 0);
}

TEST_CASE("meta_train: identical seeds give identical parameters") {
    const auto m = oihrl::testing::small_craftworld(3, 3, {{0, 1}, {1, 2}}, 0);
    HrlOracle oracle(m, {});
    MetaTrainConfig c;
    c.iterations = 20;
    c.batch_size = 4;
    c.seed = 8;
    auto a = index::IndexModel::create(m->state_dim(), m->option_count(), 16, 8, 2);
    auto b = a;
    meta_train(oracle, m->domain().split.train, a, m->domain().episode, c);
    meta_train(oracle, m->domain().split.train, b, m->domain().episode, c);
    CHECK(a.index.keys == b.index.keys);
    CHECK(a.qgn.net.layers()[0].weights == b.qgn.net.layers()[0].weights);
}

TEST_CASE("meta_train: desk run lowers the loss") {
    const auto m = desk();
    HrlOracle oracle(m, {});
    MetaTrainConfig c;
    c.seed = 11;
    auto model = index::IndexModel::create(m->state_dim(), m->option_count(), c.hidden, c.key_dim, 12);
    const auto report = meta_train(oracle, m->domain().split.train, model, m->domain().episode, c);
    const auto n = report.records.size();
    const double first = report.mean_loss(0, n / 10);
    const double last = report.mean_loss(n - n / 10, n);
    MESSAGE("mean loss first 10%: " << first << ", last 10%: " << last);
    CHECK(last < first);
}
