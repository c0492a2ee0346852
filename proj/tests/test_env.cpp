#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "oihrl/common/errors.hpp"
#include "oihrl/env/smdp_env.hpp"
#include "oihrl/task/domain_config.hpp"
#include "support.hpp"

using namespace oihrl;
using namespace oihrl::env;
using task::VariantRef;

namespace {

auto kitchen_model() -> std::shared_ptr<const DomainModel> {
    return std::make_shared<const DomainModel>(
        task::load_domain_config(std::filesystem::path(OIHRL_SOURCE_DIR) / "configs" / "kitchen_desk.json"));
}

auto option(const DomainModel &m, const std::string &name) -> int {
    for (int o = 0; o < m.option_count(); ++o) {
        if (m.graph().option_name(o) == name) {
            return o;
        }
    }
    FAIL("no option " << name);
    return -1;
}

auto object(const DomainModel &m, const std::string &name) -> std::size_t {
    return static_cast<std::size_t>(*m.graph().find_object(name));
}

auto first_composite(const DomainModel &m) -> VariantRef {
    return m.graph().composite_variants().front();
}

auto variant_of(const DomainModel &m, const std::string &task, int v) -> VariantRef {
    return {*m.graph().find_task(task), v};
}

}    // namespace

TEST_CASE("reset: craftworld scene has the recipe objects plus exactly two distractors") {
    const auto m = oihrl::testing::small_craftworld(4, 3, {{0, 1, 2}}, 2);
    const auto goal = first_composite(*m);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = reset(*m, goal, m->domain().episode, seed);
        const auto &req = m->required_objects(goal);
        int extra = 0;
        for (int o = 0; o < m->graph().object_count(); ++o) {
            const bool required = std::binary_search(req.begin(), req.end(), o);
            if (required) {
                CHECK(s.presence[static_cast<std::size_t>(o)] == 1);
            } else if (s.presence[static_cast<std::size_t>(o)] != 0) {
                ++extra;
                CHECK(m->graph().objects[static_cast<std::size_t>(o)].cls == task::ObjectClass::simple);
            }
        }
        CHECK(extra == 2);
        CHECK(std::count(s.inventory.begin(), s.inventory.end(), 1) == 0);
        CHECK(s.step_count == 0);
    }
}

TEST_CASE("reset: zero distractors leaves exactly the required objects") {
    const auto m = oihrl::testing::small_craftworld(3, 3, {{0, 1, 2}}, 0);
    const auto goal = first_composite(*m);
    const auto s = reset(*m, goal, m->domain().episode, 5);
    std::vector<int> present;
    for (int o = 0; o < m->graph().object_count(); ++o) {
        if (s.presence[static_cast<std::size_t>(o)] != 0) {
            present.push_back(o);
        }
    }
    CHECK(present == m->required_objects(goal));
}

TEST_CASE("reset: kitchen ambiguity filter keeps alternative variants impossible") {
    const auto m = kitchen_model();
    const auto goal = variant_of(*m, "omelette", 0);
    REQUIRE(m->graph().variant_name(goal) == "omelette:1");
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto s = reset(*m, goal, m->domain().episode, seed);
        for (const auto *name : {"microwave", "oven", "pot", "bowl"}) {
            CHECK(s.presence[object(*m, name)] == 0);
        }
        for (const auto *name : {"pan", "stove", "egg"}) {
            CHECK(s.presence[object(*m, name)] == 1);
        }
    }
}

TEST_CASE("apply_option: craftworld pickup, distractor penalty and workshop crafting") {
    const auto m = oihrl::testing::small_craftworld(4, 3, {{0, 1, 2}}, 2);
    const auto goal = first_composite(*m);
    const auto &cfg = m->domain().episode;
    auto s = reset(*m, goal, cfg, 3);
    const auto before = encode_state(*m, s);

    const int p11 = option(*m, "pickup_p1_1");
    auto t = apply_option(*m, s, p11, goal, cfg);
    CHECK(t.state.presence[object(*m, "p1_1")] == 0);
    CHECK(t.state.inventory[object(*m, "p1_1")] == 1);
    CHECK(t.reward == 0.0);
    CHECK_FALSE(t.done);
    const auto after = encode_state(*m, t.state);
    int flipped = 0;
    for (std::size_t i = 0; i < before.size(); ++i) {
        flipped += before[i] != after[i] ? 1 : 0;
    }
    CHECK(flipped == 2);

    // A distractor is any present simple object outside the recipe.
    const auto &req = m->required_objects(goal);
    int distractor = -1;
    for (int o = 0; o < m->graph().object_count(); ++o) {
        if (s.presence[static_cast<std::size_t>(o)] != 0 && !std::binary_search(req.begin(), req.end(), o)) {
            distractor = o;
        }
    }
    REQUIRE(distractor >= 0);
    const auto pen = apply_option(*m, t.state, option(*m, "pickup_" + m->graph().objects[static_cast<std::size_t>(distractor)].name),
                                  goal, cfg);
    CHECK(pen.reward == doctest::Approx(-0.3));
    CHECK_FALSE(pen.done);

    // Ingredients held but no workshop use yet: not achieved.
    s = t.state;
    s = apply_option(*m, s, option(*m, "pickup_p2_1"), goal, cfg).state;
    s = apply_option(*m, s, option(*m, "pickup_p3_1"), goal, cfg).state;
    CHECK_FALSE(goal_achieved(*m, s, goal));
    const auto craft = apply_option(*m, s, option(*m, "use_workshop"), goal, cfg);
    CHECK(craft.reward == 1.0);
    CHECK(craft.done);
    CHECK(craft.state.inventory[object(*m, "p1_1")] == 0);
    CHECK(craft.state.inventory[object(*m, "c1")] == 1);
    CHECK(goal_achieved(*m, craft.state, goal));
}

TEST_CASE("apply_option: failed precondition is a no-op that costs a step") {
    const auto m = oihrl::testing::small_craftworld(3, 3, {{0, 1, 2}}, 0);
    const auto goal = first_composite(*m);
    const auto &cfg = m->domain().episode;
    const auto s = reset(*m, goal, cfg, 1);
    const auto t = apply_option(*m, s, option(*m, "use_workshop"), goal, cfg);
    auto expected = s;
    expected.step_count = 1;
    CHECK(t.state == expected);
    CHECK(t.reward == 0.0);
    CHECK_THROWS_AS(apply_option(*m, s, 999, goal, cfg), InvalidInput);
    CHECK_THROWS_AS(precondition_holds(*m, s, -1), InvalidInput);
}

TEST_CASE("apply_option: episode ends at max_len") {
    const auto m = oihrl::testing::small_craftworld(3, 3, {{0, 1, 2}}, 0);
    const auto goal = first_composite(*m);
    SmdpEnv env(m, goal, m->domain().episode, 2);
    const int noop = option(*m, "use_workshop");
    for (int i = 0; i < m->domain().episode.max_len - 1; ++i) {
        CHECK_FALSE(env.step(noop).done);
    }
    CHECK(env.step(noop).done);
    CHECK(env.state().step_count == m->domain().episode.max_len);
    CHECK_THROWS(env.step(noop));
    env.reset();
    CHECK_FALSE(env.done());
    CHECK(env.state() == env.initial_state());
}

TEST_CASE("kitchen: omelette via the microwave counts for the stove variant") {
    const auto m = kitchen_model();
    const auto stove = variant_of(*m, "omelette", 0);
    const auto micro = variant_of(*m, "omelette", 1);
    auto cfg = m->domain().episode;
    cfg.distractors.probability = 0.0;
    auto s = reset(*m, micro, cfg, 1);
    const std::vector<std::string> plan{"pickup_pan", "puton_microwave", "pickup_egg",
                                        "puton_pan",  "break_egg",       "cookon_microwave"};
    double ret = 0.0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        CHECK_FALSE(goal_achieved(*m, s, stove));
        REQUIRE(precondition_holds(*m, s, option(*m, plan[i])));
        const auto t = apply_option(*m, s, option(*m, plan[i]), stove, cfg);
        ret += t.reward;
        CHECK(t.done == (i + 1 == plan.size()));
        s = t.state;
        CHECK_FALSE(check_invariants(*m, s));
    }
    CHECK(goal_achieved(*m, s, stove));
    CHECK(s.flags[object(*m, "egg") * static_cast<std::size_t>(kKitchenFlagCount) + kCooked] == 1);
    CHECK(std::abs(ret - (1.0 - 0.002 * 6)) < 1e-12);
}

TEST_CASE("kitchen: rule preconditions") {
    const auto m = kitchen_model();
    const auto goal = variant_of(*m, "toast", 0);
    auto cfg = m->domain().episode;
    cfg.distractors.probability = 0.0;
    const auto s0 = reset(*m, goal, cfg, 1);
    // Slicing needs a held cutter; cooking needs something on the appliance.
    CHECK_FALSE(precondition_holds(*m, s0, option(*m, "slice_bread")));
    CHECK_FALSE(precondition_holds(*m, s0, option(*m, "cookon_stove")));
    CHECK_FALSE(precondition_holds(*m, s0, option(*m, "puton_pan")));
    auto s = apply_option(*m, s0, option(*m, "pickup_knife"), goal, cfg).state;
    CHECK(precondition_holds(*m, s, option(*m, "slice_bread")));
    // Hand capacity 1.
    CHECK_FALSE(precondition_holds(*m, s, option(*m, "pickup_bread")));
}

TEST_CASE("encode_state: empty scene is zero and kitchen dimension is constant") {
    const auto m = kitchen_model();
    const auto e = encode_state(*m, empty_state(*m));
    CHECK(std::all_of(e.begin(), e.end(), [](auto b) { return b == 0; }));
    // 21 objects x (presence + inventory + 7 flags + 9 receptacle slots).
    CHECK(m->state_dim() == 21 * (2 + 7 + 9));
    Rng rng(3);
    for (int n = 0; n < 20; ++n) {
        const auto ref = m->graph().composite_variants()[uniform_index(rng, m->graph().composite_variants().size())];
        SmdpEnv env(m, ref, m->domain().episode, rng());
        for (int i = 0; i < 30 && !env.done(); ++i) {
            env.step(static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(m->option_count()))));
            CHECK(encode_state(*m, env.state()).size() == static_cast<std::size_t>(m->state_dim()));
            CHECK(encode_features(*m, env.state()).size() == m->state_dim());
            CHECK_FALSE(check_invariants(*m, env.state()));
        }
    }
}

TEST_CASE("replay: seed, variant and option sequence fix the outcome") {
    const auto m = kitchen_model();
    Rng rng(9);
    for (int n = 0; n < 10; ++n) {
        const auto ref = m->graph().composite_variants()[uniform_index(rng, m->graph().composite_variants().size())];
        const auto seed = rng();
        std::vector<int> ops(40);
        for (auto &o : ops) {
            o = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(m->option_count())));
        }
        SmdpEnv a(m, ref, m->domain().episode, seed);
        SmdpEnv b(m, ref, m->domain().episode, seed);
        std::vector<TransitionRecord> ta;
        std::vector<TransitionRecord> tb;
        a.set_trace(&ta);
        b.set_trace(&tb);
        for (int o : ops) {
            if (a.done()) {
                break;
            }
            a.step(o);
            b.step(o);
        }
        CHECK(a.state() == b.state());
        CHECK(a.episode_return() == b.episode_return());
        std::ostringstream sa;
        std::ostringstream sb;
        write_trace(sa, ta);
        write_trace(sb, tb);
        CHECK(sa.str() == sb.str());
        CHECK(sa.str().rfind("step,option,reward,done\n", 0) == 0);
    }
}
