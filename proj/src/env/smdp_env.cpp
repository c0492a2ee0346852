#include "oihrl/env/smdp_env.hpp"

#include <algorithm>
#include <ostream>

#include "oihrl/common/errors.hpp"
#include "oihrl/common/rng.hpp"

namespace oihrl::env {

using task::AtomKind;
using task::GoalAtom;
using task::ObjectClass;
using task::OptionKind;

namespace {

auto sz(int i) -> std::size_t {
    return static_cast<std::size_t>(i);
}

auto liquid_flag(task::Liquid l) -> int {
    return kHasCoffee + static_cast<int>(l);
}

auto get_flag(const DomainModel &m, const EnvState &s, int obj, int flag) -> bool {
    const int f = m.layout().flags;
    return f > 0 && s.flags[sz(obj * f + flag)] != 0;
}

void set_flag(const DomainModel &m, EnvState &s, int obj, int flag) {
    const int f = m.layout().flags;
    if (f > 0) {
        s.flags[sz(obj * f + flag)] = 1;
    }
}

auto held_count(const EnvState &s) -> int {
    return static_cast<int>(std::count(s.inventory.begin(), s.inventory.end(), std::uint8_t{1}));
}

/// Lowest-id held object other than `except`, or -1.
auto held_object(const EnvState &s, int except = -1) -> int {
    for (std::size_t i = 0; i < s.inventory.size(); ++i) {
        if (s.inventory[i] != 0 && static_cast<int>(i) != except) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

/// True if following `location` from `obj` reaches `target`.
auto rests_on(const EnvState &s, int obj, int target) -> bool {
    int cur = s.location[sz(obj)];
    for (std::size_t guard = 0; cur >= 0 && guard <= s.location.size(); ++guard) {
        if (cur == target) {
            return true;
        }
        cur = s.location[sz(cur)];
    }
    return false;
}

auto occupied(const EnvState &s, int obj) -> bool {
    return std::find(s.location.begin(), s.location.end(), obj) != s.location.end();
}

auto any_complex_held(const DomainModel &m, const EnvState &s) -> bool {
    const auto &objs = m.graph().objects;
    for (std::size_t i = 0; i < objs.size(); ++i) {
        if (objs[i].cls == ObjectClass::complex && s.inventory[i] != 0) {
            return true;
        }
    }
    return false;
}

auto atom_holds(const DomainModel &m, const EnvState &s, const GoalAtom &a) -> bool {
    switch (a.kind) {
    case AtomKind::held:
        return s.inventory[sz(a.object)] != 0;
    case AtomKind::present:
        return s.presence[sz(a.object)] != 0;
    case AtomKind::cooked:
        return get_flag(m, s, a.object, kCooked);
    case AtomKind::sliced:
        return get_flag(m, s, a.object, kSliced);
    case AtomKind::broken:
        return get_flag(m, s, a.object, kBroken);
    case AtomKind::contains:
        return get_flag(m, s, a.object, kHasCoffee + a.arg);
    case AtomKind::on:
        return s.location[sz(a.object)] == a.arg;
    case AtomKind::occupied:
        return occupied(s, a.object);
    case AtomKind::activated:
        return get_flag(m, s, a.object, kActivated);
    case AtomKind::crafted:
        return any_complex_held(m, s);
    }
    return false;
}

/// Goal condition implied by a base task's option.
auto base_goal(const task::OptionBinding &b) -> GoalAtom {
    switch (b.kind) {
    case OptionKind::pickup:
        return {AtomKind::held, b.object, -1};
    case OptionKind::puton:
        return {AtomKind::occupied, b.object, -1};
    case OptionKind::cookon:
        return {AtomKind::activated, b.object, -1};
    case OptionKind::slice:
        return {AtomKind::sliced, b.object, -1};
    case OptionKind::break_object:
        return {AtomKind::broken, b.object, -1};
    case OptionKind::fill:
        return {AtomKind::contains, b.object, static_cast<int>(*b.liquid)};
    case OptionKind::workshop:
        return {AtomKind::crafted, -1, -1};
    }
    return {};
}

auto subset_of(const std::vector<int> &sorted_small, const std::vector<std::uint8_t> &mask) -> bool {
    return std::all_of(sorted_small.begin(), sorted_small.end(), [&](int o) { return mask[sz(o)] != 0; });
}

/// Composite variant to craft at the workshop: goal task first, then catalog order.
auto craftable(const DomainModel &m, const EnvState &s, VariantRef goal) -> std::optional<VariantRef> {
    const auto &g = m.graph();
    auto try_task = [&](int t) -> std::optional<VariantRef> {
        const auto &task = g.tasks[sz(t)];
        if (task.is_base() || !task.product) {
            return std::nullopt;
        }
        for (std::size_t v = 0; v < task.variants.size(); ++v) {
            const VariantRef ref{t, static_cast<int>(v)};
            const auto &ing = m.ingredients(ref);
            if (!ing.empty() && subset_of(ing, s.inventory)) {
                return ref;
            }
        }
        return std::nullopt;
    };
    if (goal.task >= 0) {
        if (auto r = try_task(goal.task)) {
            return r;
        }
    }
    for (int t = 0; t < static_cast<int>(g.tasks.size()); ++t) {
        if (t != goal.task) {
            if (auto r = try_task(t)) {
                return r;
            }
        }
    }
    return std::nullopt;
}

auto check_option(const DomainModel &m, int option) -> const task::OptionBinding & {
    if (option < 0 || option >= m.option_count()) {
        throw InvalidInput("unknown option id " + std::to_string(option));
    }
    return m.graph().bindings[sz(option)];
}

auto precondition_impl(const DomainModel &m, const EnvState &s, const task::OptionBinding &b, VariantRef goal)
    -> bool {
    const auto &g = m.graph();
    const int o = b.object;
    const auto &info = g.objects[sz(o)];
    switch (b.kind) {
    case OptionKind::pickup:
        return s.presence[sz(o)] != 0 && info.has(task::kPickupable)
               && (g.hand_capacity == 0 || held_count(s) < g.hand_capacity);
    case OptionKind::puton: {
        if (s.presence[sz(o)] == 0 || !info.has(task::kReceptacle)) {
            return false;
        }
        const int h = held_object(s, o);
        return h >= 0 && !rests_on(s, o, h);
    }
    case OptionKind::cookon:
        return s.presence[sz(o)] != 0 && info.has(task::kAppliance) && occupied(s, o);
    case OptionKind::slice: {
        if (s.presence[sz(o)] == 0 || !info.has(task::kSliceable)) {
            return false;
        }
        for (std::size_t i = 0; i < s.inventory.size(); ++i) {
            if (s.inventory[i] != 0 && g.objects[i].has(task::kCutter)) {
                return true;
            }
        }
        return false;
    }
    case OptionKind::break_object:
        return s.presence[sz(o)] != 0 && info.has(task::kBreakable) && !get_flag(m, s, o, kBroken);
    case OptionKind::fill: {
        if (s.inventory[sz(o)] == 0 || !info.has(task::kFillable)) {
            return false;
        }
        const auto src = m.liquid_source(*b.liquid);
        if (!src || s.presence[sz(*src)] == 0) {
            return false;
        }
        return !get_flag(m, s, o, kHasCoffee) && !get_flag(m, s, o, kHasWater) && !get_flag(m, s, o, kHasWine);
    }
    case OptionKind::workshop:
        return s.presence[sz(o)] != 0 && craftable(m, s, goal).has_value();
    }
    return false;
}

}    // namespace

DomainModel::DomainModel(task::Domain domain) : domain_(std::move(domain)), recipes_(domain_.graph) {
    const auto &g = domain_.graph;
    layout_.objects = g.object_count();
    layout_.flags = g.physics == task::Physics::kitchen ? kKitchenFlagCount : 0;
    layout_.receptacle_slot.assign(sz(g.object_count()), -1);
    if (g.physics == task::Physics::kitchen) {
        for (int i = 0; i < g.object_count(); ++i) {
            if (g.objects[sz(i)].has(task::kReceptacle)) {
                layout_.receptacle_slot[sz(i)] = static_cast<int>(layout_.receptacles.size());
                layout_.receptacles.push_back(i);
            }
        }
    }

    liquid_sources_.assign(task::kLiquidCount, std::nullopt);
    for (int i = 0; i < g.object_count(); ++i) {
        const auto &info = g.objects[sz(i)];
        if (info.source_of && !liquid_sources_[sz(static_cast<int>(*info.source_of))]) {
            liquid_sources_[sz(static_cast<int>(*info.source_of))] = i;
        }
    }

    for (int o = 0; o < g.option_count(); ++o) {
        const auto &b = g.bindings[sz(o)];
        std::vector<int> objs{b.object};
        if (b.kind == OptionKind::fill && b.liquid) {
            if (auto src = liquid_source(*b.liquid)) {
                objs.push_back(*src);
            }
        }
        std::sort(objs.begin(), objs.end());
        objs.erase(std::unique(objs.begin(), objs.end()), objs.end());
        option_objects_.push_back(std::move(objs));
    }

    std::size_t offset = 0;
    for (const auto &t : g.tasks) {
        variant_offset_.push_back(offset);
        offset += t.variants.size();
    }
    required_.resize(offset);
    ingredients_.resize(offset);
    for (std::size_t t = 0; t < g.tasks.size(); ++t) {
        for (std::size_t v = 0; v < g.tasks[t].variants.size(); ++v) {
            const VariantRef ref{static_cast<int>(t), static_cast<int>(v)};
            std::vector<int> req;
            std::vector<int> ing;
            for (int o : recipes_.at(ref)) {
                const auto &objs = option_objects_[sz(o)];
                req.insert(req.end(), objs.begin(), objs.end());
                const auto &b = g.bindings[sz(o)];
                if (b.kind == OptionKind::pickup && g.objects[sz(b.object)].cls == ObjectClass::simple) {
                    ing.push_back(b.object);
                }
            }
            std::sort(req.begin(), req.end());
            req.erase(std::unique(req.begin(), req.end()), req.end());
            std::sort(ing.begin(), ing.end());
            ing.erase(std::unique(ing.begin(), ing.end()), ing.end());
            required_[flat(ref)] = std::move(req);
            ingredients_[flat(ref)] = std::move(ing);
        }
    }
}

auto DomainModel::flat(VariantRef ref) const -> std::size_t {
    if (!graph().contains(ref)) {
        throw InvalidInput("unknown task variant");
    }
    return variant_offset_[sz(ref.task)] + sz(ref.variant);
}

auto DomainModel::option_objects(int option) const -> const std::vector<int> & {
    if (option < 0 || option >= option_count()) {
        throw InvalidInput("unknown option id " + std::to_string(option));
    }
    return option_objects_[sz(option)];
}

auto DomainModel::required_objects(VariantRef ref) const -> const std::vector<int> & {
    return required_[flat(ref)];
}

auto DomainModel::ingredients(VariantRef ref) const -> const std::vector<int> & {
    return ingredients_[flat(ref)];
}

auto DomainModel::liquid_source(task::Liquid l) const -> std::optional<int> {
    return liquid_sources_[sz(static_cast<int>(l))];
}

auto empty_state(const DomainModel &model) -> EnvState {
    const auto &l = model.layout();
    EnvState s;
    s.presence.assign(sz(l.objects), 0);
    s.inventory.assign(sz(l.objects), 0);
    s.flags.assign(sz(l.objects * l.flags), 0);
    s.location.assign(sz(l.objects), -1);
    return s;
}

auto reset(const DomainModel &model, VariantRef goal, const task::EpisodeConfig &config, std::uint64_t seed)
    -> EnvState {
    const auto &g = model.graph();
    if (!g.contains(goal)) {
        throw InvalidInput("reset: unknown goal variant");
    }
    EnvState s = empty_state(model);
    for (int o : model.required_objects(goal)) {
        s.presence[sz(o)] = 1;
    }

    std::vector<int> candidates;
    for (int o = 0; o < g.object_count(); ++o) {
        const auto cls = g.objects[sz(o)].cls;
        const bool eligible = g.physics == task::Physics::craftworld ? cls == ObjectClass::simple
                                                                     : cls != ObjectClass::complex;
        if (eligible && s.presence[sz(o)] == 0) {
            candidates.push_back(o);
        }
    }

    const auto &goal_task = g.tasks[sz(goal.task)];
    auto admissible = [&](int cand) {
        if (!config.distractors.ambiguity_filter) {
            return true;
        }
        for (std::size_t v = 0; v < goal_task.variants.size(); ++v) {
            if (static_cast<int>(v) == goal.variant) {
                continue;
            }
            const auto &req = model.required_objects({goal.task, static_cast<int>(v)});
            if (subset_of(req, s.presence)) {
                continue;    // already available without the candidate
            }
            const bool enabled = std::all_of(req.begin(), req.end(),
                                             [&](int o) { return o == cand || s.presence[sz(o)] != 0; });
            if (enabled) {
                return false;
            }
        }
        return true;
    };

    Rng rng(derive_seed(seed, {0xD157}));
    if (config.distractors.kind == task::DistractorKind::fixed_count) {
        for (std::size_t i = candidates.size(); i > 1; --i) {
            std::swap(candidates[i - 1], candidates[uniform_index(rng, i)]);
        }
        int added = 0;
        for (int c : candidates) {
            if (added >= config.distractors.count) {
                break;
            }
            if (admissible(c)) {
                s.presence[sz(c)] = 1;
                ++added;
            }
        }
    } else {
        for (int c : candidates) {
            if (uniform01(rng) < config.distractors.probability && admissible(c)) {
                s.presence[sz(c)] = 1;
            }
        }
    }
    return s;
}

auto precondition_holds(const DomainModel &model, const EnvState &state, int option) -> bool {
    return precondition_impl(model, state, check_option(model, option), VariantRef{});
}

auto apply_option_inplace(const DomainModel &m, EnvState &s, int option, VariantRef goal,
                          const task::EpisodeConfig &config) -> StepOutcome {
    const auto &b = check_option(m, option);
    const auto &g = m.graph();
    StepOutcome out;
    ++s.step_count;
    out.reward = -config.step_penalty;
    if (precondition_impl(m, s, b, goal)) {
        out.executed = true;
        const int o = b.object;
        switch (b.kind) {
        case OptionKind::pickup: {
            s.presence[sz(o)] = 0;
            s.inventory[sz(o)] = 1;
            s.location[sz(o)] = -1;
            if (g.objects[sz(o)].cls == ObjectClass::simple && g.contains(goal)) {
                const auto &req = m.required_objects(goal);
                if (!std::binary_search(req.begin(), req.end(), o)) {
                    out.reward -= config.penalty_irrelevant;
                }
            }
            break;
        }
        case OptionKind::puton: {
            const int h = held_object(s, o);
            s.inventory[sz(h)] = 0;
            s.presence[sz(h)] = 1;
            s.location[sz(h)] = o;
            break;
        }
        case OptionKind::cookon:
            for (int x = 0; x < g.object_count(); ++x) {
                if (rests_on(s, x, o)) {
                    set_flag(m, s, x, kCooked);
                }
            }
            set_flag(m, s, o, kActivated);
            break;
        case OptionKind::slice:
            set_flag(m, s, o, kSliced);
            break;
        case OptionKind::break_object:
            set_flag(m, s, o, kBroken);
            break;
        case OptionKind::fill:
            set_flag(m, s, o, liquid_flag(*b.liquid));
            break;
        case OptionKind::workshop: {
            const auto ref = *craftable(m, s, goal);
            for (int ing : m.ingredients(ref)) {
                s.inventory[sz(ing)] = 0;
            }
            const int product = *g.tasks[sz(ref.task)].product;
            s.inventory[sz(product)] = 1;
            set_flag(m, s, o, kActivated);
            if (ref.task != goal.task) {
                out.reward -= config.penalty_irrelevant;
            }
            break;
        }
        }
    }
    if (g.contains(goal) && goal_achieved(m, s, goal)) {
        out.reward += config.reward_complete;
        out.done = true;
    }
    if (s.step_count >= config.max_len) {
        out.done = true;
    }
    return out;
}

auto apply_option(const DomainModel &model, const EnvState &state, int option, VariantRef goal,
                  const task::EpisodeConfig &config) -> Transition {
    Transition t{state, 0.0, false};
    const auto o = apply_option_inplace(model, t.state, option, goal, config);
    t.reward = o.reward;
    t.done = o.done;
    return t;
}

auto goal_achieved(const DomainModel &model, const EnvState &state, VariantRef goal) -> bool {
    const auto &g = model.graph();
    if (!g.contains(goal)) {
        throw InvalidInput("goal_achieved: unknown goal variant");
    }
    const auto &task = g.tasks[sz(goal.task)];
    if (task.is_base()) {
        return atom_holds(model, state, base_goal(g.bindings[sz(*task.option)]));
    }
    for (const auto &v : task.variants) {
        if (!v.goal.empty()
            && std::all_of(v.goal.begin(), v.goal.end(), [&](const GoalAtom &a) { return atom_holds(model, state, a); })) {
            return true;
        }
    }
    return false;
}

auto encode_state(const DomainModel &model, const EnvState &state) -> std::vector<std::uint8_t> {
    const auto &l = model.layout();
    std::vector<std::uint8_t> out;
    out.reserve(sz(l.dim()));
    out.insert(out.end(), state.presence.begin(), state.presence.end());
    out.insert(out.end(), state.inventory.begin(), state.inventory.end());
    out.insert(out.end(), state.flags.begin(), state.flags.end());
    const auto r = l.receptacles.size();
    if (r > 0) {
        for (int o = 0; o < l.objects; ++o) {
            const auto base = out.size();
            out.resize(base + r, 0);
            const int loc = state.location[sz(o)];
            if (loc >= 0 && l.receptacle_slot[sz(loc)] >= 0) {
                out[base + sz(l.receptacle_slot[sz(loc)])] = 1;
            }
        }
    }
    return out;
}

auto encode_features(const DomainModel &model, const EnvState &state) -> Eigen::VectorXd {
    const auto bits = encode_state(model, state);
    Eigen::VectorXd v(static_cast<Eigen::Index>(bits.size()));
    for (std::size_t i = 0; i < bits.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = bits[i];
    }
    return v;
}

auto check_invariants(const DomainModel &model, const EnvState &s) -> std::optional<std::string> {
    const auto &l = model.layout();
    const auto &g = model.graph();
    if (s.presence.size() != sz(l.objects) || s.inventory.size() != sz(l.objects)
        || s.flags.size() != sz(l.objects * l.flags) || s.location.size() != sz(l.objects)) {
        return "state vectors do not match the domain layout";
    }
    for (int o = 0; o < l.objects; ++o) {
        if (s.presence[sz(o)] != 0 && s.inventory[sz(o)] != 0) {
            return "object '" + g.objects[sz(o)].name + "' is both in the scene and held";
        }
        const int loc = s.location[sz(o)];
        if (loc >= l.objects || loc < -1) {
            return "object '" + g.objects[sz(o)].name + "' has an invalid location";
        }
        if (loc >= 0 && (loc == o || rests_on(s, loc, o))) {
            return "object '" + g.objects[sz(o)].name + "' is part of a containment cycle";
        }
        if (loc >= 0 && s.inventory[sz(o)] != 0) {
            return "held object '" + g.objects[sz(o)].name + "' is also placed on a receptacle";
        }
    }
    if (g.hand_capacity > 0 && held_count(s) > g.hand_capacity) {
        return "hand capacity exceeded";
    }
    return std::nullopt;
}

void write_trace(std::ostream &os, const std::vector<TransitionRecord> &records) {
    os << "step,option,reward,done\n";
    for (const auto &r : records) {
        os << r.step << ',' << r.option << ',' << r.reward << ',' << (r.done ? 1 : 0) << '\n';
    }
}

SmdpEnv::SmdpEnv(std::shared_ptr<const DomainModel> model, VariantRef goal, task::EpisodeConfig config,
                 std::uint64_t seed)
    : model_(std::move(model)), goal_(goal), config_(config) {
    initial_ = env::reset(*model_, goal_, config_, seed);
    state_ = initial_;
}

SmdpEnv::SmdpEnv(std::shared_ptr<const DomainModel> model, VariantRef goal, task::EpisodeConfig config,
                 EnvState initial)
    : model_(std::move(model)), goal_(goal), config_(config), initial_(std::move(initial)) {
    if (!model_->graph().contains(goal_)) {
        throw InvalidInput("SmdpEnv: unknown goal variant");
    }
    if (auto bad = check_invariants(*model_, initial_)) {
        throw InvalidInput("SmdpEnv: invalid initial state: " + *bad);
    }
    state_ = initial_;
}

auto SmdpEnv::reset() -> const EnvState & {
    state_ = initial_;
    done_ = false;
    return_ = 0.0;
    return state_;
}

auto SmdpEnv::step(int option) -> StepOutcome {
    if (done_) {
        throw InvalidInput("SmdpEnv::step called on a finished episode");
    }
    const auto out = apply_option_inplace(*model_, state_, option, goal_, config_);
    done_ = out.done;
    return_ += out.reward;
    if (trace_ != nullptr) {
        trace_->push_back({state_.step_count, option, out.reward, out.done});
    }
    return out;
}

}    // namespace oihrl::env
