#include "oihrl/task/domain_config.hpp"

#include <array>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "oihrl/common/errors.hpp"
#include "oihrl/common/hash.hpp"
#include "oihrl/task/recipe.hpp"

namespace oihrl::task {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<const char *, Trait>, 9> kTraitNames{{
    {"pickupable", kPickupable},
    {"receptacle", kReceptacle},
    {"appliance", kAppliance},
    {"sliceable", kSliceable},
    {"breakable", kBreakable},
    {"fillable", kFillable},
    {"cutter", kCutter},
    {"liquid_source", kLiquidSource},
    {"workshop", kWorkshop},
}};

constexpr std::array<const char *, 3> kClassNames{"simple", "complex", "station"};

constexpr std::array<const char *, 10> kAtomNames{"held",     "present",  "cooked",   "sliced",    "broken",
                                                  "contains", "on",       "occupied", "activated", "crafted"};

[[noreturn]] void fail(const std::string &where, const std::string &what) {
    throw ConfigError(where + ": " + what);
}

template <typename T>
auto get_field(const json &obj, const char *key, const std::string &where) -> T {
    if (!obj.is_object() || !obj.contains(key)) {
        fail(where, std::string("missing field '") + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception &e) {
        fail(where + "." + key, e.what());
    }
}

template <typename T>
auto get_or(const json &obj, const char *key, T fallback, const std::string &where) -> T {
    if (!obj.is_object() || !obj.contains(key)) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception &e) {
        fail(where + "." + key, e.what());
    }
}

auto atom_to_string(const TaskGraph &g, const GoalAtom &a) -> std::string {
    std::string s = kAtomNames.at(static_cast<std::size_t>(a.kind));
    s += "(";
    if (a.kind != AtomKind::crafted) {
        s += g.objects.at(static_cast<std::size_t>(a.object)).name;
    }
    if (a.kind == AtomKind::contains) {
        s += "," + to_string(static_cast<Liquid>(a.arg));
    } else if (a.kind == AtomKind::on) {
        s += "," + g.objects.at(static_cast<std::size_t>(a.arg)).name;
    }
    return s + ")";
}

auto trim(std::string s) -> std::string {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

auto parse_atom(const TaskGraph &g, const std::string &text, const std::string &where) -> GoalAtom {
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        fail(where, "malformed goal atom '" + text + "'");
    }
    const auto name = trim(text.substr(0, open));
    std::vector<std::string> args;
    {
        std::stringstream ss(text.substr(open + 1, close - open - 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) {
                args.push_back(item);
            }
        }
    }
    GoalAtom atom;
    bool found = false;
    for (std::size_t i = 0; i < kAtomNames.size(); ++i) {
        if (name == kAtomNames[i]) {
            atom.kind = static_cast<AtomKind>(i);
            found = true;
        }
    }
    if (!found) {
        fail(where, "unknown goal predicate '" + name + "'");
    }
    auto object = [&](const std::string &n) {
        auto id = g.find_object(n);
        if (!id) {
            fail(where, "goal atom names unknown object '" + n + "'");
        }
        return *id;
    };
    const std::size_t want = atom.kind == AtomKind::crafted ? 0
                             : (atom.kind == AtomKind::contains || atom.kind == AtomKind::on) ? 2
                                                                                                : 1;
    if (args.size() != want) {
        fail(where, "goal atom '" + text + "' expects " + std::to_string(want) + " argument(s)");
    }
    if (want >= 1) {
        atom.object = object(args[0]);
    }
    if (atom.kind == AtomKind::contains) {
        auto l = liquid_from_string(args[1]);
        if (!l) {
            fail(where, "unknown liquid '" + args[1] + "'");
        }
        atom.arg = static_cast<int>(*l);
    } else if (atom.kind == AtomKind::on) {
        atom.arg = object(args[1]);
    }
    return atom;
}

auto ratios_from_json(const json &j, const std::string &where, SplitRatios fallback) -> SplitRatios {
    SplitRatios r;
    r.train = get_or<double>(j, "train", fallback.train, where);
    r.validation = get_or<double>(j, "validation", fallback.validation, where);
    r.test = get_or<double>(j, "test", fallback.test, where);
    return r;
}

}    // namespace

auto episode_config_from_json(const json &doc, EpisodeConfig base) -> EpisodeConfig {
    const std::string where = "episode";
    EpisodeConfig c = base;
    c.reward_complete = get_or<double>(doc, "reward_complete", c.reward_complete, where);
    c.penalty_irrelevant = get_or<double>(doc, "penalty_irrelevant", c.penalty_irrelevant, where);
    c.step_penalty = get_or<double>(doc, "step_penalty", c.step_penalty, where);
    c.max_len = get_or<int>(doc, "max_len", c.max_len, where);
    if (c.max_len <= 0) {
        fail(where + ".max_len", "must be positive");
    }
    if (doc.is_object() && doc.contains("distractors")) {
        const auto &dj = doc.at("distractors");
        const std::string dw = where + ".distractors";
        const auto kind = get_or<std::string>(dj, "kind", "fixed_count", dw);
        if (kind == "fixed_count") {
            c.distractors.kind = DistractorKind::fixed_count;
        } else if (kind == "per_object_prob") {
            c.distractors.kind = DistractorKind::per_object_prob;
        } else {
            fail(dw + ".kind", "unknown distractor policy '" + kind + "'");
        }
        c.distractors.count = get_or<int>(dj, "count", c.distractors.count, dw);
        c.distractors.probability = get_or<double>(dj, "probability", c.distractors.probability, dw);
        c.distractors.ambiguity_filter = get_or<bool>(dj, "ambiguity_filter", c.distractors.ambiguity_filter, dw);
        if (c.distractors.count < 0 || c.distractors.probability < 0 || c.distractors.probability > 1) {
            fail(dw, "count must be >= 0 and probability in [0, 1]");
        }
    }
    return c;
}

auto episode_config_to_json(const EpisodeConfig &c) -> json {
    json d;
    d["kind"] = c.distractors.kind == DistractorKind::fixed_count ? "fixed_count" : "per_object_prob";
    d["count"] = c.distractors.count;
    d["probability"] = c.distractors.probability;
    d["ambiguity_filter"] = c.distractors.ambiguity_filter;
    return json{{"reward_complete", c.reward_complete},
                {"penalty_irrelevant", c.penalty_irrelevant},
                {"step_penalty", c.step_penalty},
                {"max_len", c.max_len},
                {"distractors", d}};
}

auto generator_config_from_json(const json &doc) -> CraftworldGeneratorConfig {
    const std::string where = "generator";
    CraftworldGeneratorConfig c;
    c.object_count = get_or<int>(doc, "object_count", c.object_count, where);
    c.group_size = get_or<int>(doc, "group_size", c.group_size, where);
    c.composite_count = get_or<int>(doc, "composite_count", c.composite_count, where);
    c.schema_arity = get_or<int>(doc, "schema_arity", c.schema_arity, where);
    c.workshop = get_or<bool>(doc, "workshop", c.workshop, where);
    c.schemas = get_or<std::vector<std::vector<int>>>(doc, "schemas", {}, where);
    if (doc.contains("split")) {
        c.ratios = ratios_from_json(doc.at("split"), where + ".split", c.ratios);
    }
    if (doc.contains("episode")) {
        c.episode = episode_config_from_json(doc.at("episode"), c.episode);
    }
    return c;
}

auto domain_from_json(const json &doc) -> Domain {
    if (!doc.is_object()) {
        fail("domain", "top level must be an object");
    }
    Domain d;
    d.name = get_or<std::string>(doc, "name", "domain", "domain");
    auto &g = d.graph;
    const auto physics = get_or<std::string>(doc, "physics", "kitchen", "domain");
    if (physics == "kitchen") {
        g.physics = Physics::kitchen;
    } else if (physics == "craftworld") {
        g.physics = Physics::craftworld;
    } else {
        fail("domain.physics", "unknown physics '" + physics + "'");
    }
    g.hand_capacity = get_or<int>(doc, "hand_capacity", g.physics == Physics::kitchen ? 1 : 0, "domain");

    // objects
    if (!doc.contains("objects") || !doc.at("objects").is_array()) {
        fail("domain", "missing 'objects' list");
    }
    for (std::size_t i = 0; i < doc.at("objects").size(); ++i) {
        const auto &oj = doc.at("objects")[i];
        const std::string where = "objects[" + std::to_string(i) + "]";
        ObjectInfo info;
        info.name = get_field<std::string>(oj, "name", where);
        if (g.find_object(info.name)) {
            fail(where, "duplicate object '" + info.name + "'");
        }
        const auto cls = get_or<std::string>(oj, "class", "simple", where);
        bool ok = false;
        for (std::size_t c = 0; c < kClassNames.size(); ++c) {
            if (cls == kClassNames[c]) {
                info.cls = static_cast<ObjectClass>(c);
                ok = true;
            }
        }
        if (!ok) {
            fail(where + ".class", "unknown object class '" + cls + "'");
        }
        for (const auto &t : get_or<std::vector<std::string>>(oj, "traits", {}, where)) {
            bool known = false;
            for (const auto &[tn, tv] : kTraitNames) {
                if (t == tn) {
                    info.traits |= tv;
                    known = true;
                }
            }
            if (!known) {
                fail(where + ".traits", "unknown trait '" + t + "'");
            }
        }
        if (oj.contains("liquid_source")) {
            auto l = liquid_from_string(get_field<std::string>(oj, "liquid_source", where));
            if (!l) {
                fail(where + ".liquid_source", "unknown liquid");
            }
            info.source_of = l;
            info.traits |= kLiquidSource;
        }
        g.objects.push_back(std::move(info));
    }
    auto object_id = [&](const std::string &name, const std::string &where) {
        auto id = g.find_object(name);
        if (!id) {
            fail(where, "dangling reference to object '" + name + "'");
        }
        return *id;
    };

    // groups
    if (doc.contains("groups")) {
        for (std::size_t i = 0; i < doc.at("groups").size(); ++i) {
            const std::string where = "groups[" + std::to_string(i) + "]";
            std::vector<int> members;
            for (const auto &n : doc.at("groups")[i].get<std::vector<std::string>>()) {
                members.push_back(object_id(n, where));
            }
            g.groups.push_back(std::move(members));
        }
    }

    // base tasks
    if (!doc.contains("base_tasks") || !doc.at("base_tasks").is_array()) {
        fail("domain", "missing 'base_tasks' list");
    }
    std::map<std::string, int> task_ids;
    for (std::size_t i = 0; i < doc.at("base_tasks").size(); ++i) {
        const auto &bj = doc.at("base_tasks")[i];
        const std::string where = "base_tasks[" + std::to_string(i) + "]";
        OptionBinding b;
        const auto kind = get_field<std::string>(bj, "kind", where);
        auto k = option_kind_from_string(kind);
        if (!k) {
            fail(where + ".kind", "unknown base task kind '" + kind + "'");
        }
        b.kind = *k;
        b.object = object_id(get_field<std::string>(bj, "object", where), where + ".object");
        if (bj.contains("liquid")) {
            auto l = liquid_from_string(get_field<std::string>(bj, "liquid", where));
            if (!l) {
                fail(where + ".liquid", "unknown liquid");
            }
            b.liquid = l;
        }
        if (b.kind == OptionKind::fill && !b.liquid) {
            fail(where, "fill task requires a 'liquid'");
        }
        const auto name = get_or<std::string>(
            bj, "name",
            to_string(b.kind) + "_" + g.objects[static_cast<std::size_t>(b.object)].name
                + (b.liquid ? "_with_" + to_string(*b.liquid) : std::string{}),
            where);
        if (task_ids.contains(name)) {
            fail(where, "duplicate task name '" + name + "'");
        }
        const int option = g.option_count();
        task_ids[name] = static_cast<int>(g.tasks.size());
        g.tasks.push_back({name, {TaskVariant{}}, option, {}});
        g.base_tasks.push_back(static_cast<int>(g.tasks.size()) - 1);
        g.bindings.push_back(b);
    }

    // composite tasks: names first so explicit references may point forward
    const json composites = doc.value("composite_tasks", json::array());
    const int first_composite = static_cast<int>(g.tasks.size());
    for (std::size_t i = 0; i < composites.size(); ++i) {
        const std::string where = "composite_tasks[" + std::to_string(i) + "]";
        const auto name = get_field<std::string>(composites[i], "name", where);
        if (task_ids.contains(name)) {
            fail(where, "duplicate task name '" + name + "'");
        }
        task_ids[name] = first_composite + static_cast<int>(i);
        Task t;
        t.name = name;
        if (composites[i].contains("product")) {
            t.product = object_id(get_field<std::string>(composites[i], "product", where), where + ".product");
        }
        g.tasks.push_back(std::move(t));
    }

    for (std::size_t i = 0; i < composites.size(); ++i) {
        const std::string where = "composite_tasks[" + std::to_string(i) + "]";
        auto &task = g.tasks[static_cast<std::size_t>(first_composite) + i];
        if (!composites[i].contains("variants") || !composites[i].at("variants").is_array()) {
            fail(where, "missing 'variants' list");
        }
        const auto &vars = composites[i].at("variants");
        for (std::size_t v = 0; v < vars.size(); ++v) {
            const std::string vw = where + ".variants[" + std::to_string(v) + "]";
            const auto requires_ = get_field<std::vector<std::string>>(vars[v], "requires", vw);
            std::vector<GoalAtom> own_goal;
            for (const auto &a : get_or<std::vector<std::string>>(vars[v], "goal", {}, vw)) {
                own_goal.push_back(parse_atom(g, a, vw + ".goal"));
            }
            // Alternatives per requirement; the variant list is their cartesian product.
            std::vector<std::vector<VariantRef>> alternatives;
            for (std::size_t r = 0; r < requires_.size(); ++r) {
                const std::string rw = vw + ".requires[" + std::to_string(r) + "]";
                const auto &ref = requires_[r];
                const auto colon = ref.rfind(':');
                const auto tname = colon == std::string::npos ? ref : ref.substr(0, colon);
                auto it = task_ids.find(tname);
                if (it == task_ids.end()) {
                    fail(rw, "dangling reference to task '" + tname + "'");
                }
                const int tid = it->second;
                std::vector<VariantRef> alts;
                if (colon == std::string::npos) {
                    alts.push_back({tid, 0});
                } else if (ref.substr(colon + 1) == "*") {
                    if (tid >= first_composite + static_cast<int>(i) || tid < first_composite) {
                        fail(rw, "'" + ref + "' must name a composite task defined earlier");
                    }
                    for (std::size_t j = 0; j < g.tasks[static_cast<std::size_t>(tid)].variants.size(); ++j) {
                        alts.push_back({tid, static_cast<int>(j)});
                    }
                } else {
                    int j = 0;
                    try {
                        j = std::stoi(ref.substr(colon + 1));
                    } catch (const std::exception &) {
                        fail(rw, "bad variant index in '" + ref + "'");
                    }
                    alts.push_back({tid, j - 1});
                }
                alternatives.push_back(std::move(alts));
            }
            std::vector<std::size_t> idx(alternatives.size(), 0);
            while (true) {
                TaskVariant tv;
                tv.goal = own_goal;
                for (std::size_t r = 0; r < alternatives.size(); ++r) {
                    tv.preconditions.push_back(alternatives[r][idx[r]]);
                }
                task.variants.push_back(std::move(tv));
                std::size_t pos = alternatives.size();
                bool done = true;
                while (pos > 0) {
                    --pos;
                    if (++idx[pos] < alternatives[pos].size()) {
                        done = false;
                        break;
                    }
                    idx[pos] = 0;
                }
                if (done) {
                    break;
                }
            }
        }
    }

    // Reference resolution for explicit indices (possibly forward).
    for (const auto &t : g.tasks) {
        for (std::size_t v = 0; v < t.variants.size(); ++v) {
            for (const auto &pre : t.variants[v].preconditions) {
                if (!g.contains(pre)) {
                    fail("task '" + t.name + "' variant " + std::to_string(v + 1),
                         "dangling reference to variant " + std::to_string(pre.variant + 1) + " of task '"
                             + (pre.task >= 0 && pre.task < static_cast<int>(g.tasks.size())
                                    ? g.tasks[static_cast<std::size_t>(pre.task)].name
                                    : std::string("?"))
                             + "'");
                }
            }
        }
    }
    if (auto cycle = find_cycle(g); !cycle.empty()) {
        std::string s;
        for (const auto &n : cycle) {
            s += (s.empty() ? "" : " -> ") + n;
        }
        throw StructuralError("cyclic preconditions: " + s);
    }

    // Goals inherit the goals of composite preconditions.
    std::vector<std::vector<std::vector<GoalAtom>>> effective(g.tasks.size());
    std::vector<std::vector<bool>> ready(g.tasks.size());
    for (std::size_t t = 0; t < g.tasks.size(); ++t) {
        effective[t].resize(g.tasks[t].variants.size());
        ready[t].assign(g.tasks[t].variants.size(), false);
    }
    std::function<const std::vector<GoalAtom> &(VariantRef)> goal_of = [&](VariantRef ref) -> const auto & {
        const auto t = static_cast<std::size_t>(ref.task);
        const auto v = static_cast<std::size_t>(ref.variant);
        if (!ready[t][v]) {
            auto out = g.tasks[t].variants[v].goal;
            for (const auto &pre : g.tasks[t].variants[v].preconditions) {
                if (g.tasks[static_cast<std::size_t>(pre.task)].is_base()) {
                    continue;
                }
                for (const auto &a : goal_of(pre)) {
                    if (std::find(out.begin(), out.end(), a) == out.end()) {
                        out.push_back(a);
                    }
                }
            }
            effective[t][v] = std::move(out);
            ready[t][v] = true;
        }
        return effective[t][v];
    };
    for (std::size_t t = 0; t < g.tasks.size(); ++t) {
        for (std::size_t v = 0; v < g.tasks[t].variants.size(); ++v) {
            goal_of({static_cast<int>(t), static_cast<int>(v)});
        }
    }
    for (std::size_t t = 0; t < g.tasks.size(); ++t) {
        for (std::size_t v = 0; v < g.tasks[t].variants.size(); ++v) {
            g.tasks[t].variants[v].goal = effective[t][v];
            if (!g.tasks[t].is_base() && g.tasks[t].variants[v].goal.empty() && g.tasks[t].product) {
                g.tasks[t].variants[v].goal.push_back({AtomKind::held, *g.tasks[t].product, -1});
            }
        }
    }

    if (doc.contains("episode")) {
        d.episode = episode_config_from_json(doc.at("episode"), d.episode);
    }
    SplitRatios ratios{0.6, 0.2, 0.2};
    std::uint64_t seed = 0;
    if (doc.contains("split")) {
        ratios = ratios_from_json(doc.at("split"), "split", ratios);
        seed = get_or<std::uint64_t>(doc.at("split"), "seed", 0, "split");
    }
    d.split = split_variants(g, ratios, seed);
    return d;
}

auto domain_to_json(const Domain &d) -> json {
    const auto &g = d.graph;
    json doc;
    doc["name"] = d.name;
    doc["physics"] = g.physics == Physics::kitchen ? "kitchen" : "craftworld";
    doc["hand_capacity"] = g.hand_capacity;
    json objects = json::array();
    for (const auto &o : g.objects) {
        json oj{{"name", o.name}, {"class", kClassNames.at(static_cast<std::size_t>(o.cls))}};
        json traits = json::array();
        for (const auto &[tn, tv] : kTraitNames) {
            if ((o.traits & tv) != 0 && !(tv == kLiquidSource && o.source_of)) {
                traits.push_back(tn);
            }
        }
        oj["traits"] = traits;
        if (o.source_of) {
            oj["liquid_source"] = to_string(*o.source_of);
        }
        objects.push_back(oj);
    }
    doc["objects"] = objects;
    json groups = json::array();
    for (const auto &grp : g.groups) {
        json gj = json::array();
        for (int o : grp) {
            gj.push_back(g.objects[static_cast<std::size_t>(o)].name);
        }
        groups.push_back(gj);
    }
    doc["groups"] = groups;
    json base = json::array();
    for (int o = 0; o < g.option_count(); ++o) {
        const auto &b = g.bindings[static_cast<std::size_t>(o)];
        json bj{{"name", g.option_name(o)},
                {"kind", to_string(b.kind)},
                {"object", g.objects[static_cast<std::size_t>(b.object)].name}};
        if (b.liquid) {
            bj["liquid"] = to_string(*b.liquid);
        }
        base.push_back(bj);
    }
    doc["base_tasks"] = base;
    json composites = json::array();
    for (std::size_t t = 0; t < g.tasks.size(); ++t) {
        const auto &task = g.tasks[t];
        if (task.is_base()) {
            continue;
        }
        json tj{{"name", task.name}};
        if (task.product) {
            tj["product"] = g.objects[static_cast<std::size_t>(*task.product)].name;
        }
        json vars = json::array();
        for (const auto &v : task.variants) {
            json req = json::array();
            for (const auto &pre : v.preconditions) {
                const auto &pt = g.tasks[static_cast<std::size_t>(pre.task)];
                req.push_back(pt.is_base() ? pt.name : pt.name + ":" + std::to_string(pre.variant + 1));
            }
            json goal = json::array();
            for (const auto &a : v.goal) {
                goal.push_back(atom_to_string(g, a));
            }
            vars.push_back(json{{"requires", req}, {"goal", goal}});
        }
        tj["variants"] = vars;
        composites.push_back(tj);
    }
    doc["composite_tasks"] = composites;
    doc["split"] = json{{"train", d.split.ratios.train},
                        {"validation", d.split.ratios.validation},
                        {"test", d.split.ratios.test},
                        {"seed", d.split.seed}};
    doc["episode"] = episode_config_to_json(d.episode);
    return doc;
}

auto load_domain_config(const std::filesystem::path &path) -> Domain {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open domain config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return domain_from_json(doc);
}

void save_domain_config(const Domain &domain, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write domain config " + path.string());
    }
    out << domain_to_json(domain).dump(2) << '\n';
}

auto canonical_domain_string(const Domain &domain) -> std::string {
    return domain_to_json(domain).dump();
}

auto domain_hash(const Domain &domain) -> std::uint64_t {
    return fnv1a64(canonical_domain_string(domain));
}

}    // namespace oihrl::task
