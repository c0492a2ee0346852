#include "oihrl/harness/run_config.hpp"

#include <fstream>
#include <sstream>

#include "oihrl/common/errors.hpp"
#include "oihrl/common/rng.hpp"
#include "oihrl/task/domain_config.hpp"

namespace oihrl::harness {

using nlohmann::json;

namespace {

template <typename T>
auto get_or(const json &doc, const char *key, T fallback, const std::string &where) -> T {
    if (!doc.is_object() || !doc.contains(key)) {
        return fallback;
    }
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception &e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

auto resolve(const std::filesystem::path &base, const std::string &p) -> std::filesystem::path {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

auto optimizer_from_json(const json &doc, nn::OptimizerConfig c) -> nn::OptimizerConfig {
    const std::string where = "meta_train.optimizer";
    const auto kind = get_or<std::string>(doc, "kind", c.kind == nn::OptimizerKind::adam ? "adam" : "sgd", where);
    if (kind == "adam") {
        c.kind = nn::OptimizerKind::adam;
    } else if (kind == "sgd") {
        c.kind = nn::OptimizerKind::sgd;
    } else {
        throw ConfigError(where + ".kind: unknown optimizer '" + kind + "'");
    }
    c.learning_rate = get_or<double>(doc, "learning_rate", c.learning_rate, where);
    c.beta1 = get_or<double>(doc, "beta1", c.beta1, where);
    c.beta2 = get_or<double>(doc, "beta2", c.beta2, where);
    c.epsilon = get_or<double>(doc, "epsilon", c.epsilon, where);
    if (!(c.learning_rate > 0.0)) {
        throw ConfigError(where + ".learning_rate: must be positive");
    }
    return c;
}

}    // namespace

auto BaselineSpec::name() const -> std::string {
    switch (kind) {
    case BaselineKind::oi_hrl:
        return "OI_HRL";
    case BaselineKind::hrl_n:
        return "HRL_N";
    case BaselineKind::hrl_n_plus_k:
        return "HRL_N+" + std::to_string(k);
    case BaselineKind::hrl_full:
        return "HRL_FULL";
    }
    return "?";
}

auto parse_baseline(const std::string &text) -> BaselineSpec {
    if (text == "OI_HRL") {
        return {BaselineKind::oi_hrl, 0};
    }
    if (text == "HRL_N") {
        return {BaselineKind::hrl_n, 0};
    }
    if (text == "HRL_FULL") {
        return {BaselineKind::hrl_full, 0};
    }
    for (const std::string prefix : {"HRL_N+", "HRL_N_PLUS_"}) {
        if (text.rfind(prefix, 0) == 0) {
            const auto digits = text.substr(prefix.size());
            std::size_t used = 0;
            int k = 0;
            try {
                k = std::stoi(digits, &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used == 0 || used != digits.size() || k < 1) {
                throw ConfigError("baseline '" + text + "': k must be a positive integer");
            }
            return {BaselineKind::hrl_n_plus_k, k};
        }
    }
    throw ConfigError("unknown baseline '" + text + "' (expected OI_HRL, HRL_N, HRL_N+<k>, HRL_FULL)");
}

auto parse_baseline_list(const std::string &text) -> std::vector<BaselineSpec> {
    std::vector<BaselineSpec> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(parse_baseline(item));
        }
    }
    if (out.empty()) {
        throw ConfigError("empty baseline list");
    }
    return out;
}

auto run_config_from_json(const json &doc, const std::filesystem::path &base_dir) -> RunConfig {
    if (!doc.is_object()) {
        throw ConfigError("run config: top level must be an object");
    }
    RunConfig c;
    c.source = doc;
    c.name = get_or<std::string>(doc, "name", c.name, "run");
    c.master_seed = get_or<std::uint64_t>(doc, "master_seed", c.master_seed, "run");

    if (!doc.contains("domain") || !doc.at("domain").is_object()) {
        throw ConfigError("run config: missing 'domain' section");
    }
    const auto &dj = doc.at("domain");
    if (dj.contains("config")) {
        c.domain.config_path = resolve(base_dir, get_or<std::string>(dj, "config", "", "domain"));
        if (!std::filesystem::exists(*c.domain.config_path)) {
            throw ConfigError("domain.config: file not found: " + c.domain.config_path->string());
        }
    } else if (dj.contains("generator")) {
        c.domain.generator = task::generator_config_from_json(dj.at("generator"));
        c.domain.generator_seed = get_or<std::uint64_t>(dj, "seed", 0, "domain");
    } else {
        throw ConfigError("domain: expected 'config' (path) or 'generator' (parameters)");
    }

    if (doc.contains("meta_train")) {
        const auto &mj = doc.at("meta_train");
        const std::string w = "meta_train";
        auto &m = c.meta;
        m.iterations = get_or<int>(mj, "iterations", m.iterations, w);
        m.batch_size = get_or<int>(mj, "batch_size", m.batch_size, w);
        m.top_p = get_or<double>(mj, "top_p", m.top_p, w);
        m.hidden = get_or<int>(mj, "hidden", m.hidden, w);
        m.key_dim = get_or<int>(mj, "key_dim", m.key_dim, w);
        m.oracle.trajectories_per_call = get_or<int>(mj, "oracle_trajectories", m.oracle.trajectories_per_call, w);
        m.oracle.max_orders = get_or<int>(mj, "oracle_max_orders", m.oracle.max_orders, w);
        if (mj.contains("optimizer")) {
            m.optimizer = optimizer_from_json(mj.at("optimizer"), m.optimizer);
        }
        if (m.iterations < 1 || m.batch_size < 1 || m.hidden < 1 || m.key_dim < 1) {
            throw ConfigError("meta_train: iterations, batch_size, hidden and key_dim must be positive");
        }
        if (!(m.top_p > 0.0 && m.top_p < 1.0)) {
            throw ConfigError("meta_train.top_p: must lie in (0, 1)");
        }
    }

    if (doc.contains("a2c")) {
        const auto &aj = doc.at("a2c");
        const std::string w = "a2c";
        auto &a = c.a2c;
        a.learning_rate = get_or<double>(aj, "learning_rate", a.learning_rate, w);
        a.gamma = get_or<double>(aj, "gamma", a.gamma, w);
        a.entropy_coef = get_or<double>(aj, "entropy_coef", a.entropy_coef, w);
        a.value_coef = get_or<double>(aj, "value_coef", a.value_coef, w);
        a.episodes_per_update = get_or<int>(aj, "episodes_per_update", a.episodes_per_update, w);
        a.total_env_steps = get_or<std::int64_t>(aj, "total_env_steps", a.total_env_steps, w);
        a.eval_interval_steps = get_or<std::int64_t>(aj, "eval_interval_steps", a.eval_interval_steps, w);
        a.eval_episodes = get_or<int>(aj, "eval_episodes", a.eval_episodes, w);
        a.hidden = get_or<int>(aj, "hidden", a.hidden, w);
        a.logit_clamp = get_or<double>(aj, "logit_clamp", a.logit_clamp, w);
        a2c::validate(a);
    }
    c.train_policies = get_or<bool>(doc, "train_policies", c.train_policies, "run");

    if (doc.contains("baselines")) {
        for (const auto &b : doc.at("baselines")) {
            if (!b.is_string()) {
                throw ConfigError("baselines: entries must be strings");
            }
            c.baselines.push_back(parse_baseline(b.get<std::string>()));
        }
    } else {
        c.baselines = {{BaselineKind::oi_hrl, 0}, {BaselineKind::hrl_n, 0}, {BaselineKind::hrl_n_plus_k, 2},
                       {BaselineKind::hrl_full, 0}};
    }
    c.test_variants = get_or<int>(doc, "test_variants", c.test_variants, "run");
    if (c.test_variants < 1) {
        throw ConfigError("test_variants: must be positive");
    }
    c.out_dir = resolve(base_dir, get_or<std::string>(doc, "out_dir", c.out_dir.string(), "run"));
    if (doc.contains("checkpoint")) {
        c.checkpoint = resolve(base_dir, get_or<std::string>(doc, "checkpoint", "", "run"));
    }
    c.workers = get_or<int>(doc, "workers", c.workers, "run");
    if (c.workers < 1) {
        throw ConfigError("workers: must be positive");
    }
    if (doc.contains("sweep")) {
        const auto &sj = doc.at("sweep");
        c.fractions = get_or<std::vector<double>>(sj, "fractions", c.fractions, "sweep");
        c.sweep_seeds = get_or<int>(sj, "seeds", c.sweep_seeds, "sweep");
        if (c.sweep_seeds < 1) {
            throw ConfigError("sweep.seeds: must be positive");
        }
    }
    if (doc.contains("length_buckets")) {
        for (const auto &b : doc.at("length_buckets")) {
            if (!b.is_array() || b.size() != 2) {
                throw ConfigError("length_buckets: each bucket must be [lo, hi]");
            }
            LengthBucket lb{b[0].get<int>(), b[1].get<int>()};
            if (lb.lo > lb.hi) {
                throw ConfigError("length_buckets: lo must not exceed hi");
            }
            c.length_buckets.push_back(lb);
        }
    }
    return c;
}

auto load_run_config(const std::filesystem::path &path) -> RunConfig {
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot open run config: " + path.string());
    }
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return run_config_from_json(doc, path.parent_path());
}

auto run_config_to_json(const RunConfig &c) -> json {
    json j;
    j["name"] = c.name;
    j["master_seed"] = c.master_seed;
    if (c.domain.config_path) {
        j["domain"] = {{"config", c.domain.config_path->string()}};
    } else if (c.domain.generator) {
        const auto &g = *c.domain.generator;
        j["domain"] = {{"seed", c.domain.generator_seed},
                       {"generator",
                        {{"object_count", g.object_count},
                         {"group_size", g.group_size},
                         {"composite_count", g.composite_count},
                         {"schema_arity", g.schema_arity},
                         {"workshop", g.workshop},
                         {"schemas", g.schemas},
                         {"split", {{"train", g.ratios.train}, {"validation", g.ratios.validation}, {"test", g.ratios.test}}},
                         {"episode", task::episode_config_to_json(g.episode)}}}};
    }
    const auto &m = c.meta;
    j["meta_train"] = {{"iterations", m.iterations},
                       {"batch_size", m.batch_size},
                       {"top_p", m.top_p},
                       {"hidden", m.hidden},
                       {"key_dim", m.key_dim},
                       {"oracle_trajectories", m.oracle.trajectories_per_call},
                       {"oracle_max_orders", m.oracle.max_orders},
                       {"optimizer",
                        {{"kind", m.optimizer.kind == nn::OptimizerKind::adam ? "adam" : "sgd"},
                         {"learning_rate", m.optimizer.learning_rate},
                         {"beta1", m.optimizer.beta1},
                         {"beta2", m.optimizer.beta2},
                         {"epsilon", m.optimizer.epsilon}}}};
    const auto &a = c.a2c;
    j["a2c"] = {{"learning_rate", a.learning_rate},
                {"gamma", a.gamma},
                {"entropy_coef", a.entropy_coef},
                {"value_coef", a.value_coef},
                {"episodes_per_update", a.episodes_per_update},
                {"total_env_steps", a.total_env_steps},
                {"eval_interval_steps", a.eval_interval_steps},
                {"eval_episodes", a.eval_episodes},
                {"hidden", a.hidden},
                {"logit_clamp", a.logit_clamp}};
    j["train_policies"] = c.train_policies;
    j["baselines"] = json::array();
    for (const auto &b : c.baselines) {
        j["baselines"].push_back(b.name());
    }
    j["test_variants"] = c.test_variants;
    j["out_dir"] = c.out_dir.string();
    if (c.checkpoint) {
        j["checkpoint"] = c.checkpoint->string();
    }
    j["workers"] = c.workers;
    j["sweep"] = {{"fractions", c.fractions}, {"seeds", c.sweep_seeds}};
    if (!c.length_buckets.empty()) {
        j["length_buckets"] = json::array();
        for (const auto &b : c.length_buckets) {
            j["length_buckets"].push_back({b.lo, b.hi});
        }
    }
    return j;
}

auto load_domain(const DomainSource &source) -> task::Domain {
    if (source.config_path) {
        return task::load_domain_config(*source.config_path);
    }
    if (source.generator) {
        return task::generate_craftworld_domain(*source.generator, source.generator_seed);
    }
    throw ConfigError("no domain source configured");
}

auto meta_seed(const RunConfig &config) -> std::uint64_t {
    return derive_seed(config.master_seed, {0x3E7A});
}

auto test_sample_seed(const RunConfig &config) -> std::uint64_t {
    return derive_seed(config.master_seed, {0x7E57});
}

auto variant_seed(const RunConfig &config, task::VariantRef variant) -> std::uint64_t {
    return derive_seed(config.master_seed,
                       {0x5CE4E, static_cast<std::uint64_t>(variant.task), static_cast<std::uint64_t>(variant.variant)});
}

}    // namespace oihrl::harness
