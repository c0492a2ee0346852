#include "oihrl/task/craftworld_generator.hpp"

#include <numeric>
#include <string>

#include "oihrl/common/errors.hpp"
#include "oihrl/common/rng.hpp"

namespace oihrl::task {

namespace {

void check_config(const CraftworldGeneratorConfig &c) {
    if (c.object_count <= 0 || c.group_size <= 0) {
        throw ConfigError("craftworld: object_count and group_size must be positive");
    }
    if (c.object_count % c.group_size != 0) {
        throw ConfigError("craftworld: object_count " + std::to_string(c.object_count)
                          + " is not divisible into groups of " + std::to_string(c.group_size));
    }
    const int groups = c.object_count / c.group_size;
    if (c.schemas.empty()) {
        if (c.composite_count < 0) {
            throw ConfigError("craftworld: composite_count must be non-negative");
        }
        if (c.composite_count > 0 && (c.schema_arity <= 0 || c.schema_arity > groups)) {
            throw ConfigError("craftworld: schema arity " + std::to_string(c.schema_arity) + " exceeds group count "
                              + std::to_string(groups));
        }
    }
    for (const auto &s : c.schemas) {
        if (s.empty() || static_cast<int>(s.size()) > groups) {
            throw ConfigError("craftworld: explicit schema arity out of range");
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] < 0 || s[i] >= groups) {
                throw ConfigError("craftworld: explicit schema names unknown group " + std::to_string(s[i]));
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (s[i] == s[j]) {
                    throw ConfigError("craftworld: explicit schema repeats a group");
                }
            }
        }
    }
}

}    // namespace

auto generate_craftworld_domain(const CraftworldGeneratorConfig &config, std::uint64_t seed) -> Domain {
    check_config(config);
    Rng rng(derive_seed(seed, {0xC4AF7}));
    const int group_count = config.object_count / config.group_size;

    std::vector<std::vector<int>> schemas = config.schemas;
    if (schemas.empty()) {
        std::vector<int> pool(static_cast<std::size_t>(group_count));
        for (int c = 0; c < config.composite_count; ++c) {
            std::iota(pool.begin(), pool.end(), 0);
            std::vector<int> schema;
            for (int s = 0; s < config.schema_arity; ++s) {
                const auto remaining = static_cast<std::size_t>(group_count - s);
                const auto pick = static_cast<std::size_t>(s) + uniform_index(rng, remaining);
                std::swap(pool[static_cast<std::size_t>(s)], pool[pick]);
                schema.push_back(pool[static_cast<std::size_t>(s)]);
            }
            schemas.push_back(std::move(schema));
        }
    }

    Domain d;
    d.name = "craftworld";
    d.episode = config.episode;
    auto &g = d.graph;
    g.physics = Physics::craftworld;
    g.hand_capacity = 0;

    for (int grp = 0; grp < group_count; ++grp) {
        std::vector<int> members;
        for (int j = 0; j < config.group_size; ++j) {
            members.push_back(g.object_count());
            g.objects.push_back(
                {"p" + std::to_string(grp + 1) + "_" + std::to_string(j + 1), ObjectClass::simple, kPickupable, {}});
        }
        g.groups.push_back(std::move(members));
    }
    std::optional<int> workshop;
    if (config.workshop) {
        workshop = g.object_count();
        g.objects.push_back({"workshop", ObjectClass::station, kWorkshop, {}});
    }
    const int first_complex = g.object_count();
    for (std::size_t c = 0; c < schemas.size(); ++c) {
        g.objects.push_back({"c" + std::to_string(c + 1), ObjectClass::complex, 0, {}});
    }

    // Base tasks come first so that task index == option id for them.
    for (int o = 0; o < config.object_count; ++o) {
        const int option = g.option_count();
        g.tasks.push_back({"pickup_" + g.objects[static_cast<std::size_t>(o)].name, {TaskVariant{}}, option, {}});
        g.base_tasks.push_back(static_cast<int>(g.tasks.size()) - 1);
        g.bindings.push_back({OptionKind::pickup, o, {}});
    }
    std::optional<int> workshop_task;
    if (workshop) {
        const int option = g.option_count();
        g.tasks.push_back({"use_workshop", {TaskVariant{}}, option, {}});
        workshop_task = static_cast<int>(g.tasks.size()) - 1;
        g.base_tasks.push_back(*workshop_task);
        g.bindings.push_back({OptionKind::workshop, *workshop, {}});
    }

    for (std::size_t c = 0; c < schemas.size(); ++c) {
        const auto &schema = schemas[c];
        const int product = first_complex + static_cast<int>(c);
        Task task;
        task.name = "make_c" + std::to_string(c + 1);
        task.product = product;
        std::vector<int> slot(schema.size(), 0);
        while (true) {
            TaskVariant v;
            for (std::size_t s = 0; s < schema.size(); ++s) {
                const int obj = g.groups[static_cast<std::size_t>(schema[s])][static_cast<std::size_t>(slot[s])];
                v.preconditions.push_back({obj, 0});    // pickup task index == object index
            }
            if (workshop_task) {
                v.preconditions.push_back({*workshop_task, 0});
            }
            v.goal.push_back({AtomKind::held, product, -1});
            task.variants.push_back(std::move(v));
            // Odometer with the last slot fastest.
            std::size_t pos = schema.size();
            while (pos > 0) {
                --pos;
                if (++slot[pos] < config.group_size) {
                    break;
                }
                slot[pos] = 0;
                if (pos == 0) {
                    pos = schema.size() + 1;
                    break;
                }
            }
            if (pos == schema.size() + 1) {
                break;
            }
        }
        g.tasks.push_back(std::move(task));
    }

    d.split = split_variants(g, config.ratios, seed);
    return d;
}

}    // namespace oihrl::task
