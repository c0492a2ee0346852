#pragma once

#include <cstdint>
#include <vector>

#include "oihrl/task/domain.hpp"

namespace oihrl::task {

struct CraftworldGeneratorConfig {
    int object_count = 500;
    int group_size = 5;
    int composite_count = 30;
    int schema_arity = 3;
    bool workshop = true;
    SplitRatios ratios{0.8, 0.0, 0.2};
    /// Optional explicit schemas (group indices); when non-empty, overrides random sampling and
    /// `composite_count`.
    std::vector<std::vector<int>> schemas;
    EpisodeConfig episode;
};

/// Procedural CraftWorld: `object_count` simple objects in groups of `group_size`, one workshop,
/// and one complex object per composite task. Each composite gets a schema of `schema_arity`
/// distinct groups, grounded into group_size^arity variants. Throws ConfigError on infeasible input.
auto generate_craftworld_domain(const CraftworldGeneratorConfig &config, std::uint64_t seed) -> Domain;

}    // namespace oihrl::task
