#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oihrl/task/task_graph.hpp"

namespace oihrl::task {

struct SplitRatios {
    double train = 0.8;
    double validation = 0.0;
    double test = 0.2;
};

/// Disjoint train/validation/test partition of composite variants.
struct DomainSplit {
    std::vector<VariantRef> train;
    std::vector<VariantRef> validation;
    std::vector<VariantRef> test;
    SplitRatios ratios;
    std::uint64_t seed = 0;
};

enum class DistractorKind : std::uint8_t { fixed_count, per_object_prob };

struct DistractorPolicy {
    DistractorKind kind = DistractorKind::fixed_count;
    int count = 2;
    double probability = 0.5;
    bool ambiguity_filter = true;
};

struct EpisodeConfig {
    double reward_complete = 1.0;
    double penalty_irrelevant = 0.3;
    double step_penalty = 0.0;
    int max_len = 10;
    DistractorPolicy distractors;
};

struct Domain {
    std::string name;
    TaskGraph graph;
    DomainSplit split;
    EpisodeConfig episode;
};

/// Per composite task, shuffles its variants and assigns them by ratio. Variants whose recipe was
/// already assigned (possible when two tasks share a schema) follow the earlier assignment, so no
/// recipe lands in two splits.
auto split_variants(const TaskGraph &graph, SplitRatios ratios, std::uint64_t seed) -> DomainSplit;

}    // namespace oihrl::task
