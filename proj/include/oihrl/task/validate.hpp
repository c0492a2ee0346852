#pragma once

#include <string>
#include <vector>

#include "oihrl/task/task_graph.hpp"

namespace oihrl::task {

enum class FindingKind {
    cycle,
    dangling_reference,
    base_variant_violation,
    unreachable_variant,
    option_binding,
};

struct Finding {
    FindingKind kind;
    std::string message;
    std::vector<std::string> involved;
};

struct ValidationReport {
    std::vector<Finding> findings;
    [[nodiscard]] auto clean() const noexcept -> bool { return findings.empty(); }
    [[nodiscard]] auto count(FindingKind kind) const noexcept -> std::size_t;
};

/// Structural audit; never throws on graph defects, reports them instead.
auto validate_graph(const TaskGraph &graph) -> ValidationReport;

auto to_string(FindingKind kind) -> std::string;

}    // namespace oihrl::task
