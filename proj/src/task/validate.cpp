#include "oihrl/task/validate.hpp"

#include <algorithm>
#include <set>

#include "oihrl/task/recipe.hpp"

namespace oihrl::task {

auto ValidationReport::count(FindingKind kind) const noexcept -> std::size_t {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(), [kind](const Finding &f) { return f.kind == kind; }));
}

auto to_string(FindingKind kind) -> std::string {
    switch (kind) {
    case FindingKind::cycle:
        return "cycle";
    case FindingKind::dangling_reference:
        return "dangling_reference";
    case FindingKind::base_variant_violation:
        return "base_variant_violation";
    case FindingKind::unreachable_variant:
        return "unreachable_variant";
    case FindingKind::option_binding:
        return "option_binding";
    }
    return "unknown";
}

auto validate_graph(const TaskGraph &graph) -> ValidationReport {
    ValidationReport report;
    bool dangling = false;

    for (std::size_t t = 0; t < graph.tasks.size(); ++t) {
        const auto &task = graph.tasks[t];
        for (std::size_t v = 0; v < task.variants.size(); ++v) {
            const VariantRef ref{static_cast<int>(t), static_cast<int>(v)};
            for (const auto &pre : task.variants[v].preconditions) {
                if (!graph.contains(pre)) {
                    dangling = true;
                    report.findings.push_back({FindingKind::dangling_reference,
                                               graph.variant_name(ref) + " cites a nonexistent precondition",
                                               {graph.variant_name(ref)}});
                }
            }
            if (task.variants[v].preconditions.empty() && task.variants.size() > 1) {
                report.findings.push_back({FindingKind::base_variant_violation,
                                           "task '" + task.name + "' has a variant without preconditions but "
                                               + std::to_string(task.variants.size()) + " variants",
                                           {task.name}});
            }
            if (!task.is_base() && task.variants[v].preconditions.empty()) {
                report.findings.push_back({FindingKind::unreachable_variant,
                                           graph.variant_name(ref) + " is composite but has no preconditions",
                                           {graph.variant_name(ref)}});
            }
        }
        if (task.is_base() && !task.variants.empty() && !task.variants[0].preconditions.empty()) {
            report.findings.push_back(
                {FindingKind::option_binding, "base task '" + task.name + "' has preconditions", {task.name}});
        }
    }

    if (auto cycle = find_cycle(graph); !cycle.empty()) {
        std::string msg = "precondition cycle:";
        for (const auto &n : cycle) {
            msg += " " + n;
        }
        report.findings.push_back({FindingKind::cycle, msg, cycle});
    } else if (!dangling) {
        const RecipeTable recipes(graph);
        for (const auto &ref : graph.composite_variants()) {
            if (recipes.at(ref).empty()) {
                report.findings.push_back({FindingKind::unreachable_variant,
                                           graph.variant_name(ref) + " expands to an empty recipe",
                                           {graph.variant_name(ref)}});
            }
        }
    }

    // Base tasks and options must be in 1:1 correspondence.
    if (graph.base_tasks.size() != graph.bindings.size()) {
        report.findings.push_back({FindingKind::option_binding, "base task count differs from binding count", {}});
    }
    std::set<int> seen;
    for (std::size_t o = 0; o < graph.base_tasks.size(); ++o) {
        const int t = graph.base_tasks[o];
        if (t < 0 || t >= static_cast<int>(graph.tasks.size())) {
            report.findings.push_back(
                {FindingKind::option_binding, "option " + std::to_string(o) + " bound to unknown task", {}});
            continue;
        }
        const auto &task = graph.tasks[static_cast<std::size_t>(t)];
        if (!task.option || *task.option != static_cast<int>(o) || !seen.insert(t).second) {
            report.findings.push_back(
                {FindingKind::option_binding, "option " + std::to_string(o) + " is not bound 1:1", {task.name}});
        }
        if (o < graph.bindings.size()) {
            const int obj = graph.bindings[o].object;
            if (obj < 0 || obj >= graph.object_count()) {
                report.findings.push_back(
                    {FindingKind::option_binding, "option '" + task.name + "' binds an unknown object", {task.name}});
            }
        }
    }
    for (std::size_t t = 0; t < graph.tasks.size(); ++t) {
        if (graph.tasks[t].is_base() && !seen.contains(static_cast<int>(t))) {
            report.findings.push_back({FindingKind::option_binding,
                                       "base task '" + graph.tasks[t].name + "' has no option",
                                       {graph.tasks[t].name}});
        }
    }
    return report;
}

}    // namespace oihrl::task
