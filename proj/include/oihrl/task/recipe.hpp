#pragma once

#include <vector>

#include "oihrl/task/task_graph.hpp"

namespace oihrl::task {

struct Recipe {
    VariantRef variant;
    std::vector<int> options;    // sorted base-task option ids
    [[nodiscard]] auto length() const noexcept -> std::size_t { return options.size(); }
};

/// Union of the recipes of all preconditions; a base task's recipe is itself.
/// Throws StructuralError naming the cycle if the precondition relation is cyclic.
auto expand_recipe(const TaskGraph &graph, VariantRef variant) -> Recipe;

/// Recipes of every variant of every task, memoized in one pass.
class RecipeTable {
  public:
    explicit RecipeTable(const TaskGraph &graph);
    [[nodiscard]] auto at(VariantRef ref) const -> const std::vector<int> &;

  private:
    std::vector<std::vector<std::vector<int>>> recipes_;
};

/// Returns the names along a precondition cycle reachable in the graph, or empty if acyclic.
auto find_cycle(const TaskGraph &graph) -> std::vector<std::string>;

}    // namespace oihrl::task
