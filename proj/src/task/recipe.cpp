#include "oihrl/task/recipe.hpp"

#include <algorithm>
#include <functional>

#include "oihrl/common/errors.hpp"

namespace oihrl::task {

namespace {

enum class Mark : std::uint8_t { unvisited, active, done };

/// Depth-first recipe expansion shared by expand_recipe and RecipeTable.
class Expander {
  public:
    explicit Expander(const TaskGraph &graph) : graph_(graph) {
        marks_.resize(graph.tasks.size());
        memo_.resize(graph.tasks.size());
        for (std::size_t i = 0; i < graph.tasks.size(); ++i) {
            marks_[i].assign(graph.tasks[i].variants.size(), Mark::unvisited);
            memo_[i].resize(graph.tasks[i].variants.size());
        }
    }

    auto expand(VariantRef ref) -> const std::vector<int> & {
        auto &mark = marks_[static_cast<std::size_t>(ref.task)][static_cast<std::size_t>(ref.variant)];
        auto &memo = memo_[static_cast<std::size_t>(ref.task)][static_cast<std::size_t>(ref.variant)];
        if (mark == Mark::done) {
            return memo;
        }
        if (mark == Mark::active) {
            throw StructuralError("cyclic preconditions: " + describe_cycle(ref));
        }
        mark = Mark::active;
        stack_.push_back(ref);
        const auto &task = graph_.tasks[static_cast<std::size_t>(ref.task)];
        std::vector<int> out;
        if (task.option) {
            out.push_back(*task.option);
        }
        for (const auto &pre : graph_.variant(ref).preconditions) {
            if (!graph_.contains(pre)) {
                throw StructuralError("dangling precondition reference from " + graph_.variant_name(ref));
            }
            const auto &sub = expand(pre);
            out.insert(out.end(), sub.begin(), sub.end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        memo = std::move(out);
        stack_.pop_back();
        mark = Mark::done;
        return memo;
    }

    [[nodiscard]] auto take() && -> std::vector<std::vector<std::vector<int>>> { return std::move(memo_); }

  private:
    auto describe_cycle(VariantRef ref) const -> std::string {
        auto it = std::find(stack_.begin(), stack_.end(), ref);
        std::string s;
        for (; it != stack_.end(); ++it) {
            s += graph_.variant_name(*it) + " -> ";
        }
        return s + graph_.variant_name(ref);
    }

    const TaskGraph &graph_;
    std::vector<std::vector<Mark>> marks_;
    std::vector<std::vector<std::vector<int>>> memo_;
    std::vector<VariantRef> stack_;
};

}    // namespace

auto expand_recipe(const TaskGraph &graph, VariantRef variant) -> Recipe {
    if (!graph.contains(variant)) {
        throw InvalidInput("expand_recipe: unknown variant");
    }
    Expander ex(graph);
    return Recipe{variant, ex.expand(variant)};
}

RecipeTable::RecipeTable(const TaskGraph &graph) {
    Expander ex(graph);
    for (std::size_t i = 0; i < graph.tasks.size(); ++i) {
        for (std::size_t j = 0; j < graph.tasks[i].variants.size(); ++j) {
            ex.expand({static_cast<int>(i), static_cast<int>(j)});
        }
    }
    recipes_ = std::move(ex).take();
}

auto RecipeTable::at(VariantRef ref) const -> const std::vector<int> & {
    if (ref.task < 0 || static_cast<std::size_t>(ref.task) >= recipes_.size() || ref.variant < 0
        || static_cast<std::size_t>(ref.variant) >= recipes_[static_cast<std::size_t>(ref.task)].size()) {
        throw InvalidInput("RecipeTable: unknown variant");
    }
    return recipes_[static_cast<std::size_t>(ref.task)][static_cast<std::size_t>(ref.variant)];
}

auto find_cycle(const TaskGraph &graph) -> std::vector<std::string> {
    std::vector<std::vector<Mark>> marks(graph.tasks.size());
    for (std::size_t i = 0; i < graph.tasks.size(); ++i) {
        marks[i].assign(graph.tasks[i].variants.size(), Mark::unvisited);
    }
    std::vector<VariantRef> stack;
    std::vector<std::string> cycle;

    std::function<bool(VariantRef)> visit = [&](VariantRef ref) -> bool {
        auto &mark = marks[static_cast<std::size_t>(ref.task)][static_cast<std::size_t>(ref.variant)];
        if (mark == Mark::done) {
            return false;
        }
        if (mark == Mark::active) {
            auto it = std::find(stack.begin(), stack.end(), ref);
            for (; it != stack.end(); ++it) {
                cycle.push_back(graph.variant_name(*it));
            }
            return true;
        }
        mark = Mark::active;
        stack.push_back(ref);
        for (const auto &pre : graph.variant(ref).preconditions) {
            if (graph.contains(pre) && visit(pre)) {
                return true;
            }
        }
        stack.pop_back();
        mark = Mark::done;
        return false;
    };

    for (std::size_t i = 0; i < graph.tasks.size(); ++i) {
        for (std::size_t j = 0; j < graph.tasks[i].variants.size(); ++j) {
            if (visit({static_cast<int>(i), static_cast<int>(j)})) {
                return cycle;
            }
        }
    }
    return {};
}

}    // namespace oihrl::task
