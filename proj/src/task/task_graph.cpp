#include "oihrl/task/task_graph.hpp"

#include <array>

#include "oihrl/common/errors.hpp"

namespace oihrl::task {

auto TaskGraph::contains(VariantRef ref) const noexcept -> bool {
    return ref.task >= 0 && ref.task < static_cast<int>(tasks.size()) && ref.variant >= 0
           && ref.variant < static_cast<int>(tasks[static_cast<std::size_t>(ref.task)].variants.size());
}

auto TaskGraph::variant(VariantRef ref) const -> const TaskVariant & {
    if (!contains(ref)) {
        throw InvalidInput("unknown task variant (" + std::to_string(ref.task) + ", " + std::to_string(ref.variant)
                           + ")");
    }
    return tasks[static_cast<std::size_t>(ref.task)].variants[static_cast<std::size_t>(ref.variant)];
}

auto TaskGraph::find_task(const std::string &name) const -> std::optional<int> {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].name == name) {
            return static_cast<int>(i);
        }
    }
    return std::nullopt;
}

auto TaskGraph::find_object(const std::string &name) const -> std::optional<int> {
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (objects[i].name == name) {
            return static_cast<int>(i);
        }
    }
    return std::nullopt;
}

auto TaskGraph::option_name(int option) const -> const std::string & {
    if (option < 0 || option >= option_count()) {
        throw InvalidInput("unknown option id " + std::to_string(option));
    }
    return tasks[static_cast<std::size_t>(base_tasks[static_cast<std::size_t>(option)])].name;
}

auto TaskGraph::variant_name(VariantRef ref) const -> std::string {
    if (!contains(ref)) {
        return "<invalid " + std::to_string(ref.task) + ":" + std::to_string(ref.variant) + ">";
    }
    const auto &t = tasks[static_cast<std::size_t>(ref.task)];
    if (t.variants.size() == 1) {
        return t.name;
    }
    return t.name + ":" + std::to_string(ref.variant + 1);
}

auto TaskGraph::composite_variants() const -> std::vector<VariantRef> {
    std::vector<VariantRef> out;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].is_base()) {
            continue;
        }
        for (std::size_t j = 0; j < tasks[i].variants.size(); ++j) {
            out.push_back({static_cast<int>(i), static_cast<int>(j)});
        }
    }
    return out;
}

namespace {
constexpr std::array<const char *, 7> kKindNames{"pickup", "puton", "cookon", "slice", "break", "fill", "workshop"};
constexpr std::array<const char *, 3> kLiquidNames{"coffee", "water", "wine"};
}    // namespace

auto to_string(OptionKind kind) -> std::string {
    return kKindNames.at(static_cast<std::size_t>(kind));
}

auto option_kind_from_string(const std::string &s) -> std::optional<OptionKind> {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (s == kKindNames[i]) {
            return static_cast<OptionKind>(i);
        }
    }
    return std::nullopt;
}

auto to_string(Liquid l) -> std::string {
    return kLiquidNames.at(static_cast<std::size_t>(l));
}

auto liquid_from_string(const std::string &s) -> std::optional<Liquid> {
    for (std::size_t i = 0; i < kLiquidNames.size(); ++i) {
        if (s == kLiquidNames[i]) {
            return static_cast<Liquid>(i);
        }
    }
    return std::nullopt;
}

}    // namespace oihrl::task
