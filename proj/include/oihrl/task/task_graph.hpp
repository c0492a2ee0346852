#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace oihrl::task {

enum class Physics : std::uint8_t { craftworld, kitchen };

enum class ObjectClass : std::uint8_t { simple, complex, station };

/// Object capabilities (bitmask).
enum Trait : std::uint32_t {
    kPickupable = 1U << 0,
    kReceptacle = 1U << 1,
    kAppliance = 1U << 2,
    kSliceable = 1U << 3,
    kBreakable = 1U << 4,
    kFillable = 1U << 5,
    kCutter = 1U << 6,
    kLiquidSource = 1U << 7,
    kWorkshop = 1U << 8,
};

enum class Liquid : std::uint8_t { coffee = 0, water = 1, wine = 2 };
inline constexpr int kLiquidCount = 3;

struct ObjectInfo {
    std::string name;
    ObjectClass cls = ObjectClass::simple;
    std::uint32_t traits = 0;
    std::optional<Liquid> source_of;

    [[nodiscard]] auto has(Trait t) const noexcept -> bool { return (traits & t) != 0; }
};

enum class OptionKind : std::uint8_t { pickup, puton, cookon, slice, break_object, fill, workshop };

/// What a base task's option acts on.
struct OptionBinding {
    OptionKind kind = OptionKind::pickup;
    int object = -1;
    std::optional<Liquid> liquid;    // fill only
};

struct VariantRef {
    int task = -1;
    int variant = -1;
    auto operator<=>(const VariantRef &) const = default;
};

enum class AtomKind : std::uint8_t {
    held,        // object in inventory
    present,     // object in scene
    cooked,
    sliced,
    broken,
    contains,    // object holds liquid `arg`
    on,          // object located directly on receptacle `arg`
    occupied,    // something located directly on the object
    activated,   // appliance or station was operated
    crafted,     // some complex object is held
};

struct GoalAtom {
    AtomKind kind = AtomKind::held;
    int object = -1;
    int arg = -1;
    auto operator<=>(const GoalAtom &) const = default;
};

struct TaskVariant {
    std::vector<VariantRef> preconditions;    // C(t_ij)
    std::vector<GoalAtom> goal;               // composite variants; base goals derive from the binding
};

struct Task {
    std::string name;
    std::vector<TaskVariant> variants;
    std::optional<int> option;     // set for base tasks
    std::optional<int> product;    // complex object made by this task (craftworld)

    [[nodiscard]] auto is_base() const noexcept -> bool { return option.has_value(); }
};

/// Tasks, variants, the option library and the object catalog of one domain.
/// Base task for option `o` is `tasks[base_tasks[o]]`, bound by `bindings[o]`.
struct TaskGraph {
    Physics physics = Physics::craftworld;
    std::vector<ObjectInfo> objects;
    std::vector<std::vector<int>> groups;
    std::vector<Task> tasks;
    std::vector<int> base_tasks;
    std::vector<OptionBinding> bindings;
    int hand_capacity = 0;    // 0 = unlimited

    [[nodiscard]] auto option_count() const noexcept -> int { return static_cast<int>(base_tasks.size()); }
    [[nodiscard]] auto object_count() const noexcept -> int { return static_cast<int>(objects.size()); }
    [[nodiscard]] auto contains(VariantRef ref) const noexcept -> bool;
    /// Throws InvalidInput for unknown references.
    [[nodiscard]] auto variant(VariantRef ref) const -> const TaskVariant &;
    [[nodiscard]] auto find_task(const std::string &name) const -> std::optional<int>;
    [[nodiscard]] auto find_object(const std::string &name) const -> std::optional<int>;
    [[nodiscard]] auto option_name(int option) const -> const std::string &;
    /// "task_name" for single-variant tasks, "task_name:j" (1-based) otherwise.
    [[nodiscard]] auto variant_name(VariantRef ref) const -> std::string;
    /// All variants of composite tasks, in task order.
    [[nodiscard]] auto composite_variants() const -> std::vector<VariantRef>;
};

auto to_string(OptionKind kind) -> std::string;
auto option_kind_from_string(const std::string &s) -> std::optional<OptionKind>;
auto to_string(Liquid l) -> std::string;
auto liquid_from_string(const std::string &s) -> std::optional<Liquid>;

}    // namespace oihrl::task
