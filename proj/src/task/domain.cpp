#include "oihrl/task/domain.hpp"

#include <cmath>
#include <map>

#include "oihrl/common/errors.hpp"
#include "oihrl/common/rng.hpp"
#include "oihrl/task/recipe.hpp"

namespace oihrl::task {

auto split_variants(const TaskGraph &graph, SplitRatios ratios, std::uint64_t seed) -> DomainSplit {
    if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0
        || std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
        throw ConfigError("split ratios must be non-negative and sum to 1");
    }
    const RecipeTable recipes(graph);
    DomainSplit split;
    split.ratios = ratios;
    split.seed = seed;

    enum Bucket { kTrain, kValidation, kTest };
    std::map<std::vector<int>, Bucket> assigned;
    auto push = [&](VariantRef ref, Bucket b) {
        switch (b) {
        case kTrain:
            split.train.push_back(ref);
            break;
        case kValidation:
            split.validation.push_back(ref);
            break;
        case kTest:
            split.test.push_back(ref);
            break;
        }
    };

    Rng rng(derive_seed(seed, {0x5711}));
    for (std::size_t t = 0; t < graph.tasks.size(); ++t) {
        const auto &task = graph.tasks[t];
        if (task.is_base()) {
            continue;
        }
        std::vector<VariantRef> order;
        for (std::size_t j = 0; j < task.variants.size(); ++j) {
            order.push_back({static_cast<int>(t), static_cast<int>(j)});
        }
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[uniform_index(rng, i)]);
        }
        std::vector<VariantRef> fresh;
        for (const auto &ref : order) {
            if (auto it = assigned.find(recipes.at(ref)); it != assigned.end()) {
                push(ref, it->second);
            } else {
                fresh.push_back(ref);
            }
        }
        const auto n = static_cast<double>(fresh.size());
        const auto n_train = static_cast<std::size_t>(std::llround(n * ratios.train));
        const auto n_val = std::min(fresh.size() - std::min(n_train, fresh.size()),
                                    static_cast<std::size_t>(std::llround(n * ratios.validation)));
        for (std::size_t i = 0; i < fresh.size(); ++i) {
            const Bucket b = i < n_train ? kTrain : (i < n_train + n_val ? kValidation : kTest);
            assigned.emplace(recipes.at(fresh[i]), b);
            push(fresh[i], b);
        }
    }
    return split;
}

}    // namespace oihrl::task
