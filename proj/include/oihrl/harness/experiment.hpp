#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oihrl/env/smdp_env.hpp"
#include "oihrl/harness/results.hpp"
#include "oihrl/harness/run_config.hpp"
#include "oihrl/index/option_index.hpp"

namespace oihrl::harness {

/// Option set a baseline hands to the policy learner, ascending. OI_HRL queries `model` on `s0`;
/// the oracle baselines use the recipe. Throws ConfigError for infeasible k and InvalidInput when
/// OI_HRL is requested without a model.
auto select_baseline_options(const BaselineSpec &spec, task::VariantRef variant, const env::DomainModel &domain,
                             const index::IndexModel *model, const env::EnvState &s0, double top_p,
                             std::uint64_t seed) -> std::vector<int>;

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads. Exceptions are rethrown after all
/// workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)> &fn);

/// Test variants drawn without replacement (or the whole split when `count` covers it), in split order.
auto sample_test_variants(const task::Domain &domain, int count, std::uint64_t seed) -> std::vector<task::VariantRef>;

struct MetaTrainOutcome {
    index::IndexModel model;
    meta::TrainingReport report;
};

/// Fresh index + QGN meta-trained on `train` with the run's meta settings and `seed`.
auto meta_train_index(std::shared_ptr<const env::DomainModel> domain, const std::vector<task::VariantRef> &train,
                      const meta::MetaTrainConfig &config, std::uint64_t seed,
                      const meta::ProgressFn &progress = {}) -> MetaTrainOutcome;

using ProgressLine = std::function<void(const std::string &)>;

/// Retrieval metrics of OI_HRL alone (no policy learning) on the given variants.
auto evaluate_retrieval(const RunConfig &config, const env::DomainModel &domain, const index::IndexModel &model,
                        const std::vector<task::VariantRef> &variants) -> std::vector<RetrievalRow>;

/// Algorithm 3 over the sampled test variants for every configured baseline. `model` is required
/// when OI_HRL is among the baselines.
auto run_evaluation(const RunConfig &config, std::shared_ptr<const env::DomainModel> domain,
                    const index::IndexModel *model, const ProgressLine &progress = {}) -> ResultsDataset;

struct SweepRow {
    double fraction = 0.0;
    int seed_index = 0;
    std::uint64_t seed = 0;
    int train_variants = 0;
    RetrievalSummary summary;
};

/// Retrains from scratch per (fraction, seed) on a random subset of the train split and scores
/// retrieval on the whole test split.
auto run_trainsize_sweep(const RunConfig &config, std::shared_ptr<const env::DomainModel> domain,
                         const std::vector<double> &fractions, const ProgressLine &progress = {})
    -> std::vector<SweepRow>;

void write_sweep(const std::filesystem::path &dir, const std::vector<SweepRow> &rows, std::uint64_t master_seed);

/// Hex FNV-1a 64 of a file's bytes.
auto file_hash(const std::filesystem::path &path) -> std::string;

/// Full config, seeds, domain hash and checkpoint hashes.
auto make_manifest(const RunConfig &config, const task::Domain &domain,
                   const std::vector<std::filesystem::path> &checkpoints, const ResultsDataset *data)
    -> nlohmann::json;

void write_manifest(const std::filesystem::path &dir, const nlohmann::json &manifest);

}    // namespace oihrl::harness
