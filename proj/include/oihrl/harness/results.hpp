#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "oihrl/harness/run_config.hpp"

namespace oihrl::harness {

struct RetrievalMetrics {
    bool sufficient = false;
    int extra = 0;
    int missing = 0;
};

/// `fetched` and `recipe` are ascending option ids.
auto retrieval_metrics(const std::vector<int> &fetched, const std::vector<int> &recipe) -> RetrievalMetrics;

struct RetrievalRow {
    std::string variant_id;
    std::string baseline;
    RetrievalMetrics metrics;
    int fetched = 0;
    int recipe_length = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t variant_seed = 0;
};

struct CurveRow {
    std::string variant_id;
    std::string baseline;
    std::int64_t iteration = 0;    // A2C env steps at the checkpoint
    double mean_reward = 0.0;
    double mean_length = 0.0;
    double completion = 0.0;
    std::uint64_t master_seed = 0;
    std::uint64_t variant_seed = 0;
};

struct ResultsDataset {
    std::vector<RetrievalRow> retrieval;
    std::vector<CurveRow> curves;
};

struct AggregateRow {
    std::string baseline;
    std::int64_t iteration = 0;
    double mean = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    int n = 0;
    auto operator==(const AggregateRow &) const -> bool = default;
};

struct CompletionBucketRow {
    std::string baseline;
    int length_lo = 0;
    int length_hi = 0;
    int variants = 0;
    double completion = 0.0;    // mean final-checkpoint completion
    auto operator==(const CompletionBucketRow &) const -> bool = default;
};

struct RetrievalSummary {
    std::string baseline;
    int variants = 0;
    double sufficient = 0.0;    // fraction
    double extra = 0.0;
    double missing = 0.0;
    auto operator==(const RetrievalSummary &) const -> bool = default;
};

struct Aggregates {
    std::vector<AggregateRow> reward;
    std::vector<AggregateRow> length;
    std::vector<AggregateRow> completion;
    std::vector<CompletionBucketRow> by_length;
    std::vector<RetrievalSummary> retrieval;
    auto operator==(const Aggregates &) const -> bool = default;
};

struct MeanCi {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Normal-approximation 95% interval of the mean (sample standard deviation; zero width for n < 2).
auto mean_ci95(const std::vector<double> &values) -> MeanCi;

/// Baselines keep first-appearance order; iterations ascend.
auto aggregate(const ResultsDataset &data, const std::vector<LengthBucket> &buckets = {}) -> Aggregates;

/// Final checkpoint (largest iteration) per (baseline) from aggregated rows.
auto final_rows(const std::vector<AggregateRow> &rows) -> std::vector<AggregateRow>;

/// Writes retrieval.csv, curves.csv, aggregate.csv (reward), aggregate_length.csv, aggregate_completion.csv,
/// completion_by_length.csv and retrieval_summary.csv into `dir` (created if needed).
void emit_results(const ResultsDataset &data, const Aggregates &agg, const std::filesystem::path &dir);

/// Reads retrieval.csv and curves.csv back. Throws LoadError on malformed files.
auto parse_results(const std::filesystem::path &dir) -> ResultsDataset;

/// Reads one aggregate_*.csv file.
auto parse_aggregate(const std::filesystem::path &file) -> std::vector<AggregateRow>;

}    // namespace oihrl::harness
