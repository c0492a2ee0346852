#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oihrl/a2c/a2c_learner.hpp"
#include "oihrl/meta/meta_trainer.hpp"
#include "oihrl/task/craftworld_generator.hpp"
#include "oihrl/task/domain.hpp"

namespace oihrl::harness {

enum class BaselineKind : std::uint8_t { oi_hrl, hrl_n, hrl_n_plus_k, hrl_full };

struct BaselineSpec {
    BaselineKind kind = BaselineKind::oi_hrl;
    int k = 0;    // only for hrl_n_plus_k

    /// "OI_HRL", "HRL_N", "HRL_N+<k>", "HRL_FULL".
    [[nodiscard]] auto name() const -> std::string;
    auto operator==(const BaselineSpec &) const -> bool = default;
};

/// Accepts the names produced by BaselineSpec::name() and "HRL_N_PLUS_<k>". Throws ConfigError.
auto parse_baseline(const std::string &text) -> BaselineSpec;

/// Comma-separated list of baseline names.
auto parse_baseline_list(const std::string &text) -> std::vector<BaselineSpec>;

/// Domain from a config file or from the CraftWorld generator.
struct DomainSource {
    std::optional<std::filesystem::path> config_path;
    std::optional<task::CraftworldGeneratorConfig> generator;
    std::uint64_t generator_seed = 0;
};

/// Inclusive recipe-length range used to bucket completion rates.
struct LengthBucket {
    int lo = 0;
    int hi = 0;
};

struct RunConfig {
    std::string name = "run";
    DomainSource domain;
    meta::MetaTrainConfig meta;
    a2c::A2CConfig a2c;
    bool train_policies = true;
    std::vector<BaselineSpec> baselines;
    int test_variants = 100;
    std::filesystem::path out_dir = "results";
    std::optional<std::filesystem::path> checkpoint;
    std::uint64_t master_seed = 0;
    int workers = 1;
    std::vector<double> fractions{0.25, 0.5, 1.0};
    int sweep_seeds = 3;
    std::vector<LengthBucket> length_buckets;    // empty: one bucket per recipe length
    nlohmann::json source;                       // the document this config was read from
};

/// Relative paths inside the document resolve against `base_dir`. Throws ConfigError.
auto run_config_from_json(const nlohmann::json &doc, const std::filesystem::path &base_dir = {}) -> RunConfig;
auto load_run_config(const std::filesystem::path &path) -> RunConfig;
auto run_config_to_json(const RunConfig &config) -> nlohmann::json;

auto load_domain(const DomainSource &source) -> task::Domain;

/// Seeds of the independent random streams of a run.
auto meta_seed(const RunConfig &config) -> std::uint64_t;
auto test_sample_seed(const RunConfig &config) -> std::uint64_t;
auto variant_seed(const RunConfig &config, task::VariantRef variant) -> std::uint64_t;

}    // namespace oihrl::harness
