#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "oihrl/task/craftworld_generator.hpp"
#include "oihrl/task/domain.hpp"

namespace oihrl::task {

/// Parses a domain description. Throws ConfigError naming the offending field.
auto domain_from_json(const nlohmann::json &doc) -> Domain;
auto domain_to_json(const Domain &domain) -> nlohmann::json;

auto load_domain_config(const std::filesystem::path &path) -> Domain;
void save_domain_config(const Domain &domain, const std::filesystem::path &path);

auto episode_config_from_json(const nlohmann::json &doc, EpisodeConfig base = {}) -> EpisodeConfig;
auto episode_config_to_json(const EpisodeConfig &config) -> nlohmann::json;

auto generator_config_from_json(const nlohmann::json &doc) -> CraftworldGeneratorConfig;

/// Canonical serialized form; two domains are structurally identical iff these match.
auto canonical_domain_string(const Domain &domain) -> std::string;

/// FNV-1a 64 of the canonical domain string; stamped into checkpoints.
auto domain_hash(const Domain &domain) -> std::uint64_t;

}    // namespace oihrl::task
