#pragma once

#include "dgrpo/curation.hpp"
#include "dgrpo/taskbank.hpp"
#include "dgrpo/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dgrpo {

/// Everything an experiment needs, read from one JSON file. All sections are
/// optional except the top-level `seed`; unknown keys are rejected.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    BankParams bank;
    CurationConfig curation;
    std::size_t base_steps = 20;      // vanilla GRPO steps that produce the curation base policy
    std::string base_checkpoint;      // if set, load the base policy instead of training it
    TrainerConfig trainer;
    std::size_t eval_samples = 1;

    void validate() const;
};

using Override = std::pair<std::string, std::string>;

/// Sets a dotted key ("trainer.stage2_steps") in a raw config document. The value
/// is parsed as JSON when possible and kept as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& dotted_key, const std::string& value);

/// Strict conversion; throws ConfigError naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Reads `path` (empty path = `{}`), applies the DGRPO_SEED environment
/// variable, then the overrides in order, then parses strictly.
ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides = {});

nlohmann::json to_json(const ExperimentConfig& cfg);

} // namespace dgrpo
