#pragma once

#include "dgrpo/matrix.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dgrpo {

// Every feature row ends with (active, lower, upper).
inline constexpr std::size_t kHintSlots = 3;

struct HintBand {
    double lower = 0.0;
    double upper = 0.0;
    bool active = false;

    static HintBand inactive() { return {}; }
    void validate() const;
    bool operator==(const HintBand&) const = default;
};

/// One synthetic prompt. `features` has one row per target position; each row is
/// the (possibly corrupted) one-hot of the target symbol followed by the hint slots.
struct TaskRecord {
    std::uint64_t id = 0;
    double difficulty = 0.0;
    std::vector<int> target;
    Matrix features;
    HintBand hint;
    std::optional<double> accuracy_estimate;
    std::uint64_t rollout_count = 0;

    std::size_t length() const { return target.size(); }
    std::size_t alphabet_size() const { return features.cols() - kHintSlots; }
    std::size_t feature_width() const { return features.cols(); }
    std::span<const double> step_features(std::size_t t) const { return features.row(t); }

    bool operator==(const TaskRecord&) const = default;
};

struct DifficultyShare {
    double difficulty = 0.0;
    double proportion = 0.0;
};

struct BankParams {
    std::size_t n = 200;
    std::vector<DifficultyShare> mix{{0.05, 0.5}, {0.95, 0.5}};
    std::size_t k_alpha = 8;
    std::size_t l_min = 2;
    std::size_t l_max = 8;
    // Target symbols follow a Zipf law P(j) ~ (j + 1)^-symbol_skew; 0 is uniform.
    double symbol_skew = 1.5;
    std::uint64_t seed = 1;

    void validate() const;
};

std::size_t target_length(double difficulty, std::size_t l_min, std::size_t l_max);

/// Probability of each target symbol under BankParams::symbol_skew.
std::vector<double> symbol_distribution(std::size_t k_alpha, double skew);

/// Deterministic in `params`; each task draws from its own stream seeded by (seed, id).
std::vector<TaskRecord> generate_bank(const BankParams& params);

/// Tasks per mix entry using largest-remainder rounding of n * proportion.
std::vector<std::size_t> mix_counts(std::size_t n, std::span<const DifficultyShare> mix);

/// 1 iff the response reproduces the target exactly (same length, same symbols).
int verify(std::span<const int> response, const TaskRecord& task);

TaskRecord inject_hint(const TaskRecord& task, const HintBand& band);

// Line-delimited bank files: one JSON object per task, fixed field order,
// doubles printed with 17 significant digits.
void write_bank(std::ostream& os, std::span<const TaskRecord> bank);
std::vector<TaskRecord> read_bank(std::istream& is);
void save_bank(const std::string& path, std::span<const TaskRecord> bank);
std::vector<TaskRecord> load_bank(const std::string& path);

} // namespace dgrpo
