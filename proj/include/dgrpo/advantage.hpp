#pragma once

#include "dgrpo/reweight.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace dgrpo {

inline constexpr double kDefaultAdvantageEpsilon = 1e-6;

/// Binary rewards of one rollout group together with their summary statistics.
class RewardGroup {
public:
    explicit RewardGroup(std::vector<std::uint8_t> rewards, double epsilon = kDefaultAdvantageEpsilon);

    std::span<const std::uint8_t> rewards() const { return rewards_; }
    std::size_t size() const { return rewards_.size(); }
    double epsilon() const { return epsilon_; }

    double mean() const { return mean_; }
    // Population standard deviation.
    double stddev() const { return stddev_; }
    double accuracy() const { return mean_; }

    bool degenerate() const { return stddev_ == 0.0; }

private:
    std::vector<std::uint8_t> rewards_;
    double epsilon_;
    double mean_ = 0.0;
    double stddev_ = 0.0;
};

struct AdvantageScheme {
    ReweightConfig reweight;
    bool use_std_norm = true;

    static AdvantageScheme vanilla() { return {}; }
    bool operator==(const AdvantageScheme&) const = default;
};

double group_accuracy(const RewardGroup& group);

/// (r_i - mu) / (sigma + eps).
std::vector<double> std_norm_advantages(const RewardGroup& group);

/// w(p) * (r_i - mu), optionally divided by (sigma + eps).
std::vector<double> reweighted_advantages(const RewardGroup& group, const AdvantageScheme& scheme);

} // namespace dgrpo
