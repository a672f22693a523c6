#include "dgrpo/advantage.hpp"

#include "dgrpo/errors.hpp"

#include <cmath>
#include <string>

namespace dgrpo {

RewardGroup::RewardGroup(std::vector<std::uint8_t> rewards, double epsilon)
    : rewards_(std::move(rewards)), epsilon_(epsilon) {
    if (rewards_.empty()) throw DomainError("RewardGroup: empty group");
    if (!(epsilon_ >= 0.0) || !std::isfinite(epsilon_))
        throw ConfigError("RewardGroup: epsilon must be a finite value >= 0");
    std::size_t hits = 0;
    for (auto r : rewards_) {
        if (r > 1) throw DomainError("RewardGroup: rewards must be 0 or 1, got " + std::to_string(r));
        hits += r;
    }
    const double g = static_cast<double>(rewards_.size());
    mean_ = static_cast<double>(hits) / g;
    // Binary rewards: population variance is p(1 - p).
    stddev_ = std::sqrt(mean_ * (1.0 - mean_));
}

double group_accuracy(const RewardGroup& group) { return group.accuracy(); }

namespace {

std::vector<double> centered(const RewardGroup& group, double scale) {
    std::vector<double> out;
    out.reserve(group.size());
    // Degenerate groups: every r_i equals mu, so the centred reward is exactly 0
    // even with eps = 0 (avoid 0/0).
    if (group.degenerate()) {
        out.assign(group.size(), 0.0);
        return out;
    }
    for (auto r : group.rewards()) out.push_back(scale * (static_cast<double>(r) - group.mean()));
    return out;
}

} // namespace

std::vector<double> std_norm_advantages(const RewardGroup& group) {
    if (group.degenerate()) return centered(group, 1.0);
    const double denom = group.stddev() + group.epsilon();
    std::vector<double> out;
    out.reserve(group.size());
    for (auto r : group.rewards()) out.push_back((static_cast<double>(r) - group.mean()) / denom);
    return out;
}

std::vector<double> reweighted_advantages(const RewardGroup& group, const AdvantageScheme& scheme) {
    const double w = weight(group.accuracy(), scheme.reweight);
    if (!scheme.use_std_norm) return centered(group, w);

    auto adv = std_norm_advantages(group);
    if (scheme.reweight.family != ReweightFamily::none)
        for (auto& x : adv) x *= w;
    return adv;
}

} // namespace dgrpo
