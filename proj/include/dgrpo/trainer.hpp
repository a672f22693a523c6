#pragma once

#include "dgrpo/advantage.hpp"
#include "dgrpo/curation.hpp"
#include "dgrpo/policy.hpp"
#include "dgrpo/taskbank.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dgrpo {

struct TrainerConfig {
    std::size_t group_size = 12;
    std::size_t rollout_batch = 64;   // tasks per rollout phase
    std::size_t global_batch = 128;   // responses per optimization step (rounded up to whole groups)
    double learning_rate = 50.0;  // gradients are averaged over ~G * groups_per_step responses
    double clip_eps = 0.2;
    double kl_beta = 0.0;
    double advantage_epsilon = kDefaultAdvantageEpsilon;
    AdvantageScheme scheme;
    std::size_t stage1_steps = 60;
    std::size_t stage2_steps = 30;
    bool hint_stage2 = false;
    double temperature = 1.0;
    std::uint64_t seed = 1;

    void validate() const;
    std::size_t groups_per_step() const { return (global_batch + group_size - 1) / group_size; }
};

struct MetricsRow {
    int stage = 1;
    std::size_t step = 0;
    double mean_reward = 0.0;
    double acc_simple = 0.0;    // NaN when the step saw no task of the tier
    double acc_moderate = 0.0;
    double acc_hard = 0.0;
    double resp_len = 0.0;
    double entropy = 0.0;
    double kl = 0.0;
    double ratio_dev = 0.0;

    bool operator==(const MetricsRow&) const;
};

struct StageResult {
    SoftmaxPolicy policy;
    std::vector<MetricsRow> metrics;
};

/// One curriculum stage of `steps` optimization steps on `dataset`.
///
/// Each rollout phase draws `rollout_batch` tasks from a seeded shuffle of the
/// dataset (reshuffled every pass), samples a group of G responses per task from
/// the phase-start policy, and scores them. The groups are then consumed in
/// order as minibatches of ceil(global_batch / G) groups; each minibatch is one
/// ascent step on the clipped surrogate, with importance ratios taken against the
/// phase-start policy. The stage-start policy serves as the KL reference.
StageResult run_stage(const SoftmaxPolicy& policy, std::span<const TaskRecord> dataset, const TrainerConfig& cfg,
                      int stage_index, std::size_t steps, const CurationConfig& tiers = {});

struct TwoStageResult {
    SoftmaxPolicy stage1_policy;
    SoftmaxPolicy final_policy;
    std::vector<MetricsRow> metrics;
};

/// Stage 1 on d1 without hints, then stage 2 on d2 with the d2 band injected as a
/// hint when cfg.hint_stage2 is set.
TwoStageResult run_two_stage(const SoftmaxPolicy& base, const CuratedDatasets& curated, const TrainerConfig& cfg,
                             const CurationConfig& curation = {});

/// Stage-2 dataset as trained: hinted with the d2 band, or with hint slots cleared.
std::vector<TaskRecord> prepare_stage2(std::span<const TaskRecord> d2, const TrainerConfig& cfg,
                                       const CurationConfig& curation);

/// Base policy for curation: `steps` vanilla-GRPO steps from zero weights on `bank`.
SoftmaxPolicy train_base_policy(std::span<const TaskRecord> bank, const TrainerConfig& cfg, std::size_t steps);

struct TierAccuracy {
    std::size_t count = 0;
    std::size_t correct = 0;
    double accuracy() const;  // NaN when count == 0
};

struct EvalTable {
    TierAccuracy simple;
    TierAccuracy moderate;
    TierAccuracy hard;
    TierAccuracy unsolvable;
    TierAccuracy unrated;
    TierAccuracy overall;
};

/// Greedy-decoding accuracy per tier. Greedy decoding is deterministic, so
/// per_task_samples only has to be >= 1.
EvalTable evaluate(const SoftmaxPolicy& policy, std::span<const TaskRecord> bank, std::size_t per_task_samples,
                   std::uint64_t seed, const CurationConfig& tiers = {});

inline constexpr const char* kMetricsHeader =
    "stage,step,mean_reward,acc_simple,acc_moderate,acc_hard,resp_len,entropy,kl,ratio_dev";

void write_metrics_csv(std::ostream& os, std::span<const MetricsRow> rows);
void write_eval_csv(std::ostream& os, const EvalTable& table);

} // namespace dgrpo
