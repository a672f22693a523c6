#include "dgrpo/trainer.hpp"

#include "dgrpo/errors.hpp"
#include "dgrpo/parallel.hpp"
#include "dgrpo/rng.hpp"
#include "dgrpo/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace dgrpo {

void TrainerConfig::validate() const {
    if (group_size < 1) throw ConfigError("trainer.group_size must be >= 1");
    if (rollout_batch < 1) throw ConfigError("trainer.rollout_batch must be >= 1");
    if (global_batch < 1) throw ConfigError("trainer.global_batch must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("trainer.learning_rate must be > 0");
    if (!(clip_eps > 0.0)) throw ConfigError("trainer.clip_eps must be > 0");
    if (!(kl_beta >= 0.0)) throw ConfigError("trainer.kl_beta must be >= 0");
    if (!(advantage_epsilon >= 0.0)) throw ConfigError("scheme.epsilon must be >= 0");
    if (!(temperature > 0.0)) throw ConfigError("trainer.temperature must be > 0");
    scheme.reweight.validate();
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

// Cycles through a dataset in seeded-shuffle order, reshuffling on every pass.
class TaskCycler {
public:
    TaskCycler(std::size_t n, std::uint64_t seed) : order_(n), seed_(seed) { reshuffle(); }

    std::size_t next() {
        if (cursor_ == order_.size()) {
            ++pass_;
            reshuffle();
        }
        return order_[cursor_++];
    }

private:
    void reshuffle() {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        Rng rng(derive_seed({seed_, pass_}));
        for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng.below(i)]);
        cursor_ = 0;
    }

    std::vector<std::size_t> order_;
    std::uint64_t seed_;
    std::uint64_t pass_ = 0;
    std::size_t cursor_ = 0;
};

struct TierSums {
    double reward = 0.0;
    std::size_t n = 0;
    double mean() const { return n ? reward / static_cast<double>(n) : kNaN; }
};

} // namespace

bool MetricsRow::operator==(const MetricsRow& o) const {
    return stage == o.stage && step == o.step && same_double(mean_reward, o.mean_reward) &&
           same_double(acc_simple, o.acc_simple) && same_double(acc_moderate, o.acc_moderate) &&
           same_double(acc_hard, o.acc_hard) && same_double(resp_len, o.resp_len) &&
           same_double(entropy, o.entropy) && same_double(kl, o.kl) && same_double(ratio_dev, o.ratio_dev);
}

StageResult run_stage(const SoftmaxPolicy& policy, std::span<const TaskRecord> dataset, const TrainerConfig& cfg,
                      int stage_index, std::size_t steps, const CurationConfig& tiers) {
    cfg.validate();
    StageResult out{policy, {}};
    if (steps == 0) return out;
    if (dataset.empty()) throw ConfigError("stage " + std::to_string(stage_index) + ": dataset is empty");

    const SoftmaxPolicy reference = policy;
    const auto stage_seed = derive_seed({cfg.seed, static_cast<std::uint64_t>(stage_index)});
    TaskCycler cycler(dataset.size(), derive_seed({stage_seed, 0x5bu}));
    const std::size_t per_step = cfg.groups_per_step();
    const int submit = policy.submit_action();

    std::size_t step = 0;
    for (std::uint64_t phase = 0; step < steps; ++phase) {
        std::vector<const TaskRecord*> tasks(cfg.rollout_batch);
        for (auto& t : tasks) t = &dataset[cycler.next()];

        const SoftmaxPolicy old = out.policy;
        std::vector<RolloutGroupSample> groups(tasks.size());
        std::vector<std::vector<double>> advantages(tasks.size());
        const auto phase_seed = derive_seed({stage_seed, phase});
        parallel_for(tasks.size(), [&](std::size_t slot) {
            groups[slot] = sample_group(old, *tasks[slot], cfg.group_size, derive_seed({phase_seed, slot}),
                                        cfg.advantage_epsilon);
            advantages[slot] = reweighted_advantages(groups[slot].rewards, cfg.scheme);
        });

        for (std::size_t begin = 0; begin < groups.size() && step < steps; begin += per_step, ++step) {
            const std::size_t end = std::min(groups.size(), begin + per_step);
            const std::span<const RolloutGroupSample> mb_groups(groups.data() + begin, end - begin);
            const std::span<const TaskRecord* const> mb_tasks(tasks.data() + begin, end - begin);
            const std::span<const std::vector<double>> mb_adv(advantages.data() + begin, end - begin);

            MetricsRow row;
            row.stage = stage_index;
            row.step = step;
            TierSums all;
            TierSums simple;
            TierSums moderate;
            TierSums hard;
            double len_sum = 0.0;
            double ent_sum = 0.0;
            double kl_sum = 0.0;
            double dev_sum = 0.0;
            for (std::size_t g = 0; g < mb_groups.size(); ++g) {
                const TaskRecord& task = *mb_tasks[g];
                const Tier tier = classify_tier(task, tiers);
                TierSums* bucket = tier == Tier::simple     ? &simple
                                   : tier == Tier::moderate ? &moderate
                                   : tier == Tier::hard     ? &hard
                                                            : nullptr;
                const auto& group = mb_groups[g];
                for (std::size_t i = 0; i < group.responses.size(); ++i) {
                    const auto& resp = group.responses[i];
                    const double r = group.rewards.rewards()[i];
                    all.reward += r;
                    ++all.n;
                    if (bucket) {
                        bucket->reward += r;
                        ++bucket->n;
                    }
                    len_sum += static_cast<double>(resp.length(submit));
                    ent_sum += mean_step_entropy(out.policy, task, resp.actions);
                    const double lp = sequence_log_prob(out.policy, task, resp.actions);
                    dev_sum += std::abs(std::exp(lp - resp.log_prob()) - 1.0);
                    kl_sum += kl_k3(out.policy, reference, resp.actions, task);
                }
            }
            const auto n = static_cast<double>(all.n);
            row.mean_reward = all.mean();
            row.acc_simple = simple.mean();
            row.acc_moderate = moderate.mean();
            row.acc_hard = hard.mean();
            row.resp_len = len_sum / n;
            row.entropy = ent_sum / n;
            row.kl = kl_sum / n;
            row.ratio_dev = dev_sum / n;

            SurrogateResult res;
            try {
                res = surrogate_loss_and_grad(out.policy, cfg.kl_beta > 0.0 ? &reference : nullptr, mb_groups,
                                              mb_tasks, mb_adv, cfg.clip_eps, cfg.kl_beta);
            } catch (const NumericalError& e) {
                throw NumericalError("stage " + std::to_string(stage_index) + " step " + std::to_string(step) +
                                     ": " + e.what());
            }
            out.policy = update(out.policy, res.gradient, cfg.learning_rate);
            out.metrics.push_back(row);
        }
    }
    return out;
}

std::vector<TaskRecord> prepare_stage2(std::span<const TaskRecord> d2, const TrainerConfig& cfg,
                                       const CurationConfig& curation) {
    const HintBand band = cfg.hint_stage2 ? HintBand{curation.d2_band.lower, curation.d2_band.upper, true}
                                          : HintBand::inactive();
    std::vector<TaskRecord> out;
    out.reserve(d2.size());
    for (const auto& t : d2) out.push_back(inject_hint(t, band));
    return out;
}

TwoStageResult run_two_stage(const SoftmaxPolicy& base, const CuratedDatasets& curated, const TrainerConfig& cfg,
                             const CurationConfig& curation) {
    cfg.validate();
    if (curated.d1.empty()) throw ConfigError("stage 1: dataset d1 is empty");
    if (curated.d2.empty()) throw ConfigError("stage 2: dataset d2 is empty");

    std::vector<TaskRecord> stage1;
    stage1.reserve(curated.d1.size());
    for (const auto& t : curated.d1) stage1.push_back(inject_hint(t, HintBand::inactive()));
    const auto stage2 = prepare_stage2(curated.d2, cfg, curation);

    auto s1 = run_stage(base, stage1, cfg, 1, cfg.stage1_steps, curation);
    auto s2 = run_stage(s1.policy, stage2, cfg, 2, cfg.stage2_steps, curation);

    TwoStageResult out{s1.policy, s2.policy, std::move(s1.metrics)};
    out.metrics.insert(out.metrics.end(), s2.metrics.begin(), s2.metrics.end());
    return out;
}

SoftmaxPolicy train_base_policy(std::span<const TaskRecord> bank, const TrainerConfig& cfg, std::size_t steps) {
    if (bank.empty()) throw ConfigError("base policy: bank is empty");
    TrainerConfig base_cfg = cfg;
    base_cfg.scheme = AdvantageScheme::vanilla();
    base_cfg.kl_beta = 0.0;
    const auto width = bank.front().feature_width();
    const auto policy = SoftmaxPolicy::zeros(width, width - kHintSlots, cfg.temperature);
    std::vector<TaskRecord> plain;
    plain.reserve(bank.size());
    for (const auto& t : bank) {
        if (t.feature_width() != width) throw DomainError("base policy: bank mixes feature widths");
        TaskRecord copy = inject_hint(t, HintBand::inactive());
        copy.accuracy_estimate.reset();
        plain.push_back(std::move(copy));
    }
    return run_stage(policy, plain, base_cfg, 0, steps).policy;
}

double TierAccuracy::accuracy() const {
    return count ? static_cast<double>(correct) / static_cast<double>(count) : kNaN;
}

EvalTable evaluate(const SoftmaxPolicy& policy, std::span<const TaskRecord> bank, std::size_t per_task_samples,
                   std::uint64_t /*seed*/, const CurationConfig& tiers) {
    if (per_task_samples < 1) throw ConfigError("evaluate: per_task_samples must be >= 1");
    EvalTable table;
    for (const auto& task : bank) {
        const auto actions = greedy_decode(policy, task);
        Response resp{actions, {}};
        const int ok = verify(resp.symbols(policy.submit_action()), task);
        TierAccuracy* bucket = nullptr;
        switch (classify_tier(task, tiers)) {
        case Tier::simple: bucket = &table.simple; break;
        case Tier::moderate: bucket = &table.moderate; break;
        case Tier::hard: bucket = &table.hard; break;
        case Tier::unsolvable: bucket = &table.unsolvable; break;
        case Tier::unrated: bucket = &table.unrated; break;
        }
        for (auto* b : {bucket, &table.overall}) {
            b->count += 1;
            b->correct += static_cast<std::size_t>(ok);
        }
    }
    return table;
}

void write_metrics_csv(std::ostream& os, std::span<const MetricsRow> rows) {
    os << kMetricsHeader << '\n';
    for (const auto& r : rows) {
        os << r.stage << ',' << r.step << ',' << format_double(r.mean_reward) << ',' << format_double(r.acc_simple)
           << ',' << format_double(r.acc_moderate) << ',' << format_double(r.acc_hard) << ','
           << format_double(r.resp_len) << ',' << format_double(r.entropy) << ',' << format_double(r.kl) << ','
           << format_double(r.ratio_dev) << '\n';
    }
}

void write_eval_csv(std::ostream& os, const EvalTable& table) {
    os << "tier,count,correct,accuracy\n";
    const std::pair<const char*, const TierAccuracy*> rows[] = {
        {"simple", &table.simple},         {"moderate", &table.moderate}, {"hard", &table.hard},
        {"unsolvable", &table.unsolvable}, {"unrated", &table.unrated},   {"overall", &table.overall},
    };
    for (const auto& [name, t] : rows)
        os << name << ',' << t->count << ',' << t->correct << ',' << format_double(t->accuracy()) << '\n';
}

} // namespace dgrpo
