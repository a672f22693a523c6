#include "dgrpo/errors.hpp"
#include "dgrpo/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace dgrpo;

namespace {

TrainerConfig small_config() {
    TrainerConfig cfg;
    cfg.group_size = 4;
    cfg.rollout_batch = 8;
    cfg.global_batch = 16;
    cfg.stage1_steps = 6;
    cfg.stage2_steps = 3;
    return cfg;
}

std::vector<TaskRecord> bank_of(std::size_t n, std::vector<DifficultyShare> mix, std::uint64_t seed = 1) {
    BankParams p;
    p.n = n;
    p.mix = std::move(mix);
    p.seed = seed;
    return generate_bank(p);
}

SoftmaxPolicy identity_policy(std::size_t k, double strength) {
    auto p = SoftmaxPolicy::zeros(k + kHintSlots, k);
    for (std::size_t s = 0; s < k; ++s) p.weights()(s, s) = strength;
    return p;
}

CuratedDatasets rated_split(std::uint64_t seed) {
    auto bank = bank_of(40, {{0.05, 0.5}, {0.6, 0.5}}, seed);
    CuratedDatasets c;
    for (std::size_t i = 0; i < bank.size(); ++i) {
        bank[i].accuracy_estimate = i % 2 ? 0.5 : 0.2;
        (i % 2 ? c.d1 : c.d2).push_back(bank[i]);
    }
    return c;
}

} // namespace

TEST_CASE("groups_per_step rounds up to whole groups") {
    TrainerConfig cfg;
    CHECK(cfg.groups_per_step() == 11);
    cfg.group_size = 16;
    CHECK(cfg.groups_per_step() == 8);
}

TEST_CASE("a perfect policy on fully revealed tasks never moves") {
    const auto bank = bank_of(16, {{0.0, 1.0}});
    const auto perfect = identity_policy(8, 60.0);
    const auto res = run_stage(perfect, bank, small_config(), 1, 5);
    CHECK(res.policy == perfect);
    REQUIRE(res.metrics.size() == 5);
    for (const auto& row : res.metrics) {
        CHECK(row.mean_reward == 1.0);
        CHECK(row.kl == 0.0);
        CHECK(std::isnan(row.acc_hard));
    }
}

TEST_CASE("zero steps return the input policy") {
    const auto bank = bank_of(8, {{0.5, 1.0}});
    const auto p = identity_policy(8, 1.0);
    const auto res = run_stage(p, bank, small_config(), 1, 0);
    CHECK(res.policy == p);
    CHECK(res.metrics.empty());
    CHECK_THROWS_AS(run_stage(p, std::span<const TaskRecord>{}, small_config(), 1, 2), ConfigError);
}

TEST_CASE("training is deterministic") {
    const auto split = rated_split(2);
    const auto base = SoftmaxPolicy::zeros(11, 8);
    const auto a = run_two_stage(base, split, small_config());
    const auto b = run_two_stage(base, split, small_config());
    CHECK(a.final_policy == b.final_policy);
    CHECK(a.metrics == b.metrics);
}

TEST_CASE("metrics rows follow the stage schedule") {
    const auto split = rated_split(3);
    auto cfg = small_config();
    cfg.stage1_steps = 60;
    cfg.stage2_steps = 30;
    const auto res = run_two_stage(SoftmaxPolicy::zeros(11, 8), split, cfg);
    REQUIRE(res.metrics.size() == 90);
    for (std::size_t i = 0; i < 90; ++i) {
        CHECK(res.metrics[i].stage == (i < 60 ? 1 : 2));
        CHECK(res.metrics[i].step == (i < 60 ? i : i - 60));
    }
    CHECK(res.metrics[0].kl == 0.0);
    CHECK(res.metrics[0].ratio_dev == 0.0);
    CHECK(res.metrics[60].kl == 0.0);

    std::ostringstream os;
    write_metrics_csv(os, res.metrics);
    std::size_t lines = 0;
    for (char c : os.str()) lines += c == '\n';
    CHECK(lines == 91);
    CHECK(os.str().rfind(std::string(kMetricsHeader) + "\n", 0) == 0);

    cfg.stage2_steps = 0;
    CHECK(run_two_stage(SoftmaxPolicy::zeros(11, 8), split, cfg).metrics.size() == 60);
}

TEST_CASE("stage-2 hint slots") {
    const auto split = rated_split(4);
    const CurationConfig cur;
    auto cfg = small_config();
    cfg.hint_stage2 = true;
    for (const auto& t : prepare_stage2(split.d2, cfg, cur)) {
        for (std::size_t r = 0; r < t.length(); ++r) {
            const auto phi = t.step_features(r);
            CHECK(phi[8] == 1.0);
            CHECK(phi[9] == 0.084);
            CHECK(phi[10] == 0.25);
        }
    }
    cfg.hint_stage2 = false;
    for (const auto& t : prepare_stage2(split.d2, cfg, cur))
        for (std::size_t r = 0; r < t.length(); ++r) {
            const auto phi = t.step_features(r);
            CHECK((phi[8] == 0.0 && phi[9] == 0.0 && phi[10] == 0.0));
        }
}

TEST_CASE("stages compose from run_stage") {
    const auto split = rated_split(5);
    const CurationConfig cur;
    const auto base = SoftmaxPolicy::zeros(11, 8);
    for (bool hint : {false, true}) {
        auto cfg = small_config();
        cfg.hint_stage2 = hint;
        const auto both = run_two_stage(base, split, cfg, cur);
        const auto s1 = run_stage(base, split.d1, cfg, 1, cfg.stage1_steps, cur);
        CHECK(both.stage1_policy == s1.policy);
        const auto s2 = run_stage(s1.policy, prepare_stage2(split.d2, cfg, cur), cfg, 2, cfg.stage2_steps, cur);
        CHECK(both.final_policy == s2.policy);
    }

    // Stage 1 never sees the hint setting.
    auto on = small_config();
    on.hint_stage2 = true;
    const auto off = small_config();
    CHECK(run_two_stage(base, split, on, cur).stage1_policy == run_two_stage(base, split, off, cur).stage1_policy);

    CuratedDatasets empty = split;
    empty.d2.clear();
    try {
        run_two_stage(base, empty, off, cur);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("stage 2") != std::string::npos);
    }
}

TEST_CASE("greedy evaluation") {
    auto bank = bank_of(30, {{0.0, 1.0}});
    const CurationConfig cur;
    for (std::size_t i = 0; i < bank.size(); ++i) bank[i].accuracy_estimate = (i % 3) * 0.45;
    const auto perfect = evaluate(identity_policy(8, 60.0), bank, 1, 1, cur);
    CHECK(perfect.overall.accuracy() == 1.0);
    CHECK(perfect.overall.count == 30);
    CHECK(perfect.simple.count + perfect.moderate.count + perfect.unsolvable.count == 30);
    CHECK(std::isnan(perfect.hard.accuracy()));

    // Zero weights: every step ties, so greedy emits symbol 0 up to the horizon.
    const auto mixed = bank_of(200, {{0.1, 0.5}, {0.9, 0.5}}, 9);
    std::size_t expected = 0;
    for (const auto& t : mixed) expected += t.target == std::vector<int>(t.length(), 0);
    const auto zero = SoftmaxPolicy::zeros(11, 8);
    const auto table = evaluate(zero, mixed, 1, 1, cur);
    CHECK(table.overall.correct == expected);
    CHECK(table.unrated.count == 200);

    const auto many = evaluate(zero, mixed, 8, 77, cur);
    CHECK(many.overall.correct == table.overall.correct);
    CHECK_THROWS_AS(evaluate(zero, mixed, 0, 1, cur), ConfigError);

    std::ostringstream os;
    write_eval_csv(os, perfect);
    CHECK(os.str().rfind("tier,count,correct,accuracy\n", 0) == 0);
}

TEST_CASE("base policy training starts from zeros and ignores hints") {
    const auto bank = bank_of(20, {{0.05, 0.5}, {0.9, 0.5}});
    TrainerConfig cfg = small_config();
    const auto a = train_base_policy(bank, cfg, 4);
    auto hinted = bank;
    for (auto& t : hinted) t = inject_hint(t, {0.084, 0.25, true});
    CHECK(train_base_policy(hinted, cfg, 4) == a);
    CHECK(train_base_policy(bank, cfg, 0) == SoftmaxPolicy::zeros(11, 8));
}

TEST_CASE("trainer config validation") {
    TrainerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.group_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.kl_beta = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
