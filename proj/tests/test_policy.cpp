#include "dgrpo/errors.hpp"
#include "dgrpo/policy.hpp"
#include "dgrpo/rng.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace dgrpo;
using fixture::Instance;
using fixture::pointers;
using fixture::random_instance;

namespace {

TaskRecord one_hot_task(std::vector<int> target, std::size_t k, std::uint64_t id = 0) {
    TaskRecord t;
    t.id = id;
    t.target = std::move(target);
    t.features = Matrix(t.target.size(), k + kHintSlots);
    for (std::size_t i = 0; i < t.target.size(); ++i) t.features(i, static_cast<std::size_t>(t.target[i])) = 1.0;
    return t;
}

SoftmaxPolicy identity_policy(std::size_t k, double strength) {
    auto p = SoftmaxPolicy::zeros(k + kHintSlots, k);
    for (std::size_t s = 0; s < k; ++s) p.weights()(s, s) = strength;
    return p;
}

} // namespace

TEST_CASE("log-probabilities of the softmax") {
    const auto zero = SoftmaxPolicy::zeros(11, 8);
    const auto t = one_hot_task({3, 1}, 8);
    CHECK(log_prob(zero, t.step_features(0), 4) == doctest::Approx(std::log(1.0 / 9.0)).epsilon(1e-14));

    const auto in = random_instance(5);
    for (std::size_t r = 0; r < in.tasks[0].length(); ++r) {
        double total = 0.0;
        for (int a = 0; a <= in.current.submit_action(); ++a)
            total += std::exp(log_prob(in.current, in.tasks[0].step_features(r), a));
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(log_prob(zero, std::vector<double>(5, 0.0), 0), DomainError);
    CHECK_THROWS_AS(log_prob(zero, t.step_features(0), 9), DomainError);
}

TEST_CASE("greedy action does not depend on temperature") {
    const auto in = random_instance(17);
    for (double temp : {0.1, 0.5, 1.0, 3.0, 20.0}) {
        const SoftmaxPolicy scaled(in.current.weights(), temp);
        for (const auto& task : in.tasks) CHECK(greedy_decode(scaled, task) == greedy_decode(in.current, task));
    }
}

TEST_CASE("greedy decoding breaks ties toward the lowest action") {
    const auto zero = SoftmaxPolicy::zeros(11, 8);
    const auto t = one_hot_task({0, 0}, 8);
    CHECK(greedy_decode(zero, t) == std::vector<int>{0, 0});
}

TEST_CASE("group sampling") {
    const auto t = one_hot_task({2, 5, 7}, 8, 42);
    const auto strong = identity_policy(8, 40.0);
    const auto group = sample_group(strong, t, 12, 3);
    CHECK(group.task_id == 42);
    CHECK(group.rewards.accuracy() == 1.0);

    const auto a = sample_group(SoftmaxPolicy::zeros(11, 8), t, 12, 99);
    const auto b = sample_group(SoftmaxPolicy::zeros(11, 8), t, 12, 99);
    REQUIRE(a.responses.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(a.responses[i].actions == b.responses[i].actions);
        CHECK(a.responses[i].old_log_probs == b.responses[i].old_log_probs);
        CHECK(a.responses[i].actions.size() <= t.length());
        for (double lp : a.responses[i].old_log_probs) CHECK((std::isfinite(lp) && lp <= 0.0));
    }
}

TEST_CASE("uniform policy on a one-symbol task matches the enumerated success rate") {
    const auto t = one_hot_task({4}, 8, 7);
    const auto uniform = SoftmaxPolicy::zeros(11, 8);
    const double exact = oracle::exact_success_probability(uniform.weights(), 1.0, t);
    CHECK(exact == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    double total = 0.0;
    const int groups = 2000;
    for (int s = 0; s < groups; ++s) total += sample_group(uniform, t, 12, static_cast<std::uint64_t>(s)).rewards.accuracy();
    CHECK(std::abs(total / groups - exact) < 0.03);
}

TEST_CASE("surrogate at policy == old is the mean advantage") {
    auto in = random_instance(3);
    const auto tasks = pointers(in.tasks);
    for (auto& a : in.adv) {
        const double m = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
        for (auto& v : a) v -= m;
    }
    const auto res = surrogate_loss_and_grad(in.old, nullptr, in.groups, tasks, in.adv, 0.2, 0.0);
    CHECK(std::abs(res.objective) < 1e-12);

    // Clip is inert at rho = 1: same value for any epsilon.
    const auto wide = surrogate_loss_and_grad(in.old, nullptr, in.groups, tasks, in.adv, 10.0, 0.0);
    CHECK(std::abs(wide.objective - res.objective) < 1e-15);
}

TEST_CASE("clipped contribution of a single response") {
    const auto t = one_hot_task({1}, 3);
    const auto policy = SoftmaxPolicy::zeros(6, 3);
    RolloutGroupSample g;
    g.task_id = t.id;
    Response r;
    r.actions = {1};
    r.old_log_probs = {std::log(0.25) - std::log(2.0)};  // pi = 1/4 now, so rho = 2
    g.responses = {r};
    g.rewards = RewardGroup({1});
    const std::vector<const TaskRecord*> tasks{&t};
    const std::vector<std::vector<double>> adv{{1.0}};
    const auto res = surrogate_loss_and_grad(policy, nullptr, std::span(&g, 1), tasks, adv, 0.2, 0.0);
    CHECK(res.objective == doctest::Approx(1.2).epsilon(1e-12));
    // Clipped branch active: no gradient.
    for (double v : res.gradient.values()) CHECK(v == 0.0);
}

TEST_CASE("analytic gradient matches central differences") {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        worst = std::max(worst, fixture::gradient_check(seed, seed % 2 ? 0.0 : 0.1));
    CHECK(worst < 1e-5);
}

TEST_CASE("k3 estimator") {
    const auto t = one_hot_task({2}, 8);
    const auto policy = SoftmaxPolicy::zeros(11, 8);
    const std::vector<int> actions{2};
    CHECK(kl_k3(policy, policy, actions, t) == 0.0);

    // pi(2) = 1/9 under policy, 2/9 under ref, so u = 2.
    auto ref = policy;
    ref.weights()(2, 2) = std::log(16.0 / 7.0);
    CHECK(kl_k3(policy, ref, actions, t) == doctest::Approx(0.3068528194400546).epsilon(1e-12));

    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto in = random_instance(1000 + s, 3, 1, 2);
        CHECK(kl_k3(in.current, in.ref, in.groups[0].responses[0].actions, in.tasks[0]) >= 0.0);
    }
}

TEST_CASE("degenerate groups produce no gradient") {
    auto in = random_instance(8);
    const auto tasks = pointers(in.tasks);
    std::vector<std::vector<double>> adv;
    for (const auto& g : in.groups) adv.push_back(reweighted_advantages(RewardGroup(std::vector<std::uint8_t>(g.responses.size(), 1)), AdvantageScheme::vanilla()));
    const auto res = surrogate_loss_and_grad(in.current, nullptr, in.groups, tasks, adv, 0.2, 0.0);
    for (double v : res.gradient.values()) CHECK(v == 0.0);
    CHECK(update(in.current, res.gradient, 50.0) == in.current);
}

TEST_CASE("ascent step") {
    const auto in = random_instance(11);
    const auto tasks = pointers(in.tasks);
    const Matrix zero(in.current.feature_width(), in.current.action_count());
    CHECK(update(in.current, zero, 1.0) == in.current);
    const auto res = surrogate_loss_and_grad(in.current, nullptr, in.groups, tasks, in.adv, 0.2, 0.0);
    CHECK(update(in.current, res.gradient, 0.0) == in.current);

    for (std::uint64_t seed = 20; seed < 30; ++seed) {
        const auto inst = random_instance(seed);
        const auto ptrs = pointers(inst.tasks);
        const auto before = surrogate_loss_and_grad(inst.current, nullptr, inst.groups, ptrs, inst.adv, 0.2, 0.0);
        const auto stepped = update(inst.current, before.gradient, 1e-3);
        const auto after = surrogate_loss_and_grad(stepped, nullptr, inst.groups, ptrs, inst.adv, 0.2, 0.0);
        CHECK(after.objective >= before.objective);
    }
    CHECK_THROWS_AS(update(in.current, Matrix(2, 2), 1.0), DomainError);
}

TEST_CASE("non-finite old log-probability names the task") {
    auto in = random_instance(4);
    in.groups[1].responses[0].old_log_probs[0] = -INFINITY;
    const auto tasks = pointers(in.tasks);
    try {
        surrogate_loss_and_grad(in.current, nullptr, in.groups, tasks, in.adv, 0.2, 0.0);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("task 1") != std::string::npos);
    }
}

TEST_CASE("checkpoint round-trip") {
    const auto in = random_instance(2);
    std::stringstream ss;
    write_policy(ss, in.current);
    CHECK(read_policy(ss) == in.current);
    std::istringstream bad("3 4\n1.0\n0 0\n");
    CHECK_THROWS_AS(read_policy(bad), ConfigError);
}
