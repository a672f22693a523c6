#pragma once

// Seeded random policies, tasks and rollout batches shared by the gradient tests
// and the acceptance run.

#include "dgrpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace fixture {

using namespace dgrpo;

// Random dense task and policy, for gradient checks.
struct Instance {
    std::vector<TaskRecord> tasks;
    SoftmaxPolicy old;
    SoftmaxPolicy current;
    SoftmaxPolicy ref;
    std::vector<RolloutGroupSample> groups;
    std::vector<std::vector<double>> adv;
};

inline Instance random_instance(std::uint64_t seed, std::size_t k = 3, std::size_t groups = 3, std::size_t g = 4) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 0.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t width = k + kHintSlots;
    Instance in;
    Matrix w(width, k + 1);
    for (auto& v : w.values()) v = normal(gen);
    in.old = SoftmaxPolicy(w, 1.0 + unit(gen));
    Matrix w2 = w;
    for (auto& v : w2.values()) v += 0.3 * normal(gen);
    in.current = SoftmaxPolicy(w2, in.old.temperature());
    Matrix w3 = w;
    for (auto& v : w3.values()) v += normal(gen);
    in.ref = SoftmaxPolicy(w3, in.old.temperature());

    for (std::size_t i = 0; i < groups; ++i) {
        TaskRecord t;
        t.id = i;
        const std::size_t len = 1 + gen() % 3;
        t.target.resize(len);
        t.features = Matrix(len, width);
        for (std::size_t r = 0; r < len; ++r) {
            t.target[r] = static_cast<int>(gen() % k);
            for (auto& v : t.features.row(r)) v = unit(gen);
        }
        in.tasks.push_back(std::move(t));
    }
    for (std::size_t i = 0; i < groups; ++i) {
        in.groups.push_back(sample_group(in.old, in.tasks[i], g, seed * 31 + i));
        std::vector<double> a(g);
        for (auto& v : a) v = normal(gen) * 2.0;
        in.adv.push_back(a);
    }
    return in;
}

inline std::vector<const TaskRecord*> pointers(const std::vector<TaskRecord>& tasks) {
    std::vector<const TaskRecord*> out;
    for (const auto& t : tasks) out.push_back(&t);
    return out;
}

// Worst relative error between the analytic surrogate gradient and central
// differences with step h, over every weight of one seeded instance.
inline double gradient_check(std::uint64_t seed, double kl_beta, double h = 1e-5) {
    const auto in = random_instance(seed);
    const auto tasks = pointers(in.tasks);
    const SoftmaxPolicy* ref = kl_beta > 0 ? &in.ref : nullptr;
    auto objective = [&](const Matrix& w) {
        return surrogate_loss_and_grad(SoftmaxPolicy(w, in.current.temperature()), ref, in.groups, tasks, in.adv,
                                       0.2, kl_beta)
            .objective;
    };
    const auto res = surrogate_loss_and_grad(in.current, ref, in.groups, tasks, in.adv, 0.2, kl_beta);
    double worst = 0.0;
    for (std::size_t i = 0; i < res.gradient.size(); ++i) {
        Matrix plus = in.current.weights();
        Matrix minus = in.current.weights();
        plus.values()[i] += h;
        minus.values()[i] -= h;
        const double numeric = (objective(plus) - objective(minus)) / (2 * h);
        const double analytic = res.gradient.values()[i];
        const double scale = std::max(std::abs(numeric), std::abs(analytic));
        worst = std::max(worst, scale < 1e-8 ? std::abs(numeric - analytic) : std::abs(numeric - analytic) / scale);
    }
    return worst;
}

} // namespace fixture
