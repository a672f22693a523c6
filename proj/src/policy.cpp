#include "dgrpo/policy.hpp"

#include "dgrpo/errors.hpp"
#include "dgrpo/rng.hpp"
#include "dgrpo/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dgrpo {

SoftmaxPolicy::SoftmaxPolicy(Matrix weights, double temperature)
    : weights_(std::move(weights)), temperature_(temperature) {
    if (!(temperature_ > 0.0) || !std::isfinite(temperature_))
        throw ConfigError("policy temperature must be a finite value > 0");
    if (weights_.rows() == 0 || weights_.cols() < 2) throw DomainError("policy weights must be at least 1 x 2");
    for (double w : weights_.values())
        if (!std::isfinite(w)) throw NumericalError("policy weights must be finite");
}

SoftmaxPolicy SoftmaxPolicy::zeros(std::size_t feature_width, std::size_t alphabet_size, double temperature) {
    return SoftmaxPolicy(Matrix(feature_width, alphabet_size + 1), temperature);
}

std::vector<double> SoftmaxPolicy::logits(std::span<const double> features) const {
    if (features.size() != weights_.rows())
        throw DomainError("feature width " + std::to_string(features.size()) + " does not match policy width " +
                          std::to_string(weights_.rows()));
    std::vector<double> z(weights_.cols(), 0.0);
    for (std::size_t f = 0; f < features.size(); ++f) {
        const double x = features[f];
        if (x == 0.0) continue;
        const auto row = weights_.row(f);
        for (std::size_t c = 0; c < z.size(); ++c) z[c] += x * row[c];
    }
    for (auto& v : z) v /= temperature_;
    return z;
}

std::vector<double> SoftmaxPolicy::log_probs(std::span<const double> features) const {
    auto z = logits(features);
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    const double lse = m + std::log(s);
    for (auto& v : z) v -= lse;
    return z;
}

std::vector<double> SoftmaxPolicy::probs(std::span<const double> features) const {
    auto lp = log_probs(features);
    for (auto& v : lp) v = std::exp(v);
    return lp;
}

double Response::log_prob() const {
    double s = 0.0;
    for (double v : old_log_probs) s += v;
    return s;
}

std::vector<int> Response::symbols(int submit_action) const {
    std::vector<int> out = actions;
    if (!out.empty() && out.back() == submit_action) out.pop_back();
    return out;
}

std::size_t Response::length(int submit_action) const { return symbols(submit_action).size(); }

double log_prob(const SoftmaxPolicy& policy, std::span<const double> features, int action) {
    if (action < 0 || static_cast<std::size_t>(action) >= policy.action_count())
        throw DomainError("action " + std::to_string(action) + " outside [0, " +
                          std::to_string(policy.action_count() - 1) + "]");
    return policy.log_probs(features)[static_cast<std::size_t>(action)];
}

namespace {

void check_actions(const SoftmaxPolicy& policy, const TaskRecord& task, std::span<const int> actions) {
    if (actions.size() > task.length())
        throw DomainError("response longer than the task horizon (task " + std::to_string(task.id) + ")");
    for (std::size_t t = 0; t + 1 < actions.size(); ++t)
        if (actions[t] == policy.submit_action())
            throw DomainError("SUBMIT must be the last action (task " + std::to_string(task.id) + ")");
}

} // namespace

double sequence_log_prob(const SoftmaxPolicy& policy, const TaskRecord& task, std::span<const int> actions) {
    check_actions(policy, task, actions);
    double s = 0.0;
    for (std::size_t t = 0; t < actions.size(); ++t) s += log_prob(policy, task.step_features(t), actions[t]);
    return s;
}

double mean_step_entropy(const SoftmaxPolicy& policy, const TaskRecord& task, std::span<const int> actions) {
    if (actions.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t t = 0; t < actions.size(); ++t) {
        const auto lp = policy.log_probs(task.step_features(t));
        double h = 0.0;
        for (double v : lp) h -= std::exp(v) * v;
        total += h;
    }
    return total / static_cast<double>(actions.size());
}

RolloutGroupSample sample_group(const SoftmaxPolicy& policy, const TaskRecord& task, std::size_t group_size,
                                std::uint64_t seed, double advantage_epsilon) {
    if (group_size < 1) throw ConfigError("group size must be >= 1");
    const int submit = policy.submit_action();
    RolloutGroupSample out;
    out.task_id = task.id;
    out.responses.resize(group_size);
    std::vector<std::uint8_t> rewards(group_size);
    for (std::size_t i = 0; i < group_size; ++i) {
        Rng rng(derive_seed({seed, task.id, i}));
        auto& resp = out.responses[i];
        for (std::size_t t = 0; t < task.length(); ++t) {
            const auto lp = policy.log_probs(task.step_features(t));
            const double u = rng.uniform();
            double cdf = 0.0;
            std::size_t a = lp.size();
            for (std::size_t c = 0; c < lp.size(); ++c) {
                cdf += std::exp(lp[c]);
                if (u < cdf) {
                    a = c;
                    break;
                }
            }
            // Rounding left the cdf just below u: take the last action with mass.
            if (a == lp.size()) {
                a = lp.size() - 1;
                while (a > 0 && std::exp(lp[a]) == 0.0) --a;
            }
            resp.actions.push_back(static_cast<int>(a));
            resp.old_log_probs.push_back(lp[a]);
            if (static_cast<int>(a) == submit) break;
        }
        rewards[i] = static_cast<std::uint8_t>(verify(resp.symbols(submit), task));
    }
    out.rewards = RewardGroup(std::move(rewards), advantage_epsilon);
    return out;
}

std::vector<int> greedy_decode(const SoftmaxPolicy& policy, const TaskRecord& task) {
    std::vector<int> actions;
    for (std::size_t t = 0; t < task.length(); ++t) {
        const auto z = policy.logits(task.step_features(t));
        const auto a = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
        actions.push_back(a);
        if (a == policy.submit_action()) break;
    }
    return actions;
}

double kl_k3(const SoftmaxPolicy& policy, const SoftmaxPolicy& ref, std::span<const int> actions,
             const TaskRecord& task) {
    if (!policy.weights().same_shape(ref.weights()))
        throw DomainError("kl_k3: policy and reference have different shapes");
    const double log_u = sequence_log_prob(ref, task, actions) - sequence_log_prob(policy, task, actions);
    const double u = std::exp(log_u);
    if (!(u > 0.0) || !std::isfinite(u))
        throw NumericalError("kl_k3: degenerate probability ratio on task " + std::to_string(task.id));
    return u - log_u - 1.0;
}

namespace {

// out += coeff * d log pi(actions) / dW
void accumulate_score(const SoftmaxPolicy& policy, const TaskRecord& task, std::span<const int> actions,
                      double coeff, Matrix& out) {
    const double scale = coeff / policy.temperature();
    for (std::size_t t = 0; t < actions.size(); ++t) {
        const auto phi = task.step_features(t);
        auto p = policy.probs(phi);
        for (auto& v : p) v = -v;
        p[static_cast<std::size_t>(actions[t])] += 1.0;
        for (std::size_t f = 0; f < phi.size(); ++f) {
            if (phi[f] == 0.0) continue;
            auto row = out.row(f);
            const double s = scale * phi[f];
            for (std::size_t c = 0; c < row.size(); ++c) row[c] += s * p[c];
        }
    }
}

} // namespace

SurrogateResult surrogate_loss_and_grad(const SoftmaxPolicy& policy, const SoftmaxPolicy* ref,
                                        std::span<const RolloutGroupSample> batch,
                                        std::span<const TaskRecord* const> tasks,
                                        std::span<const std::vector<double>> advantages, double clip_eps,
                                        double kl_beta) {
    if (!(clip_eps > 0.0)) throw ConfigError("clip_eps must be > 0");
    if (!(kl_beta >= 0.0)) throw ConfigError("kl_beta must be >= 0");
    if (kl_beta > 0.0 && ref == nullptr) throw ConfigError("kl_beta > 0 requires a reference policy");
    if (batch.size() != tasks.size() || batch.size() != advantages.size())
        throw DomainError("surrogate: batch, tasks and advantages must have equal length");

    SurrogateResult res;
    res.gradient = Matrix(policy.feature_width(), policy.action_count());
    if (batch.empty()) return res;

    const double n_groups = static_cast<double>(batch.size());
    double kl_total = 0.0;
    std::size_t kl_count = 0;
    for (std::size_t g = 0; g < batch.size(); ++g) {
        const auto& group = batch[g];
        const TaskRecord& task = *tasks[g];
        if (task.id != group.task_id) throw DomainError("surrogate: task/group id mismatch");
        if (advantages[g].size() != group.responses.size())
            throw DomainError("surrogate: advantage count does not match group size");
        const double scale = 1.0 / (n_groups * static_cast<double>(group.responses.size()));

        for (std::size_t i = 0; i < group.responses.size(); ++i) {
            const auto& resp = group.responses[i];
            const double adv = advantages[g][i];
            const double old_lp = resp.log_prob();
            const double new_lp = sequence_log_prob(policy, task, resp.actions);
            const double ratio = std::exp(new_lp - old_lp);
            if (!std::isfinite(old_lp) || !std::isfinite(ratio))
                throw NumericalError("non-finite importance ratio on task " + std::to_string(task.id));

            const double unclipped = ratio * adv;
            const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * adv;
            // Ties take the unclipped branch.
            const bool unclipped_active = unclipped <= clipped;
            res.objective += scale * std::min(unclipped, clipped);
            double coeff = unclipped_active ? scale * adv * ratio : 0.0;

            if (kl_beta > 0.0) {
                const double log_u = sequence_log_prob(*ref, task, resp.actions) - new_lp;
                const double u = std::exp(log_u);
                if (!(u > 0.0) || !std::isfinite(u))
                    throw NumericalError("non-finite KL ratio on task " + std::to_string(task.id));
                const double k3 = u - log_u - 1.0;
                res.objective -= kl_beta * scale * k3;
                coeff -= kl_beta * scale * (1.0 - u);
                kl_total += k3;
                ++kl_count;
            }
            if (coeff != 0.0) accumulate_score(policy, task, resp.actions, coeff, res.gradient);
        }
    }
    if (kl_count > 0) res.mean_kl = kl_total / static_cast<double>(kl_count);
    return res;
}

SoftmaxPolicy update(const SoftmaxPolicy& policy, const Matrix& gradient, double learning_rate) {
    if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (!policy.weights().same_shape(gradient)) throw DomainError("update: gradient shape mismatch");
    Matrix w = policy.weights();
    auto wv = w.values();
    const auto gv = gradient.values();
    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] += learning_rate * gv[i];
    return SoftmaxPolicy(std::move(w), policy.temperature());
}

void write_policy(std::ostream& os, const SoftmaxPolicy& policy) {
    const auto& w = policy.weights();
    os << w.rows() << ' ' << w.cols() << '\n' << format_double(policy.temperature()) << '\n';
    for (std::size_t r = 0; r < w.rows(); ++r) {
        for (std::size_t c = 0; c < w.cols(); ++c) os << (c ? " " : "") << format_double(w(r, c));
        os << '\n';
    }
}

SoftmaxPolicy read_policy(std::istream& is) {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double temperature = 0.0;
    if (!(is >> rows >> cols >> temperature)) throw ConfigError("policy checkpoint: malformed header");
    Matrix w(rows, cols);
    for (auto& v : w.values())
        if (!(is >> v)) throw ConfigError("policy checkpoint: truncated weights");
    return SoftmaxPolicy(std::move(w), temperature);
}

void save_policy(const std::string& path, const SoftmaxPolicy& policy) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write_policy(os, policy);
    if (!os) throw IoError("failed writing " + path);
}

SoftmaxPolicy load_policy(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    return read_policy(is);
}

} // namespace dgrpo
