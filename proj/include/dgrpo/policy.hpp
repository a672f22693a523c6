#pragma once

#include "dgrpo/advantage.hpp"
#include "dgrpo/matrix.hpp"
#include "dgrpo/taskbank.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dgrpo {

/// Linear-softmax policy over K symbols plus SUBMIT (action index K).
/// pi(a | phi) = softmax(phi * W / temperature).
class SoftmaxPolicy {
public:
    SoftmaxPolicy() = default;
    SoftmaxPolicy(Matrix weights, double temperature);

    static SoftmaxPolicy zeros(std::size_t feature_width, std::size_t alphabet_size, double temperature = 1.0);

    const Matrix& weights() const { return weights_; }
    Matrix& weights() { return weights_; }
    double temperature() const { return temperature_; }

    std::size_t feature_width() const { return weights_.rows(); }
    std::size_t action_count() const { return weights_.cols(); }
    int submit_action() const { return static_cast<int>(weights_.cols()) - 1; }

    std::vector<double> logits(std::span<const double> features) const;
    std::vector<double> log_probs(std::span<const double> features) const;
    std::vector<double> probs(std::span<const double> features) const;

    bool operator==(const SoftmaxPolicy&) const = default;

private:
    Matrix weights_;
    double temperature_ = 1.0;
};

/// One sampled response. `actions` holds the emitted actions in order; a SUBMIT,
/// if present, is always the last entry. Without SUBMIT the response ends at the
/// task horizon L(d), which counts as submission.
struct Response {
    std::vector<int> actions;
    std::vector<double> old_log_probs;

    double log_prob() const;
    // Symbols emitted before SUBMIT.
    std::vector<int> symbols(int submit_action) const;
    std::size_t length(int submit_action) const;
};

struct RolloutGroupSample {
    std::uint64_t task_id = 0;
    std::vector<Response> responses;
    RewardGroup rewards{{0}};
};

double log_prob(const SoftmaxPolicy& policy, std::span<const double> features, int action);
double sequence_log_prob(const SoftmaxPolicy& policy, const TaskRecord& task, std::span<const int> actions);
double mean_step_entropy(const SoftmaxPolicy& policy, const TaskRecord& task, std::span<const int> actions);

/// G responses; member i draws from a stream seeded by (seed, task id, i).
RolloutGroupSample sample_group(const SoftmaxPolicy& policy, const TaskRecord& task, std::size_t group_size,
                                std::uint64_t seed, double advantage_epsilon = kDefaultAdvantageEpsilon);

/// Argmax decoding; exact ties go to the lowest action index.
std::vector<int> greedy_decode(const SoftmaxPolicy& policy, const TaskRecord& task);

/// u - log u - 1 with u = pi_ref(o) / pi(o) at the sequence level.
double kl_k3(const SoftmaxPolicy& policy, const SoftmaxPolicy& ref, std::span<const int> actions,
             const TaskRecord& task);

struct SurrogateResult {
    double objective = 0.0;
    Matrix gradient;
    double mean_kl = 0.0;
};

/// Clipped group-relative surrogate with sequence-level importance ratios against
/// the log-probabilities recorded at sampling time, minus kl_beta times the k3
/// estimate. Returns the objective and its exact gradient w.r.t. the weights.
/// `tasks[g]` must be the task of `batch[g]`; `advantages[g]` holds one value per response.
SurrogateResult surrogate_loss_and_grad(const SoftmaxPolicy& policy, const SoftmaxPolicy* ref,
                                        std::span<const RolloutGroupSample> batch,
                                        std::span<const TaskRecord* const> tasks,
                                        std::span<const std::vector<double>> advantages, double clip_eps,
                                        double kl_beta);

/// Gradient ascent step: W + lr * gradient.
SoftmaxPolicy update(const SoftmaxPolicy& policy, const Matrix& gradient, double learning_rate);

void write_policy(std::ostream& os, const SoftmaxPolicy& policy);
SoftmaxPolicy read_policy(std::istream& is);
void save_policy(const std::string& path, const SoftmaxPolicy& policy);
SoftmaxPolicy load_policy(const std::string& path);

} // namespace dgrpo
