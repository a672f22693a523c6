#pragma once

#include "dgrpo/policy.hpp"
#include "dgrpo/taskbank.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dgrpo {

/// Closed accuracy interval [lower, upper].
struct AccuracyBand {
    double lower = 0.0;
    double upper = 1.0;

    bool contains(double p) const { return p >= lower && p <= upper; }
    bool operator==(const AccuracyBand&) const = default;
};

struct CurationConfig {
    std::vector<std::size_t> ks{6, 12, 16, 18, 24, 32, 36, 48, 72, 96};
    AccuracyBand d1_band{0.10, 0.87};
    AccuracyBand d2_band{0.084, 0.25};
    std::size_t histogram_bins = 20;
    std::uint64_t seed = 1;

    void validate() const;
};

// Disjoint reporting tiers derived from an offline accuracy estimate:
// simple (> d1.upper), moderate (d2.upper, d1.upper], hard [d2.lower, d2.upper],
// unsolvable (< d2.lower). Tasks without an estimate are unrated.
enum class Tier { simple, moderate, hard, unsolvable, unrated };

std::string_view to_string(Tier tier);
Tier classify_tier(const TaskRecord& task, const CurationConfig& cfg);

struct KAccuracy {
    std::size_t k = 0;
    std::size_t correct = 0;
};

struct MergedAccuracy {
    double p_hat = 0.0;
    std::size_t total = 0;
    std::vector<KAccuracy> per_k;  // in cfg.ks order
};

/// Pools k independent responses for every k in cfg.ks and returns the overall
/// hit rate. Each k batch is seeded from (cfg.seed, task id, k, repeat index of k),
/// so the result does not depend on the order of ks.
MergedAccuracy merged_accuracy(const TaskRecord& task, const SoftmaxPolicy& base, const CurationConfig& cfg);

struct BankAccuracy {
    std::vector<TaskRecord> tasks;                  // copies with accuracy_estimate / rollout_count set
    std::vector<std::vector<double>> per_k_accuracy;  // [k index][task index]
};

/// merged_accuracy over a whole bank (parallel across tasks).
BankAccuracy estimate_bank(std::span<const TaskRecord> bank, const SoftmaxPolicy& base, const CurationConfig& cfg);

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

/// Equal-width bins over [0, 1]; bins are [lo, hi) except the last, which is closed.
std::vector<HistogramBin> build_histogram(std::span<const double> accuracies, std::size_t bins);

void write_histogram_csv(std::ostream& os, std::span<const HistogramBin> hist);
void write_histogram_svg(std::ostream& os, std::span<const HistogramBin> hist, const std::string& title);

struct CuratedDatasets {
    std::vector<TaskRecord> d1;
    std::vector<TaskRecord> d2;
    std::vector<TaskRecord> removed_simple;
    std::vector<TaskRecord> removed_unsolvable;
};

/// Band filtering with closed intervals. Records may land in both d1 and d2.
CuratedDatasets filter_stages(std::span<const TaskRecord> records, const CurationConfig& cfg);

} // namespace dgrpo
