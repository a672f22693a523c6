#include "dgrpo/curation.hpp"

#include "dgrpo/errors.hpp"
#include "dgrpo/parallel.hpp"
#include "dgrpo/rng.hpp"
#include "dgrpo/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace dgrpo {

void CurationConfig::validate() const {
    if (ks.empty()) throw ConfigError("curation.ks must not be empty");
    for (auto k : ks)
        if (k < 1) throw ConfigError("curation.ks entries must be >= 1");
    for (const auto* band : {&d1_band, &d2_band})
        if (!(band->lower >= 0.0 && band->upper <= 1.0 && band->lower <= band->upper))
            throw ConfigError("curation bands require 0 <= lower <= upper <= 1");
    if (histogram_bins < 2) throw ConfigError("curation.histogram_bins must be >= 2");
}

std::string_view to_string(Tier tier) {
    switch (tier) {
    case Tier::simple: return "simple";
    case Tier::moderate: return "moderate";
    case Tier::hard: return "hard";
    case Tier::unsolvable: return "unsolvable";
    case Tier::unrated: return "unrated";
    }
    return "unrated";
}

Tier classify_tier(const TaskRecord& task, const CurationConfig& cfg) {
    if (!task.accuracy_estimate) return Tier::unrated;
    const double p = *task.accuracy_estimate;
    if (p > cfg.d1_band.upper) return Tier::simple;
    if (cfg.d2_band.contains(p)) return Tier::hard;
    if (p < cfg.d2_band.lower) return Tier::unsolvable;
    return Tier::moderate;
}

MergedAccuracy merged_accuracy(const TaskRecord& task, const SoftmaxPolicy& base, const CurationConfig& cfg) {
    cfg.validate();
    MergedAccuracy out;
    std::map<std::size_t, std::uint64_t> repeats;
    std::size_t correct = 0;
    for (auto k : cfg.ks) {
        const std::uint64_t rep = repeats[k]++;
        const auto seed = derive_seed({cfg.seed, task.id, k, rep});
        const auto group = sample_group(base, task, k, seed);
        std::size_t hits = 0;
        for (auto r : group.rewards.rewards()) hits += r;
        out.per_k.push_back({k, hits});
        correct += hits;
        out.total += k;
    }
    out.p_hat = static_cast<double>(correct) / static_cast<double>(out.total);
    return out;
}

BankAccuracy estimate_bank(std::span<const TaskRecord> bank, const SoftmaxPolicy& base, const CurationConfig& cfg) {
    cfg.validate();
    std::vector<MergedAccuracy> results(bank.size());
    parallel_for(bank.size(), [&](std::size_t i) { results[i] = merged_accuracy(bank[i], base, cfg); });

    BankAccuracy out;
    out.tasks.assign(bank.begin(), bank.end());
    out.per_k_accuracy.assign(cfg.ks.size(), std::vector<double>(bank.size()));
    for (std::size_t i = 0; i < bank.size(); ++i) {
        out.tasks[i].accuracy_estimate = results[i].p_hat;
        out.tasks[i].rollout_count = results[i].total;
        for (std::size_t j = 0; j < cfg.ks.size(); ++j)
            out.per_k_accuracy[j][i] =
                static_cast<double>(results[i].per_k[j].correct) / static_cast<double>(results[i].per_k[j].k);
    }
    return out;
}

std::vector<HistogramBin> build_histogram(std::span<const double> accuracies, std::size_t bins) {
    if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
    std::vector<HistogramBin> hist(bins);
    const auto nb = static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        hist[i].lo = static_cast<double>(i) / nb;
        hist[i].hi = static_cast<double>(i + 1) / nb;
    }
    for (double p : accuracies) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("histogram: accuracy outside [0, 1]");
        auto idx = static_cast<std::size_t>(std::floor(p * nb));
        idx = std::min(idx, bins - 1);
        // Keep the bin assignment consistent with the printed edges.
        if (idx > 0 && p < hist[idx].lo) --idx;
        if (idx + 1 < bins && p >= hist[idx].hi) ++idx;
        hist[idx].count++;
    }
    return hist;
}

void write_histogram_csv(std::ostream& os, std::span<const HistogramBin> hist) {
    os << "bin_lo,bin_hi,count\n";
    for (const auto& b : hist) os << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << '\n';
}

void write_histogram_svg(std::ostream& os, std::span<const HistogramBin> hist, const std::string& title) {
    constexpr int width = 640;
    constexpr int height = 360;
    constexpr int margin = 40;
    std::size_t peak = 1;
    for (const auto& b : hist) peak = std::max(peak, b.count);
    const double plot_w = width - 2.0 * margin;
    const double plot_h = height - 2.0 * margin;
    const double bar_w = hist.empty() ? 0.0 : plot_w / static_cast<double>(hist.size());

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    for (std::size_t i = 0; i < hist.size(); ++i) {
        const double h = plot_h * static_cast<double>(hist[i].count) / static_cast<double>(peak);
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"#4a7ab5\" stroke=\"white\"/>\n",
                      margin + bar_w * static_cast<double>(i), margin + plot_h - h, bar_w, h);
        os << buf;
    }
    os << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
       << height - margin << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << margin << "\" y=\"" << height - 20 << "\" font-size=\"11\">0</text>\n";
    os << "<text x=\"" << width - margin << "\" y=\"" << height - 20
       << "\" font-size=\"11\" text-anchor=\"end\">1</text>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"" << height - 8
       << "\" font-size=\"11\" text-anchor=\"middle\">empirical accuracy</text>\n";
    os << "</svg>\n";
}

CuratedDatasets filter_stages(std::span<const TaskRecord> records, const CurationConfig& cfg) {
    cfg.validate();
    CuratedDatasets out;
    for (const auto& r : records) {
        if (!r.accuracy_estimate)
            throw DomainError("filter_stages: task " + std::to_string(r.id) + " has no accuracy estimate");
        const double p = *r.accuracy_estimate;
        const bool in_d1 = cfg.d1_band.contains(p);
        const bool in_d2 = cfg.d2_band.contains(p);
        if (in_d1) out.d1.push_back(r);
        if (in_d2) out.d2.push_back(r);
        if (in_d1 || in_d2) continue;
        if (p > cfg.d1_band.upper) out.removed_simple.push_back(r);
        else if (p < cfg.d2_band.lower) out.removed_unsolvable.push_back(r);
    }
    return out;
}

} // namespace dgrpo
