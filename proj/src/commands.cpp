#include "dgrpo/commands.hpp"

#include "dgrpo/errors.hpp"
#include "dgrpo/text.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

namespace fs = std::filesystem;

namespace dgrpo {

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    return os;
}

void write_histogram_files(const fs::path& stem, std::span<const double> acc, std::size_t bins,
                           const std::string& title) {
    const auto hist = build_histogram(acc, bins);
    {
        auto os = open_out(fs::path(stem.string() + ".csv"));
        write_histogram_csv(os, hist);
    }
    auto os = open_out(fs::path(stem.string() + ".svg"));
    write_histogram_svg(os, hist, title);
}

std::string fmt_acc(double x) {
    if (std::isnan(x)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

void print_table(std::ostream& log, const EvalTable& t) {
    const std::pair<const char*, const TierAccuracy*> rows[] = {
        {"simple", &t.simple},         {"moderate", &t.moderate}, {"hard", &t.hard},
        {"unsolvable", &t.unsolvable}, {"unrated", &t.unrated},   {"overall", &t.overall},
    };
    for (const auto& [name, a] : rows)
        if (a->count) log << "  " << name << ": " << fmt_acc(a->accuracy()) << " (" << a->count << " tasks)\n";
}

SoftmaxPolicy resolve_base(const ExperimentConfig& cfg, const std::string& d1_path, const std::string& base_path,
                           std::size_t width) {
    if (!base_path.empty()) return load_policy(base_path);
    if (!cfg.base_checkpoint.empty()) return load_policy(cfg.base_checkpoint);
    const auto sibling = fs::path(d1_path).parent_path() / "base_policy.ckpt";
    if (fs::exists(sibling)) return load_policy(sibling.string());
    return SoftmaxPolicy::zeros(width, width - kHintSlots, cfg.trainer.temperature);
}

struct CurationOutput {
    SoftmaxPolicy base;
    std::vector<TaskRecord> scored;
    CuratedDatasets sets;
};

CurationOutput curate_into(const ExperimentConfig& cfg, const std::vector<TaskRecord>& bank,
                           const std::string& out_dir, std::ostream& log) {
    if (bank.empty()) throw ConfigError("curate: bank is empty");
    ensure_dir(out_dir);
    const fs::path dir(out_dir);

    SoftmaxPolicy base = cfg.base_checkpoint.empty() ? train_base_policy(bank, cfg.trainer, cfg.base_steps)
                                                     : load_policy(cfg.base_checkpoint);
    save_policy((dir / "base_policy.ckpt").string(), base);

    auto scored = estimate_bank(bank, base, cfg.curation);
    auto sets = filter_stages(scored.tasks, cfg.curation);

    save_bank((dir / "scored.jsonl").string(), scored.tasks);
    save_bank((dir / "d1.jsonl").string(), sets.d1);
    save_bank((dir / "d2.jsonl").string(), sets.d2);
    save_bank((dir / "removed_simple.jsonl").string(), sets.removed_simple);
    save_bank((dir / "removed_unsolvable.jsonl").string(), sets.removed_unsolvable);

    std::vector<double> merged;
    for (const auto& t : scored.tasks) merged.push_back(*t.accuracy_estimate);
    write_histogram_files(dir / "hist_merged", merged, cfg.curation.histogram_bins, "merged accuracy");
    std::map<std::size_t, int> seen;
    for (std::size_t j = 0; j < cfg.curation.ks.size(); ++j) {
        const auto k = cfg.curation.ks[j];
        std::string stem = "hist_k" + std::to_string(k);
        if (seen[k]++) stem += "_" + std::to_string(seen[k] - 1);
        write_histogram_files(dir / stem, scored.per_k_accuracy[j], cfg.curation.histogram_bins,
                              "accuracy, k = " + std::to_string(k));
    }

    log << "curated " << bank.size() << " prompts: " << sets.d1.size() << " D1 prompts, " << sets.d2.size()
        << " D2 prompts (removed " << sets.removed_simple.size() << " simple, " << sets.removed_unsolvable.size()
        << " unsolvable)\n";
    return {std::move(base), std::move(scored.tasks), std::move(sets)};
}

} // namespace

void cmd_genbank(const ExperimentConfig& cfg, const std::string& out_path, std::ostream& log) {
    const auto bank = generate_bank(cfg.bank);
    save_bank(out_path, bank);
    log << "wrote " << bank.size() << " tasks to " << out_path << "\n";
    const auto counts = mix_counts(cfg.bank.n, cfg.bank.mix);
    for (std::size_t i = 0; i < counts.size(); ++i)
        log << "  d=" << format_double(cfg.bank.mix[i].difficulty) << ": " << counts[i] << " tasks (L="
            << target_length(cfg.bank.mix[i].difficulty, cfg.bank.l_min, cfg.bank.l_max) << ")\n";
}

CuratedDatasets cmd_curate(const ExperimentConfig& cfg, const std::string& bank_path, const std::string& out_dir,
                           std::ostream& log) {
    const auto bank = load_bank(bank_path);
    return curate_into(cfg, bank, out_dir, log).sets;
}

TwoStageResult cmd_train(const ExperimentConfig& cfg, const std::string& d1_path, const std::string& d2_path,
                         const std::string& out_dir, const std::string& base_path, std::ostream& log) {
    CuratedDatasets sets;
    sets.d1 = load_bank(d1_path);
    sets.d2 = load_bank(d2_path);
    if (sets.d1.empty()) throw ConfigError("stage 1: dataset " + d1_path + " is empty");
    if (sets.d2.empty()) throw ConfigError("stage 2: dataset " + d2_path + " is empty");
    const auto base = resolve_base(cfg, d1_path, base_path, sets.d1.front().feature_width());
    const auto& tcfg = cfg.trainer;
    auto result = run_two_stage(base, sets, tcfg, cfg.curation);

    ensure_dir(out_dir);
    const fs::path dir(out_dir);
    {
        auto os = open_out(dir / "metrics.csv");
        write_metrics_csv(os, result.metrics);
    }
    save_policy((dir / "stage1.ckpt").string(), result.stage1_policy);
    save_policy((dir / "final.ckpt").string(), result.final_policy);
    log << "trained " << tcfg.stage1_steps << " stage-1 steps on " << sets.d1.size() << " prompts and "
        << tcfg.stage2_steps << " stage-2 steps on " << sets.d2.size() << " prompts"
        << (tcfg.hint_stage2 ? " (with difficulty hint)" : "") << "\n";
    if (!result.metrics.empty())
        log << "final mean reward " << fmt_acc(result.metrics.back().mean_reward) << "\n";
    return result;
}

EvalTable cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint, const std::string& bank_path,
                   const std::string& out_csv, std::ostream& log) {
    const auto policy = load_policy(checkpoint);
    const auto bank = load_bank(bank_path);
    const auto table = evaluate(policy, bank, cfg.eval_samples, cfg.seed, cfg.curation);
    log << "greedy accuracy on " << bank.size() << " tasks\n";
    print_table(log, table);
    if (!out_csv.empty()) {
        auto os = open_out(out_csv);
        write_eval_csv(os, table);
    }
    return table;
}

SweepGrid load_grid(const std::string& path) {
    SweepGrid grid;
    if (path.empty()) return grid;
    std::ifstream is(path);
    if (!is) throw IoError("cannot open grid file " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("grid file " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("grid file must hold an object");
    for (const auto& item : doc.items()) {
        const auto& key = item.key();
        const auto& v = item.value();
        if (!v.is_array() || v.empty()) throw ConfigError("grid key '" + key + "' must be a non-empty list");
        if (key == "families") {
            grid.families.clear();
            for (const auto& f : v) {
                const auto parsed = f.is_string() ? parse_family(f.get<std::string>()) : std::nullopt;
                if (!parsed) throw ConfigError("grid: unknown reweight family " + f.dump());
                grid.families.push_back(*parsed);
            }
        } else if (key == "std_norm" || key == "hint") {
            auto& dst = key == "hint" ? grid.hint : grid.std_norm;
            dst.clear();
            for (const auto& b : v) {
                if (!b.is_boolean()) throw ConfigError("grid key '" + key + "' must list booleans");
                dst.push_back(b.get<bool>());
            }
        } else {
            throw ConfigError("unknown grid key '" + key + "'");
        }
    }
    return grid;
}

std::string cell_label(ReweightFamily family, bool std_norm, bool hint) {
    return std::string(to_string(family)) + (std_norm ? "_std-on" : "_std-off") + (hint ? "_hint-on" : "_hint-off");
}

void cmd_sweep(const ExperimentConfig& cfg, const SweepGrid& grid, const std::string& out_dir,
               const std::string& bank_path, std::ostream& log) {
    ensure_dir(out_dir);
    const fs::path dir(out_dir);
    const auto bank = bank_path.empty() ? generate_bank(cfg.bank) : load_bank(bank_path);
    if (bank_path.empty()) save_bank((dir / "bank.jsonl").string(), bank);
    const auto cur = curate_into(cfg, bank, (dir / "curation").string(), log);

    auto summary = open_out(dir / "summary.csv");
    summary << "scheme,std_norm,hint,acc_simple,acc_moderate,acc_hard,acc_overall\n";
    for (auto family : grid.families) {
        for (bool std_norm : grid.std_norm) {
            for (bool hint : grid.hint) {
                const auto label = cell_label(family, std_norm, hint);
                try {
                    TrainerConfig tcfg = cfg.trainer;
                    tcfg.scheme.reweight = ReweightConfig::defaults(family);
                    tcfg.scheme.use_std_norm = std_norm;
                    tcfg.hint_stage2 = hint;
                    const auto result = run_two_stage(cur.base, cur.sets, tcfg, cfg.curation);
                    const auto table = evaluate(result.final_policy, cur.scored, cfg.eval_samples, cfg.seed,
                                                cfg.curation);

                    const auto cell_dir = dir / "cells" / label;
                    ensure_dir(cell_dir.string());
                    {
                        auto os = open_out(cell_dir / "metrics.csv");
                        write_metrics_csv(os, result.metrics);
                    }
                    {
                        auto os = open_out(cell_dir / "eval.csv");
                        write_eval_csv(os, table);
                    }
                    save_policy((cell_dir / "final.ckpt").string(), result.final_policy);

                    summary << to_string(family) << ',' << (std_norm ? "on" : "off") << ',' << (hint ? "on" : "off")
                            << ',' << format_double(table.simple.accuracy()) << ','
                            << format_double(table.moderate.accuracy()) << ',' << format_double(table.hard.accuracy())
                            << ',' << format_double(table.overall.accuracy()) << '\n';
                    log << label << ": hard " << fmt_acc(table.hard.accuracy()) << ", overall "
                        << fmt_acc(table.overall.accuracy()) << "\n";
                } catch (const ConfigError& e) {
                    throw ConfigError("sweep cell " + label + ": " + e.what());
                } catch (const NumericalError& e) {
                    throw NumericalError("sweep cell " + label + ": " + e.what());
                } catch (const IoError& e) {
                    throw IoError("sweep cell " + label + ": " + e.what());
                }
            }
        }
    }
    if (!summary) throw IoError("failed writing summary.csv");
    log << "sweep finished: " << grid.cells() << " cells\n";
}

void cmd_hist(const ExperimentConfig& cfg, const std::string& bank_path, const std::string& out_prefix,
              std::ostream& log) {
    const auto bank = load_bank(bank_path);
    std::vector<double> acc;
    for (const auto& t : bank) {
        if (!t.accuracy_estimate)
            throw ConfigError("hist: task " + std::to_string(t.id) + " has no accuracy estimate (run curate first)");
        acc.push_back(*t.accuracy_estimate);
    }
    write_histogram_files(fs::path(out_prefix), acc, cfg.curation.histogram_bins, "empirical accuracy");
    const auto hist = build_histogram(acc, cfg.curation.histogram_bins);
    for (const auto& b : hist) log << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << '\n';
}

} // namespace dgrpo
