#pragma once

#include "dgrpo/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace dgrpo {

// Pipeline commands behind the `dgrpo` executable. Each throws ConfigError,
// IoError or NumericalError; the executable maps those to exit codes 1, 2, 3.

void cmd_genbank(const ExperimentConfig& cfg, const std::string& out_path, std::ostream& log);

/// Scores `bank_path` with the base policy and writes into `out_dir`:
/// base_policy.ckpt, scored.jsonl, d1.jsonl, d2.jsonl, removed_simple.jsonl,
/// removed_unsolvable.jsonl, hist_merged.{csv,svg} and hist_k<k>.{csv,svg}.
CuratedDatasets cmd_curate(const ExperimentConfig& cfg, const std::string& bank_path, const std::string& out_dir,
                           std::ostream& log);

/// Two-stage training. The starting policy is `base_path` if given, else
/// curation.base_checkpoint, else base_policy.ckpt next to the d1 file, else zeros.
/// Writes metrics.csv, stage1.ckpt and final.ckpt into `out_dir`.
TwoStageResult cmd_train(const ExperimentConfig& cfg, const std::string& d1_path, const std::string& d2_path,
                         const std::string& out_dir, const std::string& base_path, std::ostream& log);

EvalTable cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint, const std::string& bank_path,
                   const std::string& out_csv, std::ostream& log);

struct SweepGrid {
    std::vector<ReweightFamily> families{ReweightFamily::none,        ReweightFamily::linear,
                                         ReweightFamily::inverse,     ReweightFamily::exponential,
                                         ReweightFamily::steep_exponential, ReweightFamily::quadratic};
    std::vector<bool> std_norm{true, false};
    std::vector<bool> hint{false, true};

    std::size_t cells() const { return families.size() * std_norm.size() * hint.size(); }
};

SweepGrid load_grid(const std::string& path);
std::string cell_label(ReweightFamily family, bool std_norm, bool hint);

/// Generates (or loads, if bank_path is set) the bank, curates it once into
/// out_dir/curation, then trains and evaluates every grid cell into
/// out_dir/cells/<label>/ and writes out_dir/summary.csv.
void cmd_sweep(const ExperimentConfig& cfg, const SweepGrid& grid, const std::string& out_dir,
               const std::string& bank_path, std::ostream& log);

void cmd_hist(const ExperimentConfig& cfg, const std::string& bank_path, const std::string& out_prefix,
              std::ostream& log);

} // namespace dgrpo
