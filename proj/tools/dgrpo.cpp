// dgrpo: command-line front end for bank generation, curation, two-stage
// training, evaluation, ablation sweeps and histogram emission.

#include "dgrpo/commands.hpp"
#include "dgrpo/errors.hpp"
#include "dgrpo/text.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonOptions {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> stage1_steps;
    std::optional<std::size_t> stage2_steps;
    std::optional<double> learning_rate;
    std::optional<std::size_t> group_size;
    std::optional<std::string> scheme;
    bool std_norm = false;
    bool no_std_norm = false;
    bool hint = false;
    bool no_hint = false;
};

void add_common(CLI::App* app, CommonOptions& o, bool with_config_positional = true) {
    if (with_config_positional) app->add_option("config", o.config, "Experiment configuration (JSON)")->required();
    app->add_option("--set", o.sets, "Override a configuration key, e.g. --set trainer.kl_beta=0.01");
    app->add_option("--seed", o.seed, "Override the experiment seed");
    app->add_option("--stage1-steps", o.stage1_steps, "Stage-1 optimization steps");
    app->add_option("--stage2-steps", o.stage2_steps, "Stage-2 optimization steps");
    app->add_option("--lr", o.learning_rate, "Learning rate");
    app->add_option("--group-size", o.group_size, "Rollouts per prompt (G)");
    app->add_option("--scheme", o.scheme, "Reweight family: none, linear, inverse, exponential, steep_exponential, quadratic");
    auto* on = app->add_flag("--std-norm", o.std_norm, "Keep std normalization of advantages");
    auto* off = app->add_flag("--no-std-norm", o.no_std_norm, "Drop std normalization of advantages");
    on->excludes(off);
    auto* h = app->add_flag("--hint", o.hint, "Inject the difficulty hint in stage 2");
    auto* nh = app->add_flag("--no-hint", o.no_hint, "No difficulty hint in stage 2");
    h->excludes(nh);
}

dgrpo::ExperimentConfig resolve(const CommonOptions& o) {
    std::vector<dgrpo::Override> ov;
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw dgrpo::ConfigError("--set expects key=value, got '" + s + "'");
        ov.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (o.seed) ov.emplace_back("seed", std::to_string(*o.seed));
    if (o.stage1_steps) ov.emplace_back("trainer.stage1_steps", std::to_string(*o.stage1_steps));
    if (o.stage2_steps) ov.emplace_back("trainer.stage2_steps", std::to_string(*o.stage2_steps));
    if (o.learning_rate) ov.emplace_back("trainer.learning_rate", dgrpo::format_double(*o.learning_rate));
    if (o.group_size) ov.emplace_back("trainer.group_size", std::to_string(*o.group_size));
    if (o.scheme) ov.emplace_back("scheme.reweight", "{\"family\":\"" + *o.scheme + "\"}");
    if (o.std_norm) ov.emplace_back("scheme.use_std_norm", "true");
    if (o.no_std_norm) ov.emplace_back("scheme.use_std_norm", "false");
    if (o.hint) ov.emplace_back("trainer.hint_stage2", "true");
    if (o.no_hint) ov.emplace_back("trainer.hint_stage2", "false");
    return dgrpo::load_config(o.config, ov);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Difficulty-aware GRPO on a synthetic verifiable-reward task bank"};
    app.require_subcommand(1);

    CommonOptions gen_o, cur_o, train_o, eval_o, sweep_o, hist_o;
    std::string out, bank, d1, d2, base, checkpoint, grid;

    auto* gen = app.add_subcommand("genbank", "Generate a synthetic task bank");
    add_common(gen, gen_o);
    gen->add_option("out", out, "Output bank file")->required();

    auto* cur = app.add_subcommand("curate", "Estimate accuracies with the base policy and split into stages");
    add_common(cur, cur_o);
    cur->add_option("bank", bank, "Input bank file")->required();
    cur->add_option("out_dir", out, "Output directory")->required();

    auto* train = app.add_subcommand("train", "Run the two-stage curriculum");
    add_common(train, train_o);
    train->add_option("d1", d1, "Stage-1 dataset")->required();
    train->add_option("d2", d2, "Stage-2 dataset")->required();
    train->add_option("out_dir", out, "Output directory")->required();
    train->add_option("--base", base, "Starting policy checkpoint");

    auto* ev = app.add_subcommand("eval", "Greedy per-tier accuracy of a checkpoint");
    add_common(ev, eval_o);
    ev->add_option("checkpoint", checkpoint, "Policy checkpoint")->required();
    ev->add_option("bank", bank, "Bank file (with accuracy estimates for tiers)")->required();
    ev->add_option("--out", out, "Write the table as CSV");

    auto* sweep = app.add_subcommand("sweep", "Ablation grid: reweight family x std norm x hint");
    add_common(sweep, sweep_o);
    sweep->add_option("out_dir", out, "Output directory")->required();
    sweep->add_option("--grid", grid, "Grid file (JSON: families, std_norm, hint)");
    sweep->add_option("--bank", bank, "Use an existing bank instead of generating one");

    auto* hist = app.add_subcommand("hist", "Histogram of accuracy estimates in a scored bank");
    add_common(hist, hist_o);
    hist->add_option("bank", bank, "Scored bank file")->required();
    hist->add_option("out_prefix", out, "Output prefix for .csv and .svg")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Usage errors are configuration errors; --help still exits 0.
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            dgrpo::cmd_genbank(resolve(gen_o), out, std::cout);
        } else if (cur->parsed()) {
            dgrpo::cmd_curate(resolve(cur_o), bank, out, std::cout);
        } else if (train->parsed()) {
            dgrpo::cmd_train(resolve(train_o), d1, d2, out, base, std::cout);
        } else if (ev->parsed()) {
            dgrpo::cmd_eval(resolve(eval_o), checkpoint, bank, out, std::cout);
        } else if (sweep->parsed()) {
            const auto cfg = resolve(sweep_o);
            dgrpo::cmd_sweep(cfg, dgrpo::load_grid(grid), out, bank, std::cout);
        } else if (hist->parsed()) {
            dgrpo::cmd_hist(resolve(hist_o), bank, out, std::cout);
        }
    } catch (const dgrpo::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const dgrpo::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const dgrpo::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const dgrpo::DomainError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
