#include "dgrpo/taskbank.hpp"

#include "dgrpo/errors.hpp"
#include "dgrpo/rng.hpp"
#include "dgrpo/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace dgrpo {

void HintBand::validate() const {
    if (!(lower >= 0.0 && upper <= 1.0 && lower <= upper))
        throw ConfigError("hint band requires 0 <= lower <= upper <= 1");
}

void BankParams::validate() const {
    if (n < 1) throw ConfigError("bank.n must be >= 1");
    if (k_alpha < 2) throw ConfigError("bank.k_alpha must be >= 2");
    if (l_min < 1 || l_min > l_max) throw ConfigError("bank requires 1 <= l_min <= l_max");
    if (!(symbol_skew >= 0.0) || !std::isfinite(symbol_skew)) throw ConfigError("bank.symbol_skew must be >= 0");
    if (mix.empty()) throw ConfigError("bank.mix must not be empty");
    double total = 0.0;
    for (const auto& share : mix) {
        if (!(share.difficulty >= 0.0 && share.difficulty <= 1.0))
            throw ConfigError("bank.mix difficulty must lie in [0, 1]");
        if (!(share.proportion >= 0.0))
            throw ConfigError("bank.mix proportions must be >= 0");
        total += share.proportion;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("bank.mix proportions must sum to 1, got " + format_double(total));
}

std::size_t target_length(double difficulty, std::size_t l_min, std::size_t l_max) {
    const auto span = static_cast<double>(l_max - l_min);
    return l_min + static_cast<std::size_t>(std::floor(difficulty * span));
}

std::vector<std::size_t> mix_counts(std::size_t n, std::span<const DifficultyShare> mix) {
    std::vector<std::size_t> counts(mix.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < mix.size(); ++i) {
        const double exact = static_cast<double>(n) * mix[i].proportion;
        counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        assigned += counts[i];
        remainders.emplace_back(exact - static_cast<double>(counts[i]), i);
    }
    // Largest remainder first; ties go to the earlier mix entry.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& l, const auto& r) { return l.first > r.first; });
    for (std::size_t j = 0; assigned < n; ++j, ++assigned) counts[remainders[j % remainders.size()].second]++;
    return counts;
}

std::vector<double> symbol_distribution(std::size_t k_alpha, double skew) {
    std::vector<double> p(k_alpha);
    for (std::size_t j = 0; j < k_alpha; ++j) p[j] = std::pow(static_cast<double>(j + 1), -skew);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= total;
    return p;
}

namespace {

int draw_symbol(Rng& rng, std::span<const double> probs) {
    const double u = rng.uniform();
    double cdf = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        cdf += probs[j];
        if (u < cdf) return static_cast<int>(j);
    }
    return static_cast<int>(probs.size() - 1);
}

TaskRecord make_task(std::uint64_t id, double difficulty, const BankParams& p, std::span<const double> symbols) {
    Rng rng(derive_seed({p.seed, id, 0x7a5bULL}));
    TaskRecord t;
    t.id = id;
    t.difficulty = difficulty;
    const std::size_t len = target_length(difficulty, p.l_min, p.l_max);
    t.target.resize(len);
    t.features = Matrix(len, p.k_alpha + kHintSlots);
    for (std::size_t pos = 0; pos < len; ++pos) {
        const int symbol = draw_symbol(rng, symbols);
        t.target[pos] = symbol;
        int shown = symbol;
        if (rng.bernoulli(difficulty)) shown = static_cast<int>(rng.below(p.k_alpha));
        t.features(pos, static_cast<std::size_t>(shown)) = 1.0;
    }
    return t;
}

} // namespace

std::vector<TaskRecord> generate_bank(const BankParams& params) {
    params.validate();
    const auto counts = mix_counts(params.n, params.mix);
    const auto symbols = symbol_distribution(params.k_alpha, params.symbol_skew);
    std::vector<TaskRecord> bank;
    bank.reserve(params.n);
    std::uint64_t id = 0;
    for (std::size_t i = 0; i < counts.size(); ++i)
        for (std::size_t j = 0; j < counts[i]; ++j, ++id) bank.push_back(make_task(id, params.mix[i].difficulty, params, symbols));
    return bank;
}

int verify(std::span<const int> response, const TaskRecord& task) {
    if (response.size() != task.target.size()) return 0;
    return std::equal(response.begin(), response.end(), task.target.begin()) ? 1 : 0;
}

TaskRecord inject_hint(const TaskRecord& task, const HintBand& band) {
    band.validate();
    TaskRecord out = task;
    out.hint = band.active ? band : HintBand::inactive();
    const std::size_t base = out.alphabet_size();
    for (std::size_t t = 0; t < out.features.rows(); ++t) {
        out.features(t, base + 0) = out.hint.active ? 1.0 : 0.0;
        out.features(t, base + 1) = out.hint.lower;
        out.features(t, base + 2) = out.hint.upper;
    }
    return out;
}

void write_bank(std::ostream& os, std::span<const TaskRecord> bank) {
    for (const auto& t : bank) {
        os << "{\"id\":" << t.id << ",\"d\":" << format_double(t.difficulty) << ",\"target\":[";
        for (std::size_t i = 0; i < t.target.size(); ++i) os << (i ? "," : "") << t.target[i];
        os << "],\"features\":[";
        for (std::size_t r = 0; r < t.features.rows(); ++r) {
            os << (r ? ",[" : "[");
            const auto row = t.features.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
            os << "]";
        }
        os << "],\"hint\":{\"active\":" << (t.hint.active ? "true" : "false")
           << ",\"lower\":" << format_double(t.hint.lower) << ",\"upper\":" << format_double(t.hint.upper)
           << "},\"accuracy_estimate\":"
           << (t.accuracy_estimate ? format_double(*t.accuracy_estimate) : std::string("null"))
           << ",\"rollout_count\":" << t.rollout_count << "}\n";
    }
}

std::vector<TaskRecord> read_bank(std::istream& is) {
    std::vector<TaskRecord> bank;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            TaskRecord t;
            t.id = j.at("id").get<std::uint64_t>();
            t.difficulty = j.at("d").get<double>();
            t.target = j.at("target").get<std::vector<int>>();
            const auto rows = j.at("features").get<std::vector<std::vector<double>>>();
            if (rows.size() != t.target.size() || rows.empty())
                throw ConfigError("features must have one row per target symbol");
            const std::size_t width = rows.front().size();
            if (width <= kHintSlots) throw ConfigError("feature rows are too narrow");
            t.features = Matrix(rows.size(), width);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != width) throw ConfigError("ragged feature rows");
                std::copy(rows[r].begin(), rows[r].end(), t.features.row(r).begin());
            }
            for (int s : t.target)
                if (s < 0 || static_cast<std::size_t>(s) >= t.alphabet_size())
                    throw ConfigError("target symbol out of range");
            const auto& h = j.at("hint");
            t.hint = {h.at("lower").get<double>(), h.at("upper").get<double>(), h.at("active").get<bool>()};
            const auto& acc = j.at("accuracy_estimate");
            if (!acc.is_null()) t.accuracy_estimate = acc.get<double>();
            t.rollout_count = j.at("rollout_count").get<std::uint64_t>();
            bank.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bank line " + std::to_string(lineno) + ": " + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError("bank line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return bank;
}

void save_bank(const std::string& path, std::span<const TaskRecord> bank) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write_bank(os, bank);
    if (!os) throw IoError("failed writing " + path);
}

std::vector<TaskRecord> load_bank(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    return read_bank(is);
}

} // namespace dgrpo
