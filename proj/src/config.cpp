#include "dgrpo/config.hpp"

#include "dgrpo/errors.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace dgrpo {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> names(allowed.begin(), allowed.end());
    for (const auto& item : obj.items())
        if (!names.contains(item.key()))
            throw ConfigError("unknown configuration key '" + (where.empty() ? "" : where + ".") + item.key() + "'");
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("configuration key '" + where + "." + key + "' has the wrong type");
    }
}

void read_count(const json& obj, const char* key, const std::string& where, std::size_t& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("configuration key '" + where + "." + key + "' must be a non-negative integer");
    out = v.get<std::size_t>();
}

AccuracyBand read_band(const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError("configuration key '" + key + "' must be [lower, upper]");
    return {v[0].get<double>(), v[1].get<double>()};
}

std::uint64_t read_seed(const json& v) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::uint64_t>();
    throw ConfigError("configuration key 'seed' must be a non-negative integer");
}

} // namespace

void ExperimentConfig::validate() const {
    bank.validate();
    curation.validate();
    trainer.validate();
    if (eval_samples < 1) throw ConfigError("eval.per_task_samples must be >= 1");
}

void apply_override(json& doc, const std::string& dotted_key, const std::string& value) {
    if (dotted_key.empty()) throw ConfigError("empty override key");
    if (!doc.is_object()) doc = json::object();
    json* node = &doc;
    std::stringstream ss(dotted_key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        json& next = (*node)[parts[i]];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) throw ConfigError("override '" + dotted_key + "' descends into a non-object");
        node = &next;
    }
    json parsed = json::parse(value, nullptr, false);
    (*node)[parts.back()] = parsed.is_discarded() ? json(value) : parsed;
}

ExperimentConfig parse_config(const json& doc) {
    reject_unknown(doc, "", {"seed", "bank", "curation", "trainer", "scheme", "eval"});
    if (!doc.contains("seed")) throw ConfigError("configuration key 'seed' is mandatory");

    ExperimentConfig cfg;
    cfg.seed = read_seed(doc.at("seed"));

    if (doc.contains("bank")) {
        const auto& b = doc.at("bank");
        reject_unknown(b, "bank", {"n", "mix", "k_alpha", "l_min", "l_max", "symbol_skew"});
        read_count(b, "n", "bank", cfg.bank.n);
        read_count(b, "k_alpha", "bank", cfg.bank.k_alpha);
        read_count(b, "l_min", "bank", cfg.bank.l_min);
        read_count(b, "l_max", "bank", cfg.bank.l_max);
        read(b, "symbol_skew", "bank", cfg.bank.symbol_skew);
        if (b.contains("mix")) {
            const auto& m = b.at("mix");
            if (!m.is_array()) throw ConfigError("configuration key 'bank.mix' must be a list of [d, proportion]");
            cfg.bank.mix.clear();
            for (const auto& e : m) {
                if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                    throw ConfigError("configuration key 'bank.mix' entries must be [d, proportion]");
                cfg.bank.mix.push_back({e[0].get<double>(), e[1].get<double>()});
            }
        }
    }

    if (doc.contains("curation")) {
        const auto& c = doc.at("curation");
        reject_unknown(c, "curation",
                       {"ks", "d1_band", "d2_band", "histogram_bins", "base_steps", "base_checkpoint"});
        if (c.contains("ks")) {
            const auto& ks = c.at("ks");
            if (!ks.is_array()) throw ConfigError("configuration key 'curation.ks' must be a list");
            cfg.curation.ks.clear();
            for (const auto& k : ks) {
                if (!k.is_number_integer() || k.get<long long>() < 1)
                    throw ConfigError("configuration key 'curation.ks' entries must be integers >= 1");
                cfg.curation.ks.push_back(k.get<std::size_t>());
            }
        }
        if (c.contains("d1_band")) cfg.curation.d1_band = read_band(c.at("d1_band"), "curation.d1_band");
        if (c.contains("d2_band")) cfg.curation.d2_band = read_band(c.at("d2_band"), "curation.d2_band");
        read_count(c, "histogram_bins", "curation", cfg.curation.histogram_bins);
        read_count(c, "base_steps", "curation", cfg.base_steps);
        read(c, "base_checkpoint", "curation", cfg.base_checkpoint);
    }

    if (doc.contains("trainer")) {
        const auto& t = doc.at("trainer");
        reject_unknown(t, "trainer",
                       {"group_size", "rollout_batch", "global_batch", "learning_rate", "clip_eps", "kl_beta",
                        "stage1_steps", "stage2_steps", "hint_stage2", "temperature"});
        read_count(t, "group_size", "trainer", cfg.trainer.group_size);
        read_count(t, "rollout_batch", "trainer", cfg.trainer.rollout_batch);
        read_count(t, "global_batch", "trainer", cfg.trainer.global_batch);
        read(t, "learning_rate", "trainer", cfg.trainer.learning_rate);
        read(t, "clip_eps", "trainer", cfg.trainer.clip_eps);
        read(t, "kl_beta", "trainer", cfg.trainer.kl_beta);
        read_count(t, "stage1_steps", "trainer", cfg.trainer.stage1_steps);
        read_count(t, "stage2_steps", "trainer", cfg.trainer.stage2_steps);
        read(t, "hint_stage2", "trainer", cfg.trainer.hint_stage2);
        read(t, "temperature", "trainer", cfg.trainer.temperature);
    }

    if (doc.contains("scheme")) {
        const auto& s = doc.at("scheme");
        reject_unknown(s, "scheme", {"use_std_norm", "epsilon", "reweight"});
        read(s, "use_std_norm", "scheme", cfg.trainer.scheme.use_std_norm);
        read(s, "epsilon", "scheme", cfg.trainer.advantage_epsilon);
        if (s.contains("reweight")) {
            const auto& r = s.at("reweight");
            reject_unknown(r, "scheme.reweight", {"family", "a", "b", "x0", "xlow", "xhigh", "k"});
            auto family = ReweightFamily::none;
            if (r.contains("family")) {
                std::string name;
                read(r, "family", "scheme.reweight", name);
                const auto f = parse_family(name);
                if (!f) throw ConfigError("unknown reweight family '" + name + "'");
                family = *f;
            }
            auto& rw = cfg.trainer.scheme.reweight;
            rw = ReweightConfig::defaults(family);
            read(r, "a", "scheme.reweight", rw.a);
            read(r, "b", "scheme.reweight", rw.b);
            read(r, "x0", "scheme.reweight", rw.x0);
            read(r, "xlow", "scheme.reweight", rw.xlow);
            read(r, "xhigh", "scheme.reweight", rw.xhigh);
            read(r, "k", "scheme.reweight", rw.k);
        }
    }

    if (doc.contains("eval")) {
        const auto& e = doc.at("eval");
        reject_unknown(e, "eval", {"per_task_samples"});
        read_count(e, "per_task_samples", "eval", cfg.eval_samples);
    }

    cfg.bank.seed = cfg.seed;
    cfg.curation.seed = cfg.seed;
    cfg.trainer.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides) {
    json doc = json::object();
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw IoError("cannot open configuration file " + path);
        try {
            doc = json::parse(is);
        } catch (const json::exception& e) {
            throw ConfigError("configuration file " + path + ": " + e.what());
        }
    }
    if (const char* env = std::getenv("DGRPO_SEED"); env && *env) apply_override(doc, "seed", env);
    for (const auto& [key, value] : overrides) apply_override(doc, key, value);
    return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
    json mix = json::array();
    for (const auto& m : cfg.bank.mix) mix.push_back({m.difficulty, m.proportion});
    const auto& rw = cfg.trainer.scheme.reweight;
    return json{
        {"seed", cfg.seed},
        {"bank",
         {{"n", cfg.bank.n}, {"mix", mix}, {"k_alpha", cfg.bank.k_alpha}, {"l_min", cfg.bank.l_min},
          {"l_max", cfg.bank.l_max}, {"symbol_skew", cfg.bank.symbol_skew}}},
        {"curation",
         {{"ks", cfg.curation.ks},
          {"d1_band", {cfg.curation.d1_band.lower, cfg.curation.d1_band.upper}},
          {"d2_band", {cfg.curation.d2_band.lower, cfg.curation.d2_band.upper}},
          {"histogram_bins", cfg.curation.histogram_bins},
          {"base_steps", cfg.base_steps},
          {"base_checkpoint", cfg.base_checkpoint}}},
        {"trainer",
         {{"group_size", cfg.trainer.group_size}, {"rollout_batch", cfg.trainer.rollout_batch},
          {"global_batch", cfg.trainer.global_batch}, {"learning_rate", cfg.trainer.learning_rate},
          {"clip_eps", cfg.trainer.clip_eps}, {"kl_beta", cfg.trainer.kl_beta},
          {"stage1_steps", cfg.trainer.stage1_steps}, {"stage2_steps", cfg.trainer.stage2_steps},
          {"hint_stage2", cfg.trainer.hint_stage2}, {"temperature", cfg.trainer.temperature}}},
        {"scheme",
         {{"use_std_norm", cfg.trainer.scheme.use_std_norm},
          {"epsilon", cfg.trainer.advantage_epsilon},
          {"reweight",
           {{"family", std::string(to_string(rw.family))}, {"a", rw.a}, {"b", rw.b}, {"x0", rw.x0},
            {"xlow", rw.xlow}, {"xhigh", rw.xhigh}, {"k", rw.k}}}}},
        {"eval", {{"per_task_samples", cfg.eval_samples}}},
    };
}

} // namespace dgrpo
