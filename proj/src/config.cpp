#include "otss/config.hpp"

#include "otss/rng.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace otss::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
    throw std::runtime_error("config: " + where + ": " + msg);
}

void require_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) fail(where, "unknown key '" + it.key() + "'");
    }
}

json parse_json(const std::string& text) {
    // nlohmann's exception text includes the line/column of the error
    return json::parse(text);
}

int get_int(const json& obj, const char* key, int dflt, const std::string& where) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_number_integer()) fail(where, std::string("'") + key + "' must be an integer");
    return obj[key].get<int>();
}

long long get_ll(const json& obj, const char* key, long long dflt, const std::string& where) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_number_integer()) fail(where, std::string("'") + key + "' must be an integer");
    return obj[key].get<long long>();
}

double get_num(const json& obj, const char* key, double dflt, const std::string& where) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_number()) fail(where, std::string("'") + key + "' must be a number");
    return obj[key].get<double>();
}

std::string get_str(const json& obj, const char* key, const std::string& dflt,
                    const std::string& where) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_string()) fail(where, std::string("'") + key + "' must be a string");
    return obj[key].get<std::string>();
}

template <typename T>
std::vector<T> get_array(const json& obj, const char* key, std::vector<T> dflt,
                         const std::string& where) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_array()) fail(where, std::string("'") + key + "' must be an array");
    std::vector<T> out;
    for (const json& v : obj[key]) {
        if (!v.is_number()) fail(where, std::string("'") + key + "' entries must be numbers");
        out.push_back(v.get<T>());
    }
    return out;
}

void patch_fit(models::FitConfig& fc, const json& j, const std::string& where) {
    require_keys(j, where,
                 {"restarts", "max_epochs", "patience", "step_size", "reg_grid", "k_grid",
                  "rank_grid"});
    fc.restarts = get_int(j, "restarts", fc.restarts, where);
    fc.max_epochs = get_int(j, "max_epochs", fc.max_epochs, where);
    fc.patience = get_int(j, "patience", fc.patience, where);
    fc.step_size = get_num(j, "step_size", fc.step_size, where);
    fc.reg_grid = get_array<double>(j, "reg_grid", fc.reg_grid, where);
    fc.k_grid = get_array<int>(j, "k_grid", fc.k_grid, where);
    fc.rank_grid = get_array<int>(j, "rank_grid", fc.rank_grid, where);
}

void parse_benchmark(const json& j, ExperimentConfig& cfg, const std::string& where) {
    require_keys(j, where,
                 {"family", "mode", "n_total", "n_train", "d_sig", "d_nuis", "J", "M", "K", "tau",
                  "target_top_prob", "nuisance_scale", "rand_level"});
    const std::string family = get_str(j, "family", "two_expert", where);
    if (family == "two_expert") {
        cfg.family = bench::Family::two_expert;
    } else if (family == "matched_k") {
        cfg.family = bench::Family::matched_k;
    } else {
        fail(where, "family must be 'two_expert' or 'matched_k'");
    }
    const std::string mode = get_str(j, "mode", "soft", where);
    if (mode == "hard") {
        cfg.mode = bench::TruthMode::hard;
    } else if (mode == "soft") {
        cfg.mode = bench::TruthMode::soft;
    } else {
        fail(where, "mode must be 'hard' or 'soft'");
    }
    bench::BenchConfig& b = cfg.bench;
    b.n_total = get_int(j, "n_total", b.n_total, where);
    b.n_train = get_int(j, "n_train", b.n_train, where);
    b.d_sig = get_int(j, "d_sig", b.d_sig, where);
    b.d_nuis = get_int(j, "d_nuis", b.d_nuis, where);
    b.J = get_int(j, "J", b.J, where);
    b.M = get_int(j, "M", b.M, where);
    b.K = get_int(j, "K", b.K, where);
    b.tau = get_num(j, "tau", b.tau, where);
    b.target_top_prob = get_num(j, "target_top_prob", b.target_top_prob, where);
    b.nuisance_scale = get_num(j, "nuisance_scale", b.nuisance_scale, where);
    b.rand_level = get_num(j, "rand_level", b.rand_level, where);
}

const std::set<std::string>& method_names() {
    static const std::set<std::string> names = {"pooled", "linear", "lowrank", "mlp",
                                                "cluster", "em",     "hard",    "otss"};
    return names;
}

MethodConfig parse_method(const json& j, const models::FitConfig& base, const std::string& where) {
    MethodConfig m;
    m.fit = base;
    if (j.is_string()) {
        m.name = j.get<std::string>();
    } else if (j.is_object()) {
        require_keys(j, where, {"name", "label", "k", "fit"});
        m.name = get_str(j, "name", "", where);
        m.label = get_str(j, "label", "", where);
        m.k = get_int(j, "k", 0, where);
        if (j.contains("fit")) patch_fit(m.fit, j["fit"], where + ".fit");
    } else {
        fail(where, "method entries must be names or objects");
    }
    if (method_names().count(m.name) == 0) fail(where, "unknown method '" + m.name + "'");
    if (m.label.empty()) m.label = m.name;
    return m;
}

ExperimentConfig parse_experiment_json(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    require_keys(j, where,
                 {"name", "benchmark", "methods", "seeds", "fit", "axis", "values",
                  "bootstrap_resamples"});
    ExperimentConfig cfg;
    cfg.name = get_str(j, "name", cfg.name, where);
    if (j.contains("fit")) patch_fit(cfg.fit, j["fit"], where + ".fit");
    if (j.contains("benchmark")) parse_benchmark(j["benchmark"], cfg, where + ".benchmark");
    if (j.contains("methods")) {
        if (!j["methods"].is_array()) fail(where, "'methods' must be an array");
        for (const json& mj : j["methods"])
            cfg.methods.push_back(parse_method(mj, cfg.fit, where + ".methods"));
    }
    cfg.seeds = get_array<int>(j, "seeds", cfg.seeds, where);
    cfg.axis = get_str(j, "axis", "", where);
    cfg.axis_values = get_array<double>(j, "values", {}, where);
    cfg.bootstrap_resamples = get_int(j, "bootstrap_resamples", cfg.bootstrap_resamples, where);
    return cfg;
}

} // namespace

void ExperimentConfig::validate() const {
    if (methods.empty()) throw std::runtime_error("config: at least one method is required");
    std::set<std::string> labels;
    for (const MethodConfig& m : methods) {
        if (!labels.insert(m.label).second)
            throw std::runtime_error("config: duplicate method label '" + m.label + "'");
        m.fit.validate();
        if (m.k < 0) throw std::runtime_error("config: method k must be nonnegative");
    }
    if (seeds.empty()) throw std::runtime_error("config: at least one seed is required");
    std::set<int> distinct(seeds.begin(), seeds.end());
    if (distinct.size() != seeds.size()) throw std::runtime_error("config: seeds must be distinct");
    bench.validate();
    if (!axis.empty()) {
        if (axis != "n_train" && axis != "tau" && axis != "nuisance_scale" && axis != "rand_level")
            throw std::runtime_error("config: unsupported sweep axis '" + axis + "'");
        if (axis_values.empty())
            throw std::runtime_error("config: sweep requires at least one axis value");
    }
    if (bootstrap_resamples < 40)
        throw std::runtime_error("config: bootstrap_resamples too small");
}

void TheoryConfig::validate() const {
    if (floor_m_list.empty()) throw std::runtime_error("config: floor m list is empty");
    for (int m : floor_m_list) {
        if (m < 1) throw std::runtime_error("config: floor m values must be positive");
    }
    if (floor_grid < 100) throw std::runtime_error("config: floor grid too coarse");
    if (floor_tau <= 0.0) throw std::runtime_error("config: floor tau must be positive");
    if (kappa_scale <= 0.0) throw std::runtime_error("config: kappa scale must be positive");
    if (mc_samples < 1000) throw std::runtime_error("config: mc_samples too small");
    if (decomposition_instantiations < 1)
        throw std::runtime_error("config: decomposition_instantiations must be positive");
    if (regret_triples < 1) throw std::runtime_error("config: regret_triples must be positive");
    rates.validate();
}

void RuntimeConfig::validate() const {
    if (panels.empty()) throw std::runtime_error("config: runtime needs at least one panel");
    for (const ExperimentConfig& p : panels) p.validate();
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    return parse_experiment_json(parse_json(text), "experiment");
}

TheoryConfig parse_theory_config(const std::string& text) {
    const json j = parse_json(text);
    const std::string where = "theory";
    if (!j.is_object()) fail(where, "expected an object");
    require_keys(j, where,
                 {"name", "seed", "floor", "mc_samples", "decomposition_instantiations",
                  "regret_triples", "rates"});
    TheoryConfig cfg;
    cfg.name = get_str(j, "name", cfg.name, where);
    cfg.seed = static_cast<std::uint64_t>(get_ll(j, "seed", 0, where));
    if (j.contains("floor")) {
        const json& f = j["floor"];
        const std::string fw = where + ".floor";
        require_keys(f, fw, {"m_list", "grid", "tau", "kappa_scale"});
        cfg.floor_m_list = get_array<int>(f, "m_list", cfg.floor_m_list, fw);
        cfg.floor_grid = get_int(f, "grid", cfg.floor_grid, fw);
        cfg.floor_tau = get_num(f, "tau", cfg.floor_tau, fw);
        cfg.kappa_scale = get_num(f, "kappa_scale", cfg.kappa_scale, fw);
    }
    cfg.mc_samples = get_ll(j, "mc_samples", cfg.mc_samples, where);
    cfg.decomposition_instantiations =
        get_int(j, "decomposition_instantiations", cfg.decomposition_instantiations, where);
    cfg.regret_triples = get_ll(j, "regret_triples", cfg.regret_triples, where);
    if (j.contains("rates")) {
        const json& r = j["rates"];
        const std::string rw = where + ".rates";
        require_keys(r, rw, {"n_grid", "seeds_per_n", "j", "k", "m_library", "c_m", "tau", "n_eval", "seed"});
        cfg.rates.n_grid = get_array<int>(r, "n_grid", cfg.rates.n_grid, rw);
        cfg.rates.seeds_per_n = get_int(r, "seeds_per_n", cfg.rates.seeds_per_n, rw);
        cfg.rates.j = get_int(r, "j", cfg.rates.j, rw);
        cfg.rates.k = get_int(r, "k", cfg.rates.k, rw);
        cfg.rates.m_library = get_int(r, "m_library", cfg.rates.m_library, rw);
        cfg.rates.c_m = get_num(r, "c_m", cfg.rates.c_m, rw);
        cfg.rates.tau = get_num(r, "tau", cfg.rates.tau, rw);
        cfg.rates.n_eval = get_int(r, "n_eval", cfg.rates.n_eval, rw);
        cfg.rates.seed = static_cast<std::uint64_t>(get_ll(r, "seed", 0, rw));
    }
    return cfg;
}

RuntimeConfig parse_runtime_config(const std::string& text) {
    const json j = parse_json(text);
    const std::string where = "runtime";
    if (!j.is_object()) fail(where, "expected an object");
    require_keys(j, where, {"name", "panels"});
    RuntimeConfig cfg;
    cfg.name = get_str(j, "name", cfg.name, where);
    if (!j.contains("panels") || !j["panels"].is_array())
        fail(where, "'panels' must be an array of experiment objects");
    int idx = 0;
    for (const json& p : j["panels"]) {
        ExperimentConfig e = parse_experiment_json(p, where + ".panels[" + std::to_string(idx) + "]");
        if (e.name == "panel") e.name = "panel_" + std::to_string(idx);
        cfg.panels.push_back(std::move(e));
        ++idx;
    }
    return cfg;
}

std::string config_hash(const std::string& text) {
    const std::string canonical = parse_json(text).dump();
    const std::uint64_t h = Rng::hash_tag(canonical);
    std::ostringstream os;
    os << std::hex;
    for (int shift = 60; shift >= 0; shift -= 4) os << ((h >> shift) & 0xF);
    return os.str();
}

} // namespace otss::cli
