#pragma once

#include "otss/bench.hpp"
#include "otss/models.hpp"
#include "otss/theory.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace otss::cli {

struct MethodConfig {
    std::string name;  // pooled | linear | lowrank | mlp | cluster | em | hard | otss
    std::string label; // CSV label; defaults to name
    int k = 0;         // expert count for otss/hard; 0 means the benchmark K
    models::FitConfig fit;
};

struct ExperimentConfig {
    std::string name = "panel";
    bench::BenchConfig bench;
    bench::Family family = bench::Family::two_expert;
    bench::TruthMode mode = bench::TruthMode::soft;
    std::vector<MethodConfig> methods;
    std::vector<int> seeds = {0, 1, 2, 3, 4, 5, 6, 7};
    models::FitConfig fit; // global defaults; per-method blocks patch a copy
    std::string axis;      // sweep only: n_train | tau | nuisance_scale | rand_level
    std::vector<double> axis_values;
    int bootstrap_resamples = 5000;

    void validate() const;
};

struct TheoryConfig {
    std::string name = "theory";
    std::uint64_t seed = 0;
    std::vector<int> floor_m_list = {1, 2, 4, 8, 16};
    int floor_grid = 20000;
    double floor_tau = 1.2;
    double kappa_scale = 1.0; // falsification hook; the CLI flag overrides it
    long long mc_samples = 200000;
    int decomposition_instantiations = 1000;
    long long regret_triples = 10000;
    theory::RateSweepConfig rates;

    void validate() const;
};

struct RuntimeConfig {
    std::string name = "runtime";
    std::vector<ExperimentConfig> panels;

    void validate() const;
};

std::string read_text_file(const std::string& path);

// parse errors carry the JSON line/column diagnostics; unknown keys are
// rejected with the offending section named
ExperimentConfig parse_experiment_config(const std::string& text);
TheoryConfig parse_theory_config(const std::string& text);
RuntimeConfig parse_runtime_config(const std::string& text);

// hash of the canonical (sorted-key) JSON dump; reruns of the same config
// land in the same output directory
std::string config_hash(const std::string& text);

} // namespace otss::cli
