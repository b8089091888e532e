#pragma once

#include "otss/rng.hpp"
#include "otss/types.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace otss::bench {

enum class Family { two_expert, matched_k };
enum class TruthMode { hard, soft };

// Two-expert overlap truth: w*(x) = lambda(x) beta1 + (1-lambda(x)) beta2
// with lambda(x) = sigmoid(tau * u'x_sig). tau controls how sharply the
// mixture switches between the experts.
struct TwoExpertTruth {
    Vec beta1;
    Vec beta2;
    double tau = 0.0;
    Vec u; // unit vector over the signal block
    Vec baseline_coef; // affine baseline over (1, x_full)
};

// Matched K-expert truth. gate_directions already includes the frozen
// rand_level * N(0,1) perturbation applied once at construction, so gate
// scores are just gate_directions * x_sig afterwards.
struct MatchedKTruth {
    Mat experts;        // K x J
    TruthMode mode = TruthMode::soft;
    Mat gate_directions; // K x d_sig
    double temperature = 1.0; // soft mode only, calibrated
    double rand_level = 0.0;
    Vec baseline_coef;
};

using Truth = std::variant<TwoExpertTruth, MatchedKTruth>;

struct BenchConfig {
    int n_total = 4000;
    int n_train = 2000;
    int d_sig = 4;
    int d_nuis = 8;
    int J = 6;
    int M = 40;
    int K = 2;
    double tau = 1.2;              // two_expert overlap sharpness
    double target_top_prob = 0.75; // matched_k soft gate calibration target
    double nuisance_scale = 0.5;
    double rand_level = 0.0;
    std::uint64_t seed = 0;

    int context_dim() const { return d_sig + d_nuis; }
    // validation slice carved from the tail of the training portion
    int n_val() const;
    int n_eval() const { return n_total - n_train; }
    void validate() const;
};

double true_lambda(const TwoExpertTruth& truth, const ContextVector& x);
Vec true_weight_two_expert(const TwoExpertTruth& truth, const ContextVector& x);

Vec gate_scores(const MatchedKTruth& truth, const ContextVector& x);
// one-hot (hard, lowest-index tie-break) or softmax(scores / temperature)
Vec true_gate_matched_k(const MatchedKTruth& truth, const ContextVector& x);
Vec true_weight_matched_k(const MatchedKTruth& truth, const ContextVector& x);

Vec true_weight(const Truth& truth, const ContextVector& x);
// gate over experts: (lambda, 1-lambda) for two_expert, alpha* for matched_k
Vec true_gate(const Truth& truth, const ContextVector& x);
double baseline_value(const Truth& truth, const ContextVector& x);
const Vec& baseline_coef(const Truth& truth);
int truth_k(const Truth& truth);
Mat truth_experts(const Truth& truth);

// Bisection over t in [1e-3, 1e3] for the temperature whose sample mean
// top gate probability hits target_top_prob within 0.01. Mean top prob is
// monotone decreasing in t, so the bracket check is exact.
double calibrate_temperature(const MatchedKTruth& truth,
                             const std::vector<ContextVector>& contexts,
                             double target_top_prob);

// signal ~ N(0, I), nuisance ~ nuisance_scale * N(0, I); always consumes
// the same number of draws regardless of nuisance_scale
ContextVector sample_context(const BenchConfig& config, Rng& rng);

double outcome_probability(const Truth& truth, const ContextVector& x, const Vec& z);
int simulate_outcome(const Truth& truth, const ContextVector& x, const Vec& z, Rng& rng);

struct EvalPoint {
    ContextVector context;
    Vec w_star;
};

struct BenchmarkInstance {
    BenchConfig config;
    Family family = Family::two_expert;
    Truth truth;
    DecisionLibrary library;
    LoggedDataset train;
    LoggedDataset val;
    std::vector<EvalPoint> eval;
};

// Truth construction draws from named substreams of config.seed, so each
// block is reproducible in isolation and adding draws to one block never
// shifts another.
TwoExpertTruth make_two_expert_truth(const BenchConfig& config);
MatchedKTruth make_matched_k_truth(const BenchConfig& config, TruthMode mode);
DecisionLibrary make_library(const BenchConfig& config);

// Full instance: library, truth, logged train/val records (val is the tail
// of the training portion), and the held-out evaluation contexts with
// their true weights. Training records are a prefix-stable stream: growing
// n_train extends the record sequence without changing earlier records,
// and the eval stream is independent of n_train.
BenchmarkInstance generate_benchmark(const BenchConfig& config, Family family,
                                     TruthMode mode = TruthMode::soft);

} // namespace otss::bench
