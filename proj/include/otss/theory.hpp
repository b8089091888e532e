#pragma once

#include "otss/bench.hpp"
#include "otss/rng.hpp"
#include "otss/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace otss::theory {

struct FloorParams {
    double delta_beta_sq = 0.0; // squared distance between the two experts
    double kappa = 0.0;         // minimum gate slope on [a, b]
    double a = 0.0;
    double b = 1.0;
    int m = 1;

    void validate() const;
};

// delta_beta_sq * kappa^2 * (b-a)^3 / (12 M^2)
double floor_lower_bound(const FloorParams& p);

// Optimal L2 error of approximating f (sampled on a uniform grid over the
// unit interval) by a step function with at most m pieces. Returns the
// grid-mean squared error, the Riemann approximation of the integral.
// Exact dynamic program; divide-and-conquer split search keeps it
// O(m G log G).
double best_step_fit(const std::vector<double>& f, int m);

struct FloorCheckRow {
    int m = 0;
    double lower = 0.0; // Cor-4.2-style floor
    double dp = 0.0;    // exact best step fit, integral scale over [a, b]
    double upper = 0.0; // Lipschitz upper bound
    bool pass = false;
};

struct FloorReport {
    std::string name;
    std::vector<FloorCheckRow> rows;
    bool all_pass = true;
};

// Sandwich check lower <= dp <= upper for each m; alpha must be
// nondecreasing on [a, b] with analytic min slope kappa and max slope lip.
FloorReport verify_floor(const std::string& name, const std::function<double(double)>& alpha,
                         double kappa, double lip, double delta_beta_sq, double a, double b,
                         const std::vector<int>& m_list, int grid = 10000);

// Two-expert truth restricted to a 1-D context t in [a, b] (gate score
// tau * t): kappa and the Lipschitz constant come from the sigmoid slope
// analytically. kappa_override > 0 replaces the analytic kappa (the
// falsification hook for the negative test).
FloorReport verify_floor(const bench::TwoExpertTruth& truth, const std::vector<int>& m_list,
                         double a = 0.0, double b = 1.0, int grid = 10000,
                         double kappa_override = 0.0);

// ||delta beta||^2 * Var(lambda*(X)) by Monte Carlo over the given contexts
double pooled_oracle_error(const bench::TwoExpertTruth& truth,
                           const std::vector<ContextVector>& contexts);
// mean squared distance of w*(X) from its own sample mean (the empirical
// best-constant projection)
double empirical_best_constant_error(const bench::TwoExpertTruth& truth,
                                     const std::vector<ContextVector>& contexts);

struct AlignedHardReport {
    double bound = 0.0;           // ||dbeta||^2 E[min(alpha^2, (1-alpha)^2)]
    double threshold_error = 0.0; // empirical error of the 1/2-threshold predictor
    std::vector<double> eps_grid;
    std::vector<double> eps_bounds;
    bool pass = true;
};

AlignedHardReport aligned_hard_upper(const bench::TwoExpertTruth& truth,
                                     const std::vector<ContextVector>& contexts,
                                     const std::vector<double>& eps_grid);

struct DecompositionReport {
    double max_rel_error = 0.0;
    int predictors_checked = 0;
    int empty_cells = 0;
    bool pass = false;
};

// total in-sample error == within-cell variance + projection distance for
// random hard predictors on the given cells
DecompositionReport hard_partition_decomposition_check(const Mat& w_star,
                                                       const std::vector<int>& labels,
                                                       int n_predictors, Rng& rng);

struct SoftDecompReport {
    double max_identity_rel = 0.0; // pointwise identity residual
    double lhs = 0.0;              // Monte-Carlo E ||w_hat - w*||^2
    double rhs = 0.0;              // expert + gate quadratic bound
    bool pass = false;
};

// random gates/experts instantiation of the expert/gate decomposition:
// pointwise identity to 1e-10 and the quadratic upper bound on MC means
SoftDecompReport soft_decomposition_check(int instantiations, Rng& rng);

struct RateSweepConfig {
    std::vector<int> n_grid = {500, 1000, 2000, 4000, 8000, 16000};
    int seeds_per_n = 8;
    int j = 6;
    int k = 2;          // 1 collapses the oracle gate onto pooled
    int m_library = 40; // decision library size for data generation
    double c_m = 1.0;   // hard sweep bin count: round(c_m * n^(1/3))
    double tau = 1.2;
    int n_eval = 4000;
    std::uint64_t seed = 0;

    void validate() const; // >= 4 strictly increasing n values
};

struct RateSweepResult {
    std::vector<int> n_grid;
    std::vector<double> mean_mse; // per n, averaged over seeds
    Mat per_seed_mse;             // seeds x n
    double slope = 0.0;           // OLS slope of log mean MSE vs log n
    std::vector<int> bins_used;   // hard sweep: first-seed bin count per n
    int merged_bins = 0;
    long long eval_rows = 0;            // regret rows audited across all (n, seed) fits
    long long regret_violations = 0; // margin-transfer violations among them
};

// balanced-M hard estimator: equal-mass bins on the Gaussian-CDF transform
// of the 1-D signal, per-bin logistic on (1, z)
RateSweepResult hard_rate_sweep(const RateSweepConfig& cfg);
// oracle-gate soft estimator on the same data protocol
RateSweepResult soft_rate_sweep(const RateSweepConfig& cfg);

struct RegretTransferReport {
    long long rows = 0;
    long long violations = 0;
    double mean_regret = 0.0;
    double mean_delta_sq = 0.0;
    double best_eta = 0.0;
    double localized_bound = 0.0; // min over eta of 2 eta P(gamma <= 2 eta) + 2 E[delta^2]/eta
    bool pass = false;
};

// hard check of R <= 2 delta 1{gamma <= 2 delta} on every row, plus the
// localized bound report
RegretTransferReport regret_transfer_audit(const std::vector<RegretRecord>& rows);

// audit over random (w*, w_hat, library) triples: library rows uniform on
// [-1, 1]^j, w* ~ N(0, I), w_hat = w* + scale * N(0, I) with log-uniform
// scale across four orders of magnitude
RegretTransferReport random_triple_audit(long long triples, int j, int m, Rng& rng);

} // namespace otss::theory
