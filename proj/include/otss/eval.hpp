#pragma once

#include "otss/bench.hpp"
#include "otss/models.hpp"
#include "otss/rng.hpp"
#include "otss/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace otss::eval {

struct EvalResult {
    double weight_mse = 0.0;
    double mean_regret = 0.0;
    double match_rate = 0.0; // fraction of contexts where chosen == oracle
    std::vector<RegretRecord> records;
};

// pure evaluation over the held-out contexts: exact regret per row
EvalResult evaluate(const models::WeightModel& model, const std::vector<bench::EvalPoint>& points,
                    const DecisionLibrary& lib);

// exp of the mean gate entropy; absent for models without a gate
std::optional<double> gate_effective_experts(const models::WeightModel& model,
                                             const std::vector<bench::EvalPoint>& points);

struct BootstrapResult {
    double mean_diff = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    int resamples = 0;
};

// percentile 95% CI of mean(a - b) under paired resampling of the seed rows
BootstrapResult paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b,
                                 int resamples, Rng& rng);

// wall-clock a fit closure; the model comes back with fit_seconds attached
models::ModelPtr timed_fit(const std::function<models::ModelPtr()>& fit);

struct SeedSummary {
    int seed = 0;
    std::string method;
    double weight_mse = 0.0;
    double mean_regret = 0.0;
    double match_rate = 0.0;
    std::optional<double> gate_effective;
    double fit_seconds = 0.0;
    std::map<std::string, double> selected_hypers;
};

} // namespace otss::eval
