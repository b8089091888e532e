#include "otss/eval.hpp"

#include "otss/decision.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace otss::eval {

EvalResult evaluate(const models::WeightModel& model, const std::vector<bench::EvalPoint>& points,
                    const DecisionLibrary& lib) {
    if (points.empty()) throw std::invalid_argument("evaluate: empty evaluation set");
    EvalResult res;
    res.records.reserve(points.size());
    for (const bench::EvalPoint& pt : points) {
        const Vec w_hat = model.predict_w(pt.context);
        res.weight_mse += (w_hat - pt.w_star).squaredNorm();
        RegretRecord rec = regret(pt.w_star, w_hat, lib);
        res.mean_regret += rec.regret;
        if (rec.chosen_index == rec.oracle_index) res.match_rate += 1.0;
        res.records.push_back(std::move(rec));
    }
    const double n = static_cast<double>(points.size());
    res.weight_mse /= n;
    res.mean_regret /= n;
    res.match_rate /= n;
    return res;
}

std::optional<double> gate_effective_experts(const models::WeightModel& model,
                                             const std::vector<bench::EvalPoint>& points) {
    if (points.empty()) throw std::invalid_argument("gate_effective_experts: empty evaluation set");
    double mean_entropy = 0.0;
    for (const bench::EvalPoint& pt : points) {
        const std::optional<Vec> gate = model.gate(pt.context);
        if (!gate) return std::nullopt;
        double h = 0.0;
        for (int k = 0; k < gate->size(); ++k) {
            const double p = (*gate)[k];
            if (p > 0.0) h -= p * std::log(p);
        }
        mean_entropy += h;
    }
    return std::exp(mean_entropy / static_cast<double>(points.size()));
}

BootstrapResult paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b,
                                 int resamples, Rng& rng) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("paired_bootstrap: input lengths differ or are empty");
    if (resamples < 40) throw std::invalid_argument("paired_bootstrap: too few resamples");
    const int n = static_cast<int>(a.size());
    std::vector<double> diff(n);
    for (int i = 0; i < n; ++i) diff[i] = a[i] - b[i];

    BootstrapResult res;
    res.resamples = resamples;
    for (double d : diff) res.mean_diff += d;
    res.mean_diff /= n;

    std::vector<double> means(resamples);
    for (int r = 0; r < resamples; ++r) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += diff[rng.uniform_int(static_cast<std::uint64_t>(n))];
        means[r] = s / n;
    }
    std::sort(means.begin(), means.end());
    // symmetric percentile indices, so swapping (a, b) mirrors the interval
    const int lo_idx = static_cast<int>(std::llround(0.025 * (resamples - 1)));
    const int hi_idx = resamples - 1 - lo_idx;
    // the interval always covers the observed mean difference
    res.ci_lo = std::min(means[lo_idx], res.mean_diff);
    res.ci_hi = std::max(means[hi_idx], res.mean_diff);
    return res;
}

models::ModelPtr timed_fit(const std::function<models::ModelPtr()>& fit) {
    const auto start = std::chrono::steady_clock::now();
    models::ModelPtr model = fit();
    const auto stop = std::chrono::steady_clock::now();
    model->fit_seconds = std::chrono::duration<double>(stop - start).count();
    return model;
}

} // namespace otss::eval
