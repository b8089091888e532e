#include "otss/bench.hpp"

#include "otss/glm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace otss::bench {

int BenchConfig::n_val() const {
    return std::max(100, static_cast<int>(std::floor(0.2 * n_train)));
}

void BenchConfig::validate() const {
    if (n_total < 1 || n_train < 1) throw std::invalid_argument("BenchConfig: sample sizes must be positive");
    if (n_train > n_total) throw std::invalid_argument("BenchConfig: n_train exceeds n_total");
    if (n_train - n_val() < 1)
        throw std::invalid_argument("BenchConfig: n_train too small to carve the validation slice");
    if (d_sig < 1 || d_nuis < 0) throw std::invalid_argument("BenchConfig: bad context dims");
    if (J < 1 || M < 1 || K < 1) throw std::invalid_argument("BenchConfig: J, M, K must be positive");
    if (tau < 0.0) throw std::invalid_argument("BenchConfig: tau must be nonnegative");
    if (nuisance_scale < 0.0) throw std::invalid_argument("BenchConfig: nuisance_scale must be nonnegative");
    if (rand_level < 0.0) throw std::invalid_argument("BenchConfig: rand_level must be nonnegative");
}

double true_lambda(const TwoExpertTruth& truth, const ContextVector& x) {
    if (truth.u.size() != x.signal.size())
        throw std::invalid_argument("true_lambda: signal dim mismatch");
    return glm::sigmoid(truth.tau * truth.u.dot(x.signal));
}

Vec true_weight_two_expert(const TwoExpertTruth& truth, const ContextVector& x) {
    if (truth.beta1.size() != truth.beta2.size())
        throw std::invalid_argument("true_weight_two_expert: expert dim mismatch");
    const double lam = true_lambda(truth, x);
    return lam * truth.beta1 + (1.0 - lam) * truth.beta2;
}

Vec gate_scores(const MatchedKTruth& truth, const ContextVector& x) {
    if (truth.gate_directions.cols() != x.signal.size())
        throw std::invalid_argument("gate_scores: signal dim mismatch");
    return truth.gate_directions * x.signal;
}

Vec true_gate_matched_k(const MatchedKTruth& truth, const ContextVector& x) {
    const Vec s = gate_scores(truth, x);
    const auto k = s.size();
    if (truth.mode == TruthMode::hard) {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < k; ++i)
            if (s[i] > s[best]) best = i;
        Vec g = Vec::Zero(k);
        g[best] = 1.0;
        return g;
    }
    if (!(truth.temperature > 0.0))
        throw std::invalid_argument("true_gate_matched_k: soft mode needs a positive temperature");
    const Vec scaled = s / truth.temperature;
    const double m = scaled.maxCoeff();
    Vec g = (scaled.array() - m).exp();
    g /= g.sum();
    return g;
}

Vec true_weight_matched_k(const MatchedKTruth& truth, const ContextVector& x) {
    const Vec g = true_gate_matched_k(truth, x);
    return truth.experts.transpose() * g;
}

Vec true_weight(const Truth& truth, const ContextVector& x) {
    if (const auto* two = std::get_if<TwoExpertTruth>(&truth))
        return true_weight_two_expert(*two, x);
    return true_weight_matched_k(std::get<MatchedKTruth>(truth), x);
}

Vec true_gate(const Truth& truth, const ContextVector& x) {
    if (const auto* two = std::get_if<TwoExpertTruth>(&truth)) {
        const double lam = true_lambda(*two, x);
        Vec g(2);
        g << lam, 1.0 - lam;
        return g;
    }
    return true_gate_matched_k(std::get<MatchedKTruth>(truth), x);
}

const Vec& baseline_coef(const Truth& truth) {
    if (const auto* two = std::get_if<TwoExpertTruth>(&truth)) return two->baseline_coef;
    return std::get<MatchedKTruth>(truth).baseline_coef;
}

double baseline_value(const Truth& truth, const ContextVector& x) {
    const Vec& c = baseline_coef(truth);
    if (c.size() != x.dim() + 1)
        throw std::invalid_argument("baseline_value: coefficient dim mismatch");
    return c[0] + c.tail(x.dim()).dot(x.full());
}

int truth_k(const Truth& truth) {
    if (std::holds_alternative<TwoExpertTruth>(truth)) return 2;
    return static_cast<int>(std::get<MatchedKTruth>(truth).experts.rows());
}

Mat truth_experts(const Truth& truth) {
    if (const auto* two = std::get_if<TwoExpertTruth>(&truth)) {
        Mat e(2, two->beta1.size());
        e.row(0) = two->beta1.transpose();
        e.row(1) = two->beta2.transpose();
        return e;
    }
    return std::get<MatchedKTruth>(truth).experts;
}

namespace {

double mean_top_prob(const MatchedKTruth& truth, const std::vector<ContextVector>& contexts,
                     double temperature) {
    MatchedKTruth probe = truth;
    probe.temperature = temperature;
    double total = 0.0;
    for (const auto& x : contexts) total += true_gate_matched_k(probe, x).maxCoeff();
    return total / static_cast<double>(contexts.size());
}

} // namespace

double calibrate_temperature(const MatchedKTruth& truth,
                             const std::vector<ContextVector>& contexts,
                             double target_top_prob) {
    if (truth.mode != TruthMode::soft)
        throw std::invalid_argument("calibrate_temperature: truth is not soft mode");
    if (contexts.size() < 1000)
        throw std::invalid_argument("calibrate_temperature: need at least 1000 calibration contexts");
    const int k = static_cast<int>(truth.experts.rows());
    if (!(target_top_prob > 1.0 / k && target_top_prob < 1.0))
        throw std::invalid_argument("calibrate_temperature: target outside (1/K, 1)");

    double lo = 1e-3, hi = 1e3; // top prob decreases in t: lo end ~ one-hot, hi end ~ uniform
    const double top_lo = mean_top_prob(truth, contexts, lo);
    const double top_hi = mean_top_prob(truth, contexts, hi);
    const double tol = 0.01;
    if (target_top_prob > top_lo + tol || target_top_prob < top_hi - tol) {
        std::ostringstream msg;
        msg << "calibrate_temperature: target " << target_top_prob
            << " unreachable; achievable mean top prob is [" << top_hi << ", " << top_lo
            << "] over t in [1e-3, 1e3]";
        throw std::runtime_error(msg.str());
    }
    // bisection on log t against the monotone map t -> mean top prob
    for (int it = 0; it < 80; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (mean_top_prob(truth, contexts, mid) > target_top_prob)
            lo = mid;
        else
            hi = mid;
    }
    const double t = std::sqrt(lo * hi);
    const double achieved = mean_top_prob(truth, contexts, t);
    if (std::abs(achieved - target_top_prob) > tol) {
        std::ostringstream msg;
        msg << "calibrate_temperature: bisection landed at t=" << t << " with mean top prob "
            << achieved << ", target " << target_top_prob;
        throw std::runtime_error(msg.str());
    }
    return t;
}

ContextVector sample_context(const BenchConfig& config, Rng& rng) {
    Vec sig(config.d_sig), nui(config.d_nuis);
    for (int i = 0; i < config.d_sig; ++i) sig[i] = rng.gaussian();
    for (int i = 0; i < config.d_nuis; ++i) nui[i] = config.nuisance_scale * rng.gaussian();
    return ContextVector(std::move(sig), std::move(nui));
}

double outcome_probability(const Truth& truth, const ContextVector& x, const Vec& z) {
    const Vec w = true_weight(truth, x);
    if (w.size() != z.size()) throw std::invalid_argument("outcome_probability: factor dim mismatch");
    return glm::sigmoid(baseline_value(truth, x) + w.dot(z));
}

int simulate_outcome(const Truth& truth, const ContextVector& x, const Vec& z, Rng& rng) {
    return rng.bernoulli(outcome_probability(truth, x, z)) ? 1 : 0;
}

DecisionLibrary make_library(const BenchConfig& config) {
    Rng rng = Rng::stream(config.seed, "library");
    Mat factors(config.M, config.J);
    for (int m = 0; m < config.M; ++m)
        for (int j = 0; j < config.J; ++j) factors(m, j) = rng.uniform(-1.0, 1.0);
    return DecisionLibrary(std::move(factors));
}

namespace {

Vec draw_baseline_coef(const BenchConfig& config) {
    Rng rng = Rng::stream(config.seed, "truth/baseline");
    Vec coef(config.context_dim() + 1);
    for (Eigen::Index i = 0; i < coef.size(); ++i) coef[i] = rng.gaussian(0.0, 0.3);
    return coef;
}

std::vector<ContextVector> calibration_contexts(const BenchConfig& config) {
    Rng rng = Rng::stream(config.seed, "truth/calibrate");
    std::vector<ContextVector> contexts;
    contexts.reserve(2000);
    for (int i = 0; i < 2000; ++i) contexts.push_back(sample_context(config, rng));
    return contexts;
}

} // namespace

TwoExpertTruth make_two_expert_truth(const BenchConfig& config) {
    TwoExpertTruth truth;
    Rng erng = Rng::stream(config.seed, "truth/experts");
    truth.beta1.resize(config.J);
    truth.beta2.resize(config.J);
    for (int j = 0; j < config.J; ++j) truth.beta1[j] = erng.gaussian();
    for (int j = 0; j < config.J; ++j) truth.beta2[j] = erng.gaussian();

    Rng urng = Rng::stream(config.seed, "truth/u");
    truth.u.resize(config.d_sig);
    for (int i = 0; i < config.d_sig; ++i) truth.u[i] = urng.gaussian();
    truth.u.normalize();

    truth.tau = config.tau;
    truth.baseline_coef = draw_baseline_coef(config);
    return truth;
}

MatchedKTruth make_matched_k_truth(const BenchConfig& config, TruthMode mode) {
    MatchedKTruth truth;
    truth.mode = mode;
    truth.rand_level = config.rand_level;

    Rng erng = Rng::stream(config.seed, "truth/experts");
    truth.experts.resize(config.K, config.J);
    for (int k = 0; k < config.K; ++k)
        for (int j = 0; j < config.J; ++j) truth.experts(k, j) = erng.gaussian();

    Rng grng = Rng::stream(config.seed, "truth/gate");
    truth.gate_directions.resize(config.K, config.d_sig);
    for (int k = 0; k < config.K; ++k)
        for (int i = 0; i < config.d_sig; ++i) truth.gate_directions(k, i) = grng.gaussian();

    // the score-geometry perturbation is drawn once here and frozen
    Rng prng = Rng::stream(config.seed, "truth/perturb");
    for (int k = 0; k < config.K; ++k)
        for (int i = 0; i < config.d_sig; ++i)
            truth.gate_directions(k, i) += config.rand_level * prng.gaussian();

    truth.baseline_coef = draw_baseline_coef(config);

    if (mode == TruthMode::soft)
        truth.temperature =
            calibrate_temperature(truth, calibration_contexts(config), config.target_top_prob);
    return truth;
}

namespace {

LoggedDataset empty_dataset(const BenchConfig& config, const DecisionLibrary& lib, int n) {
    LoggedDataset ds;
    ds.contexts.resize(n, config.context_dim());
    ds.logged_factors.resize(n, config.J);
    ds.decisions.resize(n);
    ds.outcomes.resize(n);
    ds.d_sig = config.d_sig;
    ds.library = lib;
    return ds;
}

} // namespace

BenchmarkInstance generate_benchmark(const BenchConfig& config, Family family, TruthMode mode) {
    config.validate();

    BenchmarkInstance inst;
    inst.config = config;
    inst.family = family;
    if (family == Family::two_expert)
        inst.truth = make_two_expert_truth(config);
    else
        inst.truth = make_matched_k_truth(config, mode);
    inst.library = make_library(config);

    // Logged records: contexts, decisions, outcomes each come from their
    // own stream, consumed one record at a time, so a larger n_train
    // extends the sequence without disturbing its prefix.
    Rng crng = Rng::stream(config.seed, "records/contexts");
    Rng drng = Rng::stream(config.seed, "records/decisions");
    Rng orng = Rng::stream(config.seed, "records/outcomes");

    const int n_val = config.n_val();
    const int n_fit = config.n_train - n_val;
    LoggedDataset train = empty_dataset(config, inst.library, n_fit);
    LoggedDataset val = empty_dataset(config, inst.library, n_val);

    for (int i = 0; i < config.n_train; ++i) {
        const ContextVector x = sample_context(config, crng);
        const int d = static_cast<int>(drng.uniform_int(static_cast<std::uint64_t>(config.M)));
        const Vec z = inst.library.factor(d);
        const int y = simulate_outcome(inst.truth, x, z, orng);

        LoggedDataset& ds = i < n_fit ? train : val;
        const int row = i < n_fit ? i : i - n_fit;
        ds.contexts.row(row) = x.full().transpose();
        ds.logged_factors.row(row) = z.transpose();
        ds.decisions[row] = d;
        ds.outcomes[row] = y;
    }
    train.validate();
    val.validate();
    inst.train = std::move(train);
    inst.val = std::move(val);

    Rng evrng = Rng::stream(config.seed, "eval/contexts");
    inst.eval.reserve(config.n_eval());
    for (int i = 0; i < config.n_eval(); ++i) {
        EvalPoint pt;
        pt.context = sample_context(config, evrng);
        pt.w_star = true_weight(inst.truth, pt.context);
        inst.eval.push_back(std::move(pt));
    }
    return inst;
}

} // namespace otss::bench
