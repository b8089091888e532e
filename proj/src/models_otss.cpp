#include "otss/models.hpp"

#include "otss/glm.hpp"
#include "train_loop.hpp"

#include <limits>
#include <stdexcept>

namespace otss::models {

Vec OTSSParams::gate_alpha(const ContextVector& x) const {
    const Vec s = gate * context_features(x);
    const double m = s.maxCoeff();
    Vec a = (s.array() - m).exp();
    a /= a.sum();
    return a;
}

Vec OTSSParams::predict_w(const ContextVector& x) const {
    return experts.transpose() * gate_alpha(x);
}

OTSSModel::OTSSModel(OTSSParams params) : params_(std::move(params)) {
    if (params_.gate.rows() != params_.experts.rows())
        throw std::invalid_argument("OTSSModel: gate/expert K mismatch");
    if (params_.gate.cols() != params_.baseline.size())
        throw std::invalid_argument("OTSSModel: gate/baseline dim mismatch");
}

const std::string& OTSSModel::name() const {
    static const std::string n = "otss";
    return n;
}

Vec OTSSModel::predict_w(const ContextVector& x) const { return params_.predict_w(x); }

int OTSSModel::param_count() const {
    return static_cast<int>(params_.gate.size() + params_.baseline.size() + params_.experts.size());
}

std::optional<Vec> OTSSModel::gate(const ContextVector& x) const {
    return params_.gate_alpha(x);
}

// ---- flattened objective -----------------------------------------------------

int OTSSProblem::dim() const {
    const int p = static_cast<int>(ctx_features.cols());
    const int j = static_cast<int>(factors.cols());
    return k * p + p + k * j;
}

Vec OTSSProblem::pack(const OTSSParams& params) const {
    const Eigen::Index p = ctx_features.cols();
    const Eigen::Index j = factors.cols();
    Vec theta(dim());
    for (Eigen::Index r = 0; r < k; ++r) theta.segment(r * p, p) = params.gate.row(r).transpose();
    theta.segment(k * p, p) = params.baseline;
    for (Eigen::Index r = 0; r < k; ++r)
        theta.segment(k * p + p + r * j, j) = params.experts.row(r).transpose();
    return theta;
}

OTSSParams OTSSProblem::unpack(const Vec& theta) const {
    const Eigen::Index p = ctx_features.cols();
    const Eigen::Index j = factors.cols();
    OTSSParams params;
    params.gate.resize(k, p);
    params.experts.resize(k, j);
    params.reg_lambda = reg_lambda;
    for (Eigen::Index r = 0; r < k; ++r) params.gate.row(r) = theta.segment(r * p, p).transpose();
    params.baseline = theta.segment(k * p, p);
    for (Eigen::Index r = 0; r < k; ++r)
        params.experts.row(r) = theta.segment(k * p + p + r * j, j).transpose();
    return params;
}

double OTSSProblem::loss(const Vec& theta) const {
    const OTSSParams params = unpack(theta);
    const Mat alpha = glm::softmax_rows(ctx_features * params.gate.transpose());
    const Mat w = alpha * params.experts;
    const Vec s = ctx_features * params.baseline + w.cwiseProduct(factors).rowwise().sum();
    return glm::bernoulli_nll(s, outcomes) +
           reg_lambda * (params.gate.squaredNorm() + params.experts.squaredNorm());
}

Vec OTSSProblem::grad(const Vec& theta) const {
    const Eigen::Index n = ctx_features.rows();
    const Eigen::Index p = ctx_features.cols();
    const Eigen::Index j = factors.cols();
    const OTSSParams params = unpack(theta);

    const Mat alpha = glm::softmax_rows(ctx_features * params.gate.transpose()); // n x K
    const Mat w = alpha * params.experts;                                        // n x J
    const Vec s = ctx_features * params.baseline + w.cwiseProduct(factors).rowwise().sum();

    Vec ds(n);
    for (Eigen::Index i = 0; i < n; ++i)
        ds[i] = (glm::sigmoid(s[i]) - outcomes[i]) / static_cast<double>(n);

    const Vec d_baseline = ctx_features.transpose() * ds;
    const Mat dw = factors.array().colwise() * ds.array();           // n x J
    const Mat d_experts = alpha.transpose() * dw + 2.0 * reg_lambda * params.experts;
    const Mat d_alpha = dw * params.experts.transpose();             // n x K
    Mat d_scores(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double inner = d_alpha.row(i).dot(alpha.row(i));
        d_scores.row(i) = (alpha.row(i).array() * (d_alpha.row(i).array() - inner)).matrix();
    }
    const Mat d_gate = d_scores.transpose() * ctx_features + 2.0 * reg_lambda * params.gate;

    Vec g(dim());
    for (Eigen::Index r = 0; r < k; ++r) g.segment(r * p, p) = d_gate.row(r).transpose();
    g.segment(k * p, p) = d_baseline;
    for (Eigen::Index r = 0; r < k; ++r)
        g.segment(k * p + p + r * j, j) = d_experts.row(r).transpose();
    return g;
}

OTSSProblem make_otss_problem(const LoggedDataset& ds, int k, double reg_lambda) {
    OTSSProblem prob;
    prob.ctx_features = context_feature_matrix(ds.contexts);
    prob.factors = ds.logged_factors;
    prob.outcomes = ds.outcomes;
    prob.k = k;
    prob.reg_lambda = reg_lambda;
    return prob;
}

// ---- fit ----------------------------------------------------------------------

ModelPtr fit_otss(const LoggedDataset& train, const LoggedDataset& val, int k,
                  const FitConfig& cfg) {
    cfg.validate();
    if (k < 1) throw std::invalid_argument("fit_otss: K must be >= 1");
    if (train.n() < 1) throw std::invalid_argument("fit_otss: empty training set");

    const auto pooled_any = fit_pooled(train, val, cfg);
    const auto* pooled = dynamic_cast<const PooledModel*>(pooled_any.get());
    const Eigen::Index p = train.context_dim() + 1;
    const Eigen::Index j = train.factor_dim();
    const Vec pooled_baseline = pooled->coef().head(p);
    const Vec pooled_experts = pooled->coef().tail(j);

    if (k == 1) {
        // a single expert makes the gate inert, and the remaining problem is
        // the convex pooled objective, already solved exactly above
        OTSSParams params;
        params.gate = Mat::Zero(1, p);
        params.baseline = pooled_baseline;
        params.experts = pooled_experts.transpose();
        params.reg_lambda = pooled_any->selected_hypers.at("reg_lambda");
        auto model = std::make_unique<OTSSModel>(std::move(params));
        model->selected_hypers = pooled_any->selected_hypers;
        model->selected_hypers["K"] = 1;
        return model;
    }

    // one init per restart, shared across the reg grid so the grid compares
    // like against like; the first restart sits exactly at the pooled
    // solution with a flat gate, so the selected model never loses to the
    // ungated fit on validation
    Rng rng = Rng::stream(cfg.seed, "fit/otss");
    std::vector<OTSSParams> inits(static_cast<size_t>(cfg.restarts));
    for (size_t idx = 0; idx < inits.size(); ++idx) {
        OTSSParams& init = inits[idx];
        init.gate = Mat::Zero(k, p);
        init.baseline = pooled_baseline;
        init.experts = pooled_experts.transpose().replicate(k, 1);
        if (idx == 0) continue;
        for (Eigen::Index r = 0; r < k; ++r)
            for (Eigen::Index c = 0; c < p; ++c) init.gate(r, c) = rng.gaussian(0.0, 0.1);
        for (Eigen::Index r = 0; r < k; ++r)
            for (Eigen::Index c = 0; c < j; ++c) init.experts(r, c) += rng.gaussian(0.0, 0.2);
    }

    OTSSProblem val_prob = make_otss_problem(val, k, 0.0);

    double best_val = std::numeric_limits<double>::infinity();
    double best_val_init = std::numeric_limits<double>::infinity();
    OTSSParams best_params;
    double best_lambda = 0.0;
    int best_restart = -1;
    int diverged = 0;
    int attempted = 0;

    for (double lambda : cfg.reg_grid) {
        OTSSProblem prob = make_otss_problem(train, k, lambda);
        for (int r = 0; r < cfg.restarts; ++r) {
            ++attempted;
            const Vec theta0 = prob.pack(inits[static_cast<size_t>(r)]);
            const auto run = detail::train_adam(
                theta0, [&](const Vec& th, Vec& g) { g = prob.grad(th); return prob.loss(th); },
                [&](const Vec& th) { return val_prob.loss(th); }, cfg);
            if (run.diverged) {
                ++diverged;
                continue;
            }
            if (run.val_nll < best_val) {
                best_val = run.val_nll;
                best_val_init = run.val_nll_init;
                best_params = prob.unpack(run.theta);
                best_lambda = lambda;
                best_restart = r;
            }
        }
    }
    if (best_restart < 0)
        throw std::runtime_error("fit_otss: all " + std::to_string(attempted) +
                                 " restarts diverged");

    best_params.reg_lambda = best_lambda;
    auto model = std::make_unique<OTSSModel>(std::move(best_params));
    model->selected_hypers["reg_lambda"] = best_lambda;
    model->selected_hypers["restart"] = best_restart;
    model->selected_hypers["K"] = k;
    model->selected_hypers["val_nll"] = best_val;
    model->selected_hypers["val_nll_start"] = best_val_init;
    if (diverged > 0) model->selected_hypers["diverged_restarts"] = diverged;
    return model;
}

// ---- oracle gate ----------------------------------------------------------------

OracleGateModel::OracleGateModel(bench::Truth truth, Mat experts, Vec baseline,
                                 bool ridge_floor_applied)
    : truth_(std::move(truth)), experts_(std::move(experts)), baseline_(std::move(baseline)),
      ridge_floor_applied_(ridge_floor_applied) {}

const std::string& OracleGateModel::name() const {
    static const std::string n = "oracle_gate";
    return n;
}

Vec OracleGateModel::predict_w(const ContextVector& x) const {
    return experts_.transpose() * bench::true_gate(truth_, x);
}

int OracleGateModel::param_count() const {
    return static_cast<int>(experts_.size() + baseline_.size());
}

std::optional<Vec> OracleGateModel::gate(const ContextVector& x) const {
    return bench::true_gate(truth_, x);
}

ModelPtr fit_oracle_gate_soft(const LoggedDataset& train, const bench::Truth& truth,
                              const FitConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = train.n();
    const Eigen::Index p = train.context_dim() + 1;
    const Eigen::Index j = train.factor_dim();
    const int k = bench::truth_k(truth);

    Mat phi(n, p + k * j);
    phi.leftCols(p) = context_feature_matrix(train.contexts);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec alpha = bench::true_gate(truth, train.record(static_cast<int>(i)).context);
        for (int r = 0; r < k; ++r)
            phi.row(i).segment(p + r * j, j) =
                alpha[r] * train.logged_factors.row(i);
    }

    const auto fit = glm::fit_logistic_unpenalized(phi, train.outcomes);
    Mat experts(k, j);
    for (int r = 0; r < k; ++r)
        experts.row(r) = fit.coef.segment(p + r * j, j).transpose();

    auto model = std::make_unique<OracleGateModel>(truth, std::move(experts), fit.coef.head(p),
                                                   fit.ridge_floor_applied);
    model->selected_hypers["ridge_floor"] = fit.ridge_floor_applied ? 1.0 : 0.0;
    return model;
}

} // namespace otss::models
