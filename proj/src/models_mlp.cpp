#include "otss/models.hpp"

#include "otss/glm.hpp"
#include "train_loop.hpp"

#include <limits>
#include <stdexcept>

namespace otss::models {

Vec MlpParams::predict_w(const ContextVector& x) const {
    const Vec c = context_features(x);
    const Vec h = (hidden * c).array().tanh();
    Vec hb(h.size() + 1);
    hb[0] = 1.0;
    hb.tail(h.size()) = h;
    return output * hb;
}

MlpModel::MlpModel(MlpParams params) : params_(std::move(params)) {
    if (params_.output.cols() != params_.hidden.rows() + 1)
        throw std::invalid_argument("MlpModel: hidden/output shape mismatch");
    if (params_.baseline.size() != params_.hidden.cols())
        throw std::invalid_argument("MlpModel: baseline dim mismatch");
}

const std::string& MlpModel::name() const {
    static const std::string n = "mlp";
    return n;
}

Vec MlpModel::predict_w(const ContextVector& x) const { return params_.predict_w(x); }

int MlpModel::param_count() const {
    return static_cast<int>(params_.hidden.size() + params_.output.size() +
                            params_.baseline.size());
}

// ---- flattened objective -----------------------------------------------------

int MlpProblem::dim() const {
    const int p = static_cast<int>(ctx_features.cols());
    const int j = static_cast<int>(factors.cols());
    return hidden * p + j * (hidden + 1) + p;
}

Vec MlpProblem::pack(const MlpParams& params) const {
    const Eigen::Index p = ctx_features.cols();
    const Eigen::Index j = factors.cols();
    Vec theta(dim());
    Eigen::Index off = 0;
    for (Eigen::Index r = 0; r < hidden; ++r, off += p)
        theta.segment(off, p) = params.hidden.row(r).transpose();
    for (Eigen::Index r = 0; r < j; ++r, off += hidden + 1)
        theta.segment(off, hidden + 1) = params.output.row(r).transpose();
    theta.segment(off, p) = params.baseline;
    return theta;
}

MlpParams MlpProblem::unpack(const Vec& theta) const {
    const Eigen::Index p = ctx_features.cols();
    const Eigen::Index j = factors.cols();
    MlpParams params;
    params.hidden.resize(hidden, p);
    params.output.resize(j, hidden + 1);
    Eigen::Index off = 0;
    for (Eigen::Index r = 0; r < hidden; ++r, off += p)
        params.hidden.row(r) = theta.segment(off, p).transpose();
    for (Eigen::Index r = 0; r < j; ++r, off += hidden + 1)
        params.output.row(r) = theta.segment(off, hidden + 1).transpose();
    params.baseline = theta.segment(off, p);
    return params;
}

namespace {

struct MlpForward {
    Mat act;    // n x (H+1), column 0 ones
    Mat w;      // n x J
    Vec scores; // n
};

MlpForward mlp_forward(const MlpProblem& prob, const MlpParams& params) {
    MlpForward f;
    const Eigen::Index n = prob.ctx_features.rows();
    f.act.resize(n, prob.hidden + 1);
    f.act.col(0).setOnes();
    f.act.rightCols(prob.hidden) =
        (prob.ctx_features * params.hidden.transpose()).array().tanh();
    f.w = f.act * params.output.transpose();
    f.scores = prob.ctx_features * params.baseline +
               f.w.cwiseProduct(prob.factors).rowwise().sum();
    return f;
}

} // namespace

double MlpProblem::loss(const Vec& theta) const {
    const MlpParams params = unpack(theta);
    const MlpForward f = mlp_forward(*this, params);
    return glm::bernoulli_nll(f.scores, outcomes) +
           reg_lambda * (params.hidden.squaredNorm() + params.output.squaredNorm());
}

Vec MlpProblem::grad(const Vec& theta) const {
    const Eigen::Index n = ctx_features.rows();
    const MlpParams params = unpack(theta);
    const MlpForward f = mlp_forward(*this, params);

    Vec ds(n);
    for (Eigen::Index i = 0; i < n; ++i)
        ds[i] = (glm::sigmoid(f.scores[i]) - outcomes[i]) / static_cast<double>(n);

    const Vec d_baseline = ctx_features.transpose() * ds;
    const Mat dw = factors.array().colwise() * ds.array(); // n x J
    const Mat d_output = dw.transpose() * f.act + 2.0 * reg_lambda * params.output;
    const Mat d_act = dw * params.output.rightCols(hidden);            // n x H
    const Mat d_pre =
        d_act.array() * (1.0 - f.act.rightCols(hidden).array().square()); // tanh'
    const Mat d_hidden = d_pre.transpose() * ctx_features + 2.0 * reg_lambda * params.hidden;

    MlpParams grads;
    grads.hidden = d_hidden;
    grads.output = d_output;
    grads.baseline = d_baseline;
    return pack(grads);
}

MlpProblem make_mlp_problem(const LoggedDataset& ds, int hidden, double reg_lambda) {
    MlpProblem prob;
    prob.ctx_features = context_feature_matrix(ds.contexts);
    prob.factors = ds.logged_factors;
    prob.outcomes = ds.outcomes;
    prob.hidden = hidden;
    prob.reg_lambda = reg_lambda;
    return prob;
}

// ---- fit ----------------------------------------------------------------------

ModelPtr fit_mlp_contextual(const LoggedDataset& train, const LoggedDataset& val,
                            const FitConfig& cfg) {
    cfg.validate();
    const int hidden = 32;
    const Eigen::Index p = train.context_dim() + 1;

    const auto pooled_any = fit_pooled(train, val, cfg);
    const auto* pooled = dynamic_cast<const PooledModel*>(pooled_any.get());
    const Vec pooled_baseline = pooled->coef().head(p);

    // the MLP is a smooth baseline, not the contribution under study, so it
    // gets a lighter restart budget than the gated fits
    const int restarts = std::min(cfg.restarts, 3);
    Rng rng = Rng::stream(cfg.seed, "fit/mlp");
    std::vector<MlpParams> inits(static_cast<size_t>(restarts));
    for (auto& init : inits) {
        init.hidden.resize(hidden, p);
        const double scale = 1.0 / std::sqrt(static_cast<double>(p));
        for (Eigen::Index r = 0; r < hidden; ++r)
            for (Eigen::Index c = 0; c < p; ++c) init.hidden(r, c) = rng.gaussian(0.0, scale);
        init.output.resize(train.factor_dim(), hidden + 1);
        for (Eigen::Index r = 0; r < init.output.rows(); ++r)
            for (Eigen::Index c = 0; c < init.output.cols(); ++c)
                init.output(r, c) = rng.gaussian(0.0, 0.1);
        init.baseline = pooled_baseline;
    }

    MlpProblem val_prob = make_mlp_problem(val, hidden, 0.0);

    double best_val = std::numeric_limits<double>::infinity();
    double best_val_init = std::numeric_limits<double>::infinity();
    Vec best_theta;
    double best_lambda = 0.0;
    int best_restart = -1;
    int attempted = 0;

    for (double lambda : cfg.reg_grid) {
        MlpProblem prob = make_mlp_problem(train, hidden, lambda);
        for (int r = 0; r < restarts; ++r) {
            ++attempted;
            const Vec theta0 = prob.pack(inits[static_cast<size_t>(r)]);
            const auto run = detail::train_adam(
                theta0, [&](const Vec& th, Vec& g) { g = prob.grad(th); return prob.loss(th); },
                [&](const Vec& th) { return val_prob.loss(th); }, cfg);
            if (run.diverged) continue;
            if (run.val_nll < best_val) {
                best_val = run.val_nll;
                best_val_init = run.val_nll_init;
                best_theta = run.theta;
                best_lambda = lambda;
                best_restart = r;
            }
        }
    }
    if (best_restart < 0)
        throw std::runtime_error("fit_mlp_contextual: all " + std::to_string(attempted) +
                                 " restarts diverged");

    MlpProblem shape = make_mlp_problem(train, hidden, best_lambda);
    auto model = std::make_unique<MlpModel>(shape.unpack(best_theta));
    model->selected_hypers["reg_lambda"] = best_lambda;
    model->selected_hypers["restart"] = best_restart;
    model->selected_hypers["val_nll"] = best_val;
    model->selected_hypers["val_nll_start"] = best_val_init;
    return model;
}

} // namespace otss::models
