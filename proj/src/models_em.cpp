#include "otss/models.hpp"

#include "otss/glm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace otss::models {

EMModel::EMModel(Mat gate_coef, Mat experts)
    : gate_coef_(std::move(gate_coef)), experts_(std::move(experts)) {
    if (gate_coef_.rows() != experts_.rows())
        throw std::invalid_argument("EMModel: gate/expert K mismatch");
}

const std::string& EMModel::name() const {
    static const std::string n = "em";
    return n;
}

Vec EMModel::gate_probs(const ContextVector& x) const {
    const Vec s = gate_coef_ * context_features(x);
    const double m = s.maxCoeff();
    Vec g = (s.array() - m).exp();
    g /= g.sum();
    return g;
}

Vec EMModel::predict_w(const ContextVector& x) const {
    return experts_.transpose() * gate_probs(x);
}

int EMModel::param_count() const {
    return static_cast<int>(gate_coef_.size() + experts_.size());
}

namespace {

struct EMRun {
    Mat components;  // K x (1 + D_x + J)
    Mat resp;        // n x K final responsibilities
    Vec mixing;
    double loglik = -std::numeric_limits<double>::infinity(); // penalized, mean scale
    int rounds = 0;
};

// penalized observed-data mean log-likelihood and responsibilities
double e_step(const Mat& u, const Vec& y, const Mat& components, const Vec& mixing,
              double lambda, const Vec& mask, Mat& resp) {
    const Eigen::Index n = u.rows();
    const Eigen::Index k = components.rows();
    const Mat scores = u * components.transpose(); // n x K
    resp.resize(n, k);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < k; ++c) {
            const double s = scores(i, c);
            const double log_p = y[i] * s - glm::log1pexp(s);
            resp(i, c) = std::log(mixing[c]) + log_p;
            row_max = std::max(row_max, resp(i, c));
        }
        double sum = 0.0;
        for (Eigen::Index c = 0; c < k; ++c) sum += std::exp(resp(i, c) - row_max);
        const double lse = row_max + std::log(sum);
        total += lse;
        for (Eigen::Index c = 0; c < k; ++c) resp(i, c) = std::exp(resp(i, c) - lse);
    }
    double penalty = 0.0;
    for (Eigen::Index c = 0; c < k; ++c)
        penalty += lambda * components.row(c).transpose().cwiseProduct(mask).dot(
                                components.row(c).transpose());
    return total / static_cast<double>(n) - penalty;
}

EMRun run_em(const Mat& u, const Vec& y, Mat components, double lambda, const Vec& mask,
             int max_rounds) {
    const Eigen::Index n = u.rows();
    EMRun run;
    run.mixing = Vec::Constant(components.rows(), 1.0 / static_cast<double>(components.rows()));
    run.components = std::move(components);

    double prev = -std::numeric_limits<double>::infinity();
    for (int round = 0; round < max_rounds; ++round) {
        run.rounds = round + 1;
        const double ll = e_step(u, y, run.components, run.mixing, lambda, mask, run.resp);
        if (ll < prev - 1e-8)
            throw std::runtime_error("fit_em_mixture: EM monotonicity violated (" +
                                     std::to_string(prev) + " -> " + std::to_string(ll) + ")");
        const bool converged = std::abs(ll - prev) < 1e-6 * (1.0 + std::abs(ll));
        prev = ll;
        run.loglik = ll;
        if (converged) break;

        // M-step: mixing weights, then responsibility-weighted ridge refits
        Vec mix = run.resp.colwise().mean().transpose();

        // drop collapsed components and redo the E-step on the survivors
        std::vector<Eigen::Index> keep;
        for (Eigen::Index c = 0; c < mix.size(); ++c)
            if (mix[c] >= 1e-3) keep.push_back(c);
        if (keep.size() < static_cast<size_t>(mix.size()) && !keep.empty()) {
            Mat comp(static_cast<Eigen::Index>(keep.size()), run.components.cols());
            Vec mix2(static_cast<Eigen::Index>(keep.size()));
            for (size_t idx = 0; idx < keep.size(); ++idx) {
                comp.row(static_cast<Eigen::Index>(idx)) = run.components.row(keep[idx]);
                mix2[static_cast<Eigen::Index>(idx)] = mix[keep[idx]];
            }
            run.components = std::move(comp);
            run.mixing = mix2 / mix2.sum();
            prev = -std::numeric_limits<double>::infinity(); // objective changed shape
            continue;
        }
        run.mixing = mix;

        for (Eigen::Index c = 0; c < run.components.rows(); ++c) {
            const Vec w = run.resp.col(c);
            const Vec warm = run.components.row(c).transpose();
            const auto fit = glm::fit_logistic(u, y, lambda, mask, &w,
                                               static_cast<double>(n), 25, 1e-10, &warm);
            run.components.row(c) = fit.coef.transpose();
        }
    }
    // refresh responsibilities at the final parameters
    run.loglik = e_step(u, y, run.components, run.mixing, lambda, mask, run.resp);
    return run;
}

} // namespace

ModelPtr fit_em_mixture(const LoggedDataset& train, const LoggedDataset& val,
                        const FitConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = train.n();
    const Eigen::Index p = train.context_dim() + 1;
    const Eigen::Index j = train.factor_dim();

    const Mat u_train = record_feature_matrix(train);
    const Mat u_val = record_feature_matrix(val);
    const Mat c_train = context_feature_matrix(train.contexts);
    const Mat c_val = context_feature_matrix(val.contexts);

    Vec mask = Vec::Zero(u_train.cols());
    mask.tail(j).setOnes();

    const auto pooled_any = fit_pooled(train, val, cfg);
    const auto* pooled = dynamic_cast<const PooledModel*>(pooled_any.get());

    const int restarts = 2;
    Rng rng = Rng::stream(cfg.seed, "fit/em");

    double best_val = std::numeric_limits<double>::infinity();
    Mat best_gate, best_experts;
    int best_k = cfg.k_grid.front();
    double best_lambda = cfg.reg_grid.front();
    int best_rounds = 0;

    for (int k : cfg.k_grid) {
        // pooled solution with z-part jitter to break component symmetry
        std::vector<Mat> inits(static_cast<size_t>(restarts));
        for (auto& init : inits) {
            init.resize(k, u_train.cols());
            for (int c = 0; c < k; ++c) {
                init.row(c) = pooled->coef().transpose();
                for (Eigen::Index t = 0; t < j; ++t)
                    init(c, p + t) += rng.gaussian(0.0, 0.2);
            }
        }
        for (double lambda : cfg.reg_grid) {
            for (int r = 0; r < restarts; ++r) {
                const EMRun run = run_em(u_train, train.outcomes, inits[static_cast<size_t>(r)],
                                         lambda, mask, 200);

                // post-hoc deployment gate over contexts only
                const auto gate = glm::fit_softmax(c_train, run.resp, 1e-4);

                // deployed validation score: gate-averaged component logits
                const Mat gate_val = glm::softmax_rows(c_val * gate.coef.transpose());
                const Vec scores =
                    (gate_val.cwiseProduct(u_val * run.components.transpose())).rowwise().sum();
                const double val_nll = glm::bernoulli_nll(scores, val.outcomes);
                if (val_nll < best_val) {
                    best_val = val_nll;
                    best_gate = gate.coef;
                    best_experts = run.components.rightCols(j);
                    best_k = k;
                    best_lambda = lambda;
                    best_rounds = run.rounds;
                }
            }
        }
    }

    auto model = std::make_unique<EMModel>(best_gate, best_experts);
    model->selected_hypers["K"] = best_k;
    model->selected_hypers["reg_lambda"] = best_lambda;
    model->selected_hypers["em_rounds"] = best_rounds;
    return model;
}

} // namespace otss::models
