#include "otss/models.hpp"

#include "otss/glm.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace otss::models {

HardRoutedModel::HardRoutedModel(Mat router_coef, Mat experts)
    : router_coef_(std::move(router_coef)), experts_(std::move(experts)) {
    if (router_coef_.rows() != experts_.rows())
        throw std::invalid_argument("HardRoutedModel: router/expert K mismatch");
}

const std::string& HardRoutedModel::name() const {
    static const std::string n = "hard";
    return n;
}

int HardRoutedModel::route(const ContextVector& x) const {
    const Vec s = router_coef_ * context_features(x);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < s.size(); ++i)
        if (s[i] > s[best]) best = i;
    return static_cast<int>(best);
}

Vec HardRoutedModel::predict_w(const ContextVector& x) const {
    return experts_.row(route(x)).transpose();
}

int HardRoutedModel::param_count() const {
    return static_cast<int>(router_coef_.size() + experts_.size());
}

namespace {

struct HardRun {
    Vec baseline;           // P
    Mat experts;            // K x J
    std::vector<int> labels;
    int rounds = 0;
};

// per-record NLL under expert k given shared baseline scores
double record_nll(double base_score, const Vec& beta, const Vec& z, double y) {
    const double s = base_score + beta.dot(z);
    return glm::log1pexp(s) - y * s;
}

HardRun alternate_hard(const LoggedDataset& train, const Mat& c_train, Vec baseline, Mat experts,
                       double lambda) {
    const Eigen::Index n = train.n();
    const Eigen::Index p = c_train.cols();
    const Eigen::Index j = train.factor_dim();
    const int k = static_cast<int>(experts.rows());

    HardRun run;
    run.labels.assign(static_cast<size_t>(n), 0);

    Vec mask = Vec::Ones(p + k * j);
    mask.head(p).setZero();
    Vec warm(p + k * j);

    for (int round = 0; round < 50; ++round) {
        run.rounds = round + 1;
        const Vec base_scores = c_train * baseline;

        // (a) per-record best-loss assignment, lowest index on ties
        std::vector<int> labels(static_cast<size_t>(n));
        Vec best_nll(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            int arg = 0;
            double best = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double nll = record_nll(base_scores[i], experts.row(c).transpose(),
                                              train.logged_factors.row(i).transpose(),
                                              train.outcomes[i]);
                if (nll < best) {
                    best = nll;
                    arg = c;
                }
            }
            labels[static_cast<size_t>(i)] = arg;
            best_nll[i] = best;
        }

        // starvation: hand each empty expert the currently worst-fit record
        std::vector<int> counts(static_cast<size_t>(k), 0);
        for (int lab : labels) ++counts[static_cast<size_t>(lab)];
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) continue;
            Eigen::Index worst = -1;
            double worst_nll = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto lab = static_cast<size_t>(labels[static_cast<size_t>(i)]);
                if (counts[lab] <= 1) continue; // never starve the donor
                if (best_nll[i] > worst_nll) {
                    worst_nll = best_nll[i];
                    worst = i;
                }
            }
            if (worst < 0) break;
            --counts[static_cast<size_t>(labels[static_cast<size_t>(worst)])];
            labels[static_cast<size_t>(worst)] = c;
            ++counts[static_cast<size_t>(c)];
        }

        const bool stable = labels == run.labels && round > 0;
        run.labels = std::move(labels);
        if (stable) break;

        // (b) joint refit of the shared baseline and all assigned experts
        Mat phi = Mat::Zero(n, p + k * j);
        phi.leftCols(p) = c_train;
        for (Eigen::Index i = 0; i < n; ++i)
            phi.row(i).segment(p + run.labels[static_cast<size_t>(i)] * j, j) =
                train.logged_factors.row(i);
        warm.head(p) = baseline;
        for (int c = 0; c < k; ++c) warm.segment(p + c * j, j) = experts.row(c).transpose();
        const auto fit =
            glm::fit_logistic(phi, train.outcomes, lambda, mask, nullptr, -1.0, 30, 1e-10, &warm);
        baseline = fit.coef.head(p);
        for (int c = 0; c < k; ++c) experts.row(c) = fit.coef.segment(p + c * j, j).transpose();
    }

    run.baseline = std::move(baseline);
    run.experts = std::move(experts);
    return run;
}

} // namespace

ModelPtr fit_hard_routed(const LoggedDataset& train, const LoggedDataset& val, int k,
                         const FitConfig& cfg) {
    cfg.validate();
    if (k < 1) throw std::invalid_argument("fit_hard_routed: K must be >= 1");

    const Mat c_train = context_feature_matrix(train.contexts);
    const Mat c_val = context_feature_matrix(val.contexts);
    const Eigen::Index p = c_train.cols();
    const Eigen::Index j = train.factor_dim();

    const auto pooled_any = fit_pooled(train, val, cfg);
    const auto* pooled = dynamic_cast<const PooledModel*>(pooled_any.get());
    const Vec pooled_baseline = pooled->coef().head(p);
    const Vec pooled_experts = pooled->coef().tail(j);

    Rng rng = Rng::stream(cfg.seed, "fit/hard");
    std::vector<Mat> inits(static_cast<size_t>(cfg.restarts));
    for (auto& init : inits) {
        init.resize(k, j);
        for (int c = 0; c < k; ++c)
            for (Eigen::Index t = 0; t < j; ++t)
                init(c, t) = pooled_experts[t] + rng.gaussian(0.0, 0.2);
    }

    double best_val = std::numeric_limits<double>::infinity();
    Mat best_router, best_experts;
    double best_lambda = cfg.reg_grid.front();
    int best_restart = -1;

    for (double lambda : cfg.reg_grid) {
        for (int r = 0; r < cfg.restarts; ++r) {
            const HardRun run = alternate_hard(train, c_train, pooled_baseline,
                                               inits[static_cast<size_t>(r)], lambda);

            // routing classifier on the final assignments
            Mat targets = Mat::Zero(train.n(), k);
            for (int i = 0; i < train.n(); ++i)
                targets(i, run.labels[static_cast<size_t>(i)]) = 1.0;
            const auto router = glm::fit_softmax(c_train, targets, 1e-4);

            // deployed validation loss: routed expert plus shared baseline
            const Mat route_scores = c_val * router.coef.transpose();
            Vec scores = c_val * run.baseline;
            for (int i = 0; i < val.n(); ++i) {
                Eigen::Index arg = 0;
                route_scores.row(i).maxCoeff(&arg);
                scores[i] += run.experts.row(arg).dot(val.logged_factors.row(i));
            }
            const double val_nll = glm::bernoulli_nll(scores, val.outcomes);
            if (val_nll < best_val) {
                best_val = val_nll;
                best_router = router.coef;
                best_experts = run.experts;
                best_lambda = lambda;
                best_restart = r;
            }
        }
    }
    if (best_restart < 0) throw std::runtime_error("fit_hard_routed: no run selected");

    auto model = std::make_unique<HardRoutedModel>(best_router, best_experts);
    model->selected_hypers["K"] = k;
    model->selected_hypers["reg_lambda"] = best_lambda;
    model->selected_hypers["restart"] = best_restart;
    return model;
}

} // namespace otss::models
