#include "otss/models.hpp"

#include "otss/glm.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace otss::models {

void FitConfig::validate() const {
    if (restarts < 1) throw std::invalid_argument("FitConfig: restarts must be >= 1");
    if (max_epochs < 1 || patience < 1) throw std::invalid_argument("FitConfig: epochs/patience must be >= 1");
    if (!(step_size > 0.0)) throw std::invalid_argument("FitConfig: step_size must be positive");
    if (reg_grid.empty()) throw std::invalid_argument("FitConfig: empty reg_grid");
    for (double r : reg_grid)
        if (!(r > 0.0)) throw std::invalid_argument("FitConfig: reg_grid entries must be positive");
    if (k_grid.empty()) throw std::invalid_argument("FitConfig: empty k_grid");
    for (int k : k_grid)
        if (k < 1) throw std::invalid_argument("FitConfig: k_grid entries must be >= 1");
    if (rank_grid.empty()) throw std::invalid_argument("FitConfig: empty rank_grid");
    for (int r : rank_grid)
        if (r < 1) throw std::invalid_argument("FitConfig: rank_grid entries must be >= 1");
}

Vec context_features(const ContextVector& x) {
    Vec c(x.dim() + 1);
    c[0] = 1.0;
    c.tail(x.dim()) = x.full();
    return c;
}

Mat context_feature_matrix(const Mat& contexts) {
    Mat c(contexts.rows(), contexts.cols() + 1);
    c.col(0).setOnes();
    c.rightCols(contexts.cols()) = contexts;
    return c;
}

Mat record_feature_matrix(const LoggedDataset& ds) {
    Mat u(ds.n(), 1 + ds.context_dim() + ds.factor_dim());
    u.col(0).setOnes();
    u.middleCols(1, ds.context_dim()) = ds.contexts;
    u.rightCols(ds.factor_dim()) = ds.logged_factors;
    return u;
}

// ---- pooled ---------------------------------------------------------------

PooledModel::PooledModel(Vec coef, int context_dim, int factor_dim)
    : coef_(std::move(coef)), context_dim_(context_dim), factor_dim_(factor_dim) {
    if (coef_.size() != 1 + context_dim_ + factor_dim_)
        throw std::invalid_argument("PooledModel: coefficient size mismatch");
}

const std::string& PooledModel::name() const {
    static const std::string n = "pooled";
    return n;
}

Vec PooledModel::predict_w(const ContextVector& x) const {
    if (x.dim() != context_dim_) throw std::invalid_argument("pooled predict: context dim mismatch");
    return coef_.tail(factor_dim_);
}

int PooledModel::param_count() const { return static_cast<int>(coef_.size()); }

namespace {

// z-block-only ridge mask over features (1, x_full, z)
Vec pooled_mask(int context_dim, int factor_dim) {
    Vec mask = Vec::Zero(1 + context_dim + factor_dim);
    mask.tail(factor_dim).setOnes();
    return mask;
}

} // namespace

ModelPtr fit_pooled(const LoggedDataset& train, const LoggedDataset& val, const FitConfig& cfg) {
    cfg.validate();
    const Mat u_train = record_feature_matrix(train);
    const Mat u_val = record_feature_matrix(val);
    const Vec mask = pooled_mask(train.context_dim(), train.factor_dim());

    Vec best_coef;
    double best_val = std::numeric_limits<double>::infinity();
    double best_lambda = cfg.reg_grid.front();
    Vec warm = Vec::Zero(u_train.cols());
    for (double lambda : cfg.reg_grid) {
        const auto fit = glm::fit_logistic(u_train, train.outcomes, lambda, mask, nullptr, -1.0,
                                           100, 1e-10, &warm);
        warm = fit.coef;
        const double val_nll = glm::bernoulli_nll(u_val * fit.coef, val.outcomes);
        if (val_nll < best_val) {
            best_val = val_nll;
            best_coef = fit.coef;
            best_lambda = lambda;
        }
    }
    auto model = std::make_unique<PooledModel>(best_coef, train.context_dim(), train.factor_dim());
    model->selected_hypers["reg_lambda"] = best_lambda;
    return model;
}

// ---- linear contextual ------------------------------------------------------

LinearContextualModel::LinearContextualModel(Mat w_map, Vec baseline)
    : w_map_(std::move(w_map)), baseline_(std::move(baseline)) {
    if (baseline_.size() != w_map_.cols())
        throw std::invalid_argument("LinearContextualModel: baseline/w_map dim mismatch");
}

const std::string& LinearContextualModel::name() const {
    static const std::string n = "linear";
    return n;
}

Vec LinearContextualModel::predict_w(const ContextVector& x) const {
    return w_map_ * context_features(x);
}

int LinearContextualModel::param_count() const {
    return static_cast<int>(w_map_.size() + baseline_.size());
}

namespace {

// features (1, x_full, c_a * z_j for a-major blocks); coef layout matches
// W(j, a) = coef[P + a*J + j]
Mat bilinear_features(const Mat& ctx_features, const Mat& factors) {
    const Eigen::Index n = ctx_features.rows();
    const Eigen::Index p = ctx_features.cols();
    const Eigen::Index j = factors.cols();
    Mat out(n, p + p * j);
    out.leftCols(p) = ctx_features;
    for (Eigen::Index a = 0; a < p; ++a)
        out.middleCols(p + a * j, j) = factors.array().colwise() * ctx_features.col(a).array();
    return out;
}

Mat unpack_w_map(const Vec& coef, Eigen::Index p, Eigen::Index j) {
    Mat w(j, p);
    for (Eigen::Index a = 0; a < p; ++a) w.col(a) = coef.segment(p + a * j, j);
    return w;
}

} // namespace

ModelPtr fit_linear_contextual(const LoggedDataset& train, const LoggedDataset& val,
                               const FitConfig& cfg) {
    cfg.validate();
    const Mat c_train = context_feature_matrix(train.contexts);
    const Mat c_val = context_feature_matrix(val.contexts);
    const Mat phi_train = bilinear_features(c_train, train.logged_factors);
    const Mat phi_val = bilinear_features(c_val, val.logged_factors);
    const Eigen::Index p = c_train.cols();
    const Eigen::Index j = train.factor_dim();

    Vec mask = Vec::Ones(phi_train.cols());
    mask.head(p).setZero();

    Vec best_coef;
    double best_val = std::numeric_limits<double>::infinity();
    double best_lambda = cfg.reg_grid.front();
    Vec warm = Vec::Zero(phi_train.cols());
    for (double lambda : cfg.reg_grid) {
        const auto fit = glm::fit_logistic(phi_train, train.outcomes, lambda, mask, nullptr, -1.0,
                                           100, 1e-10, &warm);
        warm = fit.coef;
        const double val_nll = glm::bernoulli_nll(phi_val * fit.coef, val.outcomes);
        if (val_nll < best_val) {
            best_val = val_nll;
            best_coef = fit.coef;
            best_lambda = lambda;
        }
    }
    auto model = std::make_unique<LinearContextualModel>(unpack_w_map(best_coef, p, j),
                                                         best_coef.head(p));
    model->selected_hypers["reg_lambda"] = best_lambda;
    return model;
}

// ---- low-rank contextual ----------------------------------------------------

LowRankContextualModel::LowRankContextualModel(Mat u, Mat v, Vec baseline)
    : u_(std::move(u)), v_(std::move(v)), baseline_(std::move(baseline)) {
    if (u_.cols() != v_.cols())
        throw std::invalid_argument("LowRankContextualModel: rank mismatch between factors");
    if (baseline_.size() != v_.rows())
        throw std::invalid_argument("LowRankContextualModel: baseline dim mismatch");
}

const std::string& LowRankContextualModel::name() const {
    static const std::string n = "lowrank";
    return n;
}

Vec LowRankContextualModel::predict_w(const ContextVector& x) const {
    return u_ * (v_.transpose() * context_features(x));
}

int LowRankContextualModel::param_count() const {
    return static_cast<int>(u_.size() + v_.size() + baseline_.size());
}

ModelPtr fit_lowrank_contextual(const LoggedDataset& train, const LoggedDataset& val,
                                const FitConfig& cfg) {
    cfg.validate();
    const Mat c_train = context_feature_matrix(train.contexts);
    const Mat c_val = context_feature_matrix(val.contexts);
    const Eigen::Index p = c_train.cols();
    const Eigen::Index j = train.factor_dim();
    const Eigen::Index n = train.n();

    // linear-contextual warm start, truncated by SVD per rank
    const auto linear_any = fit_linear_contextual(train, val, cfg);
    const auto* linear = dynamic_cast<const LinearContextualModel*>(linear_any.get());
    const Eigen::JacobiSVD<Mat> svd(linear->w_map(), Eigen::ComputeThinU | Eigen::ComputeThinV);

    double best_val = std::numeric_limits<double>::infinity();
    Mat best_u, best_v;
    Vec best_baseline;
    int best_rank = cfg.rank_grid.front();
    double best_lambda = cfg.reg_grid.front();

    for (int rank : cfg.rank_grid) {
        const auto r = static_cast<Eigen::Index>(std::min<int>(rank, static_cast<int>(std::min(p, j))));
        for (double lambda : cfg.reg_grid) {
            Mat u = svd.matrixU().leftCols(r) *
                    svd.singularValues().head(r).cwiseSqrt().asDiagonal();
            Mat v = svd.matrixV().leftCols(r) *
                    svd.singularValues().head(r).cwiseSqrt().asDiagonal();
            Vec baseline = Vec::Zero(p);

            double prev_obj = std::numeric_limits<double>::infinity();
            int stale = 0;
            for (int round = 0; round < 30 && stale < 3; ++round) {
                { // fix V, fit (baseline, U)
                    Mat phi(n, p + r * j);
                    phi.leftCols(p) = c_train;
                    const Mat g = c_train * v;
                    for (Eigen::Index a = 0; a < r; ++a)
                        phi.middleCols(p + a * j, j) =
                            train.logged_factors.array().colwise() * g.col(a).array();
                    Vec mask = Vec::Ones(phi.cols());
                    mask.head(p).setZero();
                    Vec warm(phi.cols());
                    warm.head(p) = baseline;
                    for (Eigen::Index a = 0; a < r; ++a) warm.segment(p + a * j, j) = u.col(a);
                    const auto fit = glm::fit_logistic(phi, train.outcomes, lambda, mask, nullptr,
                                                       -1.0, 50, 1e-10, &warm);
                    baseline = fit.coef.head(p);
                    for (Eigen::Index a = 0; a < r; ++a) u.col(a) = fit.coef.segment(p + a * j, j);
                }
                double obj;
                { // fix U, fit (baseline, V)
                    Mat phi(n, p + r * p);
                    phi.leftCols(p) = c_train;
                    const Mat h = train.logged_factors * u; // n x r
                    for (Eigen::Index a = 0; a < r; ++a)
                        phi.middleCols(p + a * p, p) =
                            c_train.array().colwise() * h.col(a).array();
                    Vec mask = Vec::Ones(phi.cols());
                    mask.head(p).setZero();
                    Vec warm(phi.cols());
                    warm.head(p) = baseline;
                    for (Eigen::Index a = 0; a < r; ++a) warm.segment(p + a * p, p) = v.col(a);
                    const auto fit = glm::fit_logistic(phi, train.outcomes, lambda, mask, nullptr,
                                                       -1.0, 50, 1e-10, &warm);
                    baseline = fit.coef.head(p);
                    for (Eigen::Index a = 0; a < r; ++a) v.col(a) = fit.coef.segment(p + a * p, p);
                    obj = fit.objective + lambda * u.squaredNorm();
                }
                if (obj < prev_obj - 1e-9 * (1.0 + std::abs(prev_obj)))
                    stale = 0;
                else
                    ++stale;
                prev_obj = std::min(prev_obj, obj);
            }

            const Vec scores = c_val * baseline +
                               ((c_val * v).cwiseProduct(val.logged_factors * u)).rowwise().sum();
            const double val_nll = glm::bernoulli_nll(scores, val.outcomes);
            if (val_nll < best_val) {
                best_val = val_nll;
                best_u = u;
                best_v = v;
                best_baseline = baseline;
                best_rank = rank;
                best_lambda = lambda;
            }
        }
    }

    auto model = std::make_unique<LowRankContextualModel>(best_u, best_v, best_baseline);
    model->selected_hypers["rank"] = best_rank;
    model->selected_hypers["reg_lambda"] = best_lambda;
    return model;
}

// ---- expert alignment -------------------------------------------------------

Alignment align_experts(const Mat& estimated, const Mat& truth) {
    if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols())
        throw std::invalid_argument("align_experts: shape mismatch");
    const int k = static_cast<int>(truth.rows());
    if (k > 8) throw std::invalid_argument("align_experts: K > 8 unsupported");

    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best_perm = perm;
    double best_total = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < k; ++i)
            total += (estimated.row(i) - truth.row(perm[static_cast<size_t>(i)])).squaredNorm();
        if (total < best_total) {
            best_total = total;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    Alignment out;
    out.permutation = best_perm;
    out.total_sq = best_total;
    out.per_expert.resize(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i)
        out.per_expert[static_cast<size_t>(best_perm[static_cast<size_t>(i)])] =
            (estimated.row(i) - truth.row(best_perm[static_cast<size_t>(i)])).squaredNorm();
    return out;
}

// ---- dispatch ----------------------------------------------------------------

ModelPtr fit_method(const std::string& method, const LoggedDataset& train,
                    const LoggedDataset& val, int k, const FitConfig& cfg) {
    if (method == "pooled") return fit_pooled(train, val, cfg);
    if (method == "linear") return fit_linear_contextual(train, val, cfg);
    if (method == "lowrank") return fit_lowrank_contextual(train, val, cfg);
    if (method == "mlp") return fit_mlp_contextual(train, val, cfg);
    if (method == "cluster") return fit_cluster_then_fit(train, val, cfg);
    if (method == "em") return fit_em_mixture(train, val, cfg);
    if (method == "hard") return fit_hard_routed(train, val, k, cfg);
    if (method == "otss") return fit_otss(train, val, k, cfg);
    throw std::invalid_argument("fit_method: unknown method '" + method + "'");
}

} // namespace otss::models
