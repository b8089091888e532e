#include "otss/models.hpp"

#include "otss/glm.hpp"

#include <limits>
#include <stdexcept>

namespace otss::models {

ClusterModel::ClusterModel(Mat centroids, Mat betas)
    : centroids_(std::move(centroids)), betas_(std::move(betas)) {
    if (centroids_.rows() != betas_.rows())
        throw std::invalid_argument("ClusterModel: centroid/beta count mismatch");
}

const std::string& ClusterModel::name() const {
    static const std::string n = "cluster";
    return n;
}

namespace {

int nearest_row(const Mat& rows, const Vec& point) {
    int best = 0;
    double best_d = (rows.row(0).transpose() - point).squaredNorm();
    for (int r = 1; r < rows.rows(); ++r) {
        const double d = (rows.row(r).transpose() - point).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = r;
        }
    }
    return best;
}

} // namespace

Vec ClusterModel::predict_w(const ContextVector& x) const {
    return betas_.row(nearest_row(centroids_, x.full())).transpose();
}

int ClusterModel::param_count() const {
    return static_cast<int>(centroids_.size() + betas_.size());
}

// ---- k-means -------------------------------------------------------------

namespace {

void assign_labels(const Mat& points, const Mat& centroids, std::vector<int>& labels,
                   Vec& dists) {
    const Eigen::Index n = points.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec p = points.row(i).transpose();
        const int c = nearest_row(centroids, p);
        labels[static_cast<size_t>(i)] = c;
        dists[i] = (centroids.row(c).transpose() - p).squaredNorm();
    }
}

Mat plus_plus_init(const Mat& points, int k, Rng& rng) {
    const Eigen::Index n = points.rows();
    Mat centroids(k, points.cols());
    centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_int(
        static_cast<std::uint64_t>(n))));
    Vec d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (; pick + 1 < n; ++pick) {
                target -= d2[pick];
                if (target <= 0.0) break;
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        }
        centroids.row(c) = points.row(pick);
        d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }
    return centroids;
}

} // namespace

KMeansResult kmeans(const Mat& points, int k, int restarts, Rng& rng, int max_iter) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (points.rows() < k) throw std::invalid_argument("kmeans: fewer points than clusters");

    const Eigen::Index n = points.rows();
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();

    for (int attempt = 0; attempt < restarts; ++attempt) {
        Mat centroids = plus_plus_init(points, k, rng);
        std::vector<int> labels(static_cast<size_t>(n), -1);
        Vec dists(n);

        for (int it = 0; it < max_iter; ++it) {
            std::vector<int> prev = labels;
            assign_labels(points, centroids, labels, dists);

            // empty cluster: re-seed at the farthest point from its centroid
            std::vector<int> counts(static_cast<size_t>(k), 0);
            for (int lab : labels) ++counts[static_cast<size_t>(lab)];
            bool reseeded = false;
            for (int c = 0; c < k; ++c) {
                if (counts[static_cast<size_t>(c)] > 0) continue;
                Eigen::Index far = 0;
                dists.maxCoeff(&far);
                centroids.row(c) = points.row(far);
                dists[far] = 0.0;
                reseeded = true;
            }
            if (reseeded) {
                assign_labels(points, centroids, labels, dists);
                counts.assign(static_cast<size_t>(k), 0);
                for (int lab : labels) ++counts[static_cast<size_t>(lab)];
            }
            if (labels == prev) break;

            Mat sums = Mat::Zero(k, points.cols());
            for (Eigen::Index i = 0; i < n; ++i)
                sums.row(labels[static_cast<size_t>(i)]) += points.row(i);
            for (int c = 0; c < k; ++c)
                if (counts[static_cast<size_t>(c)] > 0)
                    centroids.row(c) = sums.row(c) / counts[static_cast<size_t>(c)];
        }

        assign_labels(points, centroids, labels, dists);
        const double inertia = dists.sum();
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.centroids = centroids;
            best.labels = labels;
        }
    }
    return best;
}

// ---- fit -------------------------------------------------------------------

ModelPtr fit_cluster_then_fit(const LoggedDataset& train, const LoggedDataset& val,
                              const FitConfig& cfg) {
    cfg.validate();
    const Eigen::Index j = train.factor_dim();
    const Mat u_train = record_feature_matrix(train);
    const Mat u_val = record_feature_matrix(val);
    Vec mask = Vec::Zero(u_train.cols());
    mask.tail(j).setOnes();

    Rng rng = Rng::stream(cfg.seed, "fit/cluster");

    double best_val = std::numeric_limits<double>::infinity();
    Mat best_centroids, best_betas;
    int best_k = cfg.k_grid.front();
    double best_lambda = cfg.reg_grid.front();

    for (int k : cfg.k_grid) {
        const KMeansResult km = kmeans(train.contexts, k, 10, rng);

        // per-cluster records
        std::vector<std::vector<Eigen::Index>> members(static_cast<size_t>(k));
        for (int i = 0; i < train.n(); ++i)
            members[static_cast<size_t>(km.labels[static_cast<size_t>(i)])].push_back(i);

        // nearest-centroid assignment of validation rows is k-dependent only
        std::vector<int> val_assign(static_cast<size_t>(val.n()));
        for (int i = 0; i < val.n(); ++i)
            val_assign[static_cast<size_t>(i)] =
                nearest_row(km.centroids, val.contexts.row(i).transpose());

        for (double lambda : cfg.reg_grid) {
            Mat thetas(k, u_train.cols());
            for (int c = 0; c < k; ++c) {
                const auto& rows = members[static_cast<size_t>(c)];
                if (rows.empty()) {
                    thetas.row(c).setZero();
                    continue;
                }
                Mat uc(static_cast<Eigen::Index>(rows.size()), u_train.cols());
                Vec yc(static_cast<Eigen::Index>(rows.size()));
                for (size_t t = 0; t < rows.size(); ++t) {
                    uc.row(static_cast<Eigen::Index>(t)) = u_train.row(rows[t]);
                    yc[static_cast<Eigen::Index>(t)] = train.outcomes[rows[t]];
                }
                const auto fit = glm::fit_logistic(uc, yc, lambda, mask);
                thetas.row(c) = fit.coef.transpose();
            }

            Vec scores(val.n());
            for (int i = 0; i < val.n(); ++i)
                scores[i] = u_val.row(i).dot(thetas.row(val_assign[static_cast<size_t>(i)]));
            const double val_nll = glm::bernoulli_nll(scores, val.outcomes);
            if (val_nll < best_val) {
                best_val = val_nll;
                best_centroids = km.centroids;
                best_betas = thetas.rightCols(j);
                best_k = k;
                best_lambda = lambda;
            }
        }
    }

    auto model = std::make_unique<ClusterModel>(best_centroids, best_betas);
    model->selected_hypers["K"] = best_k;
    model->selected_hypers["reg_lambda"] = best_lambda;
    return model;
}

} // namespace otss::models
