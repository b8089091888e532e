#include "otss/glm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <stdexcept>

namespace otss::glm {

double bernoulli_nll(const Vec& s, const Vec& y) {
    if (s.size() != y.size()) throw std::invalid_argument("bernoulli_nll: size mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        total += log1pexp(s[i]) - y[i] * s[i];
    return total / static_cast<double>(s.size());
}

namespace {

// penalized weighted mean NLL at coefficients b
double objective_at(const Mat& X, const Vec& y, const Vec& w, double norm,
                    double lambda, const Vec& mask, const Vec& b) {
    const Vec s = X * b;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        nll += w[i] * (log1pexp(s[i]) - y[i] * s[i]);
    return nll / norm + lambda * mask.cwiseProduct(b).dot(b);
}

} // namespace

LogisticFit fit_logistic(const Mat& X, const Vec& y, double lambda,
                         const Vec& penalty_mask, const Vec* weights,
                         double normalizer, int max_iter, double tol,
                         const Vec* warm_start) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (y.size() != n) throw std::invalid_argument("fit_logistic: y size mismatch");
    if (penalty_mask.size() != p) throw std::invalid_argument("fit_logistic: mask size mismatch");

    Vec w = weights ? *weights : Vec::Ones(n);
    if (w.size() != n) throw std::invalid_argument("fit_logistic: weight size mismatch");
    double norm = normalizer > 0.0 ? normalizer : w.sum();
    if (!(norm > 0.0)) throw std::invalid_argument("fit_logistic: nonpositive weight total");

    LogisticFit fit;
    fit.coef = warm_start ? *warm_start : Vec::Zero(p);
    if (fit.coef.size() != p) throw std::invalid_argument("fit_logistic: warm start size mismatch");
    fit.objective = objective_at(X, y, w, norm, lambda, penalty_mask, fit.coef);

    for (int it = 0; it < max_iter; ++it) {
        fit.iterations = it + 1;
        const Vec s = X * fit.coef;
        Vec prob(n), curv(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            prob[i] = sigmoid(s[i]);
            curv[i] = w[i] * prob[i] * (1.0 - prob[i]);
        }
        Vec grad = X.transpose() * (w.cwiseProduct(prob - y)) / norm
                 + 2.0 * lambda * penalty_mask.cwiseProduct(fit.coef);
        Mat hess = X.transpose() * curv.asDiagonal() * X / norm;
        hess.diagonal() += 2.0 * lambda * penalty_mask;

        Vec dir = hess.ldlt().solve(grad);
        if (!dir.allFinite()) {
            fit.ridge_floor_applied = true;
            break;
        }
        // backtracking keeps the penalized objective monotone
        double step = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 40; ++ls) {
            const Vec cand = fit.coef - step * dir;
            const double obj = objective_at(X, y, w, norm, lambda, penalty_mask, cand);
            if (std::isfinite(obj) && obj <= fit.objective) {
                improved = obj < fit.objective - tol * (1.0 + std::abs(fit.objective));
                fit.coef = cand;
                fit.objective = obj;
                break;
            }
            step *= 0.5;
        }
        if (!improved) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

LogisticFit fit_logistic_unpenalized(const Mat& X, const Vec& y, int max_iter) {
    const bool rank_deficient = Eigen::ColPivHouseholderQR<Mat>(X).rank() < X.cols();
    if (!rank_deficient) {
        const Vec mask = Vec::Zero(X.cols());
        LogisticFit fit = fit_logistic(X, y, 0.0, mask, nullptr, -1.0, max_iter);
        const bool degenerate = !fit.coef.allFinite() || fit.ridge_floor_applied
                                || fit.coef.lpNorm<Eigen::Infinity>() > 1e6;
        if (!degenerate) return fit;
    }
    const Vec ones = Vec::Ones(X.cols());
    LogisticFit fit = fit_logistic(X, y, 1e-8, ones, nullptr, -1.0, max_iter);
    fit.ridge_floor_applied = true;
    return fit;
}

Vec intercept_free_mask(int p) {
    Vec mask = Vec::Ones(p);
    if (p > 0) mask[0] = 0.0;
    return mask;
}

Mat softmax_rows(const Mat& scores) {
    Mat out(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double m = scores.row(i).maxCoeff();
        Eigen::RowVectorXd e = (scores.row(i).array() - m).exp();
        out.row(i) = e / e.sum();
    }
    return out;
}

namespace {

double softmax_objective(const Mat& X, const Mat& targets, double lambda, const Mat& theta) {
    const Eigen::Index n = X.rows();
    const Mat scores = X * theta.transpose(); // n x K
    double ce = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = scores.row(i).maxCoeff();
        const double lse = m + std::log((scores.row(i).array() - m).exp().sum());
        ce += lse - targets.row(i).dot(scores.row(i));
    }
    return ce / static_cast<double>(n) + lambda * theta.squaredNorm();
}

} // namespace

SoftmaxFit fit_softmax(const Mat& X, const Mat& targets, double lambda,
                       int max_iter, double tol) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const Eigen::Index k = targets.cols();
    if (targets.rows() != n) throw std::invalid_argument("fit_softmax: target rows mismatch");
    if (lambda <= 0.0) throw std::invalid_argument("fit_softmax: needs a positive ridge");

    SoftmaxFit fit;
    fit.coef = Mat::Zero(k, p);
    fit.objective = softmax_objective(X, targets, lambda, fit.coef);

    const Eigen::Index dim = k * p;
    for (int it = 0; it < max_iter; ++it) {
        fit.iterations = it + 1;
        const Mat probs = softmax_rows(X * fit.coef.transpose()); // n x K
        const Mat resid = probs - targets;                        // n x K
        Mat grad_mat = resid.transpose() * X / static_cast<double>(n) + 2.0 * lambda * fit.coef;

        Mat hess = Mat::Zero(dim, dim); // blocks indexed (class a, class b)
        for (Eigen::Index i = 0; i < n; ++i) {
            const Mat xxt = X.row(i).transpose() * X.row(i);
            for (Eigen::Index a = 0; a < k; ++a) {
                for (Eigen::Index b = 0; b <= a; ++b) {
                    const double pw = probs(i, a) * ((a == b ? 1.0 : 0.0) - probs(i, b));
                    hess.block(a * p, b * p, p, p) += pw * xxt;
                }
            }
        }
        hess /= static_cast<double>(n);
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = a + 1; b < k; ++b)
                hess.block(a * p, b * p, p, p) = hess.block(b * p, a * p, p, p).transpose();
        hess.diagonal().array() += 2.0 * lambda;

        Vec grad(dim);
        for (Eigen::Index a = 0; a < k; ++a) grad.segment(a * p, p) = grad_mat.row(a).transpose();
        Vec dir = hess.ldlt().solve(grad);
        if (!dir.allFinite()) break;

        double step = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 40; ++ls) {
            Mat cand = fit.coef;
            for (Eigen::Index a = 0; a < k; ++a)
                cand.row(a) -= step * dir.segment(a * p, p).transpose();
            const double obj = softmax_objective(X, targets, lambda, cand);
            if (std::isfinite(obj) && obj <= fit.objective) {
                improved = obj < fit.objective - tol * (1.0 + std::abs(fit.objective));
                fit.coef = cand;
                fit.objective = obj;
                break;
            }
            step *= 0.5;
        }
        if (!improved) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

} // namespace otss::glm
