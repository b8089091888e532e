#pragma once

#include "otss/types.hpp"

namespace otss::glm {

inline double sigmoid(double t) {
    // branch keeps exp() off the overflow path for large |t|
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// log(1 + exp(t)), overflow-safe.
inline double log1pexp(double t) {
    if (t > 35.0) return t;
    if (t < -35.0) return std::exp(t);
    return std::log1p(std::exp(t));
}

// Mean Bernoulli negative log-likelihood of linear scores s against y.
double bernoulli_nll(const Vec& s, const Vec& y);

struct LogisticFit {
    Vec coef;
    double objective = 0.0; // penalized weighted mean NLL at the solution
    int iterations = 0;
    bool converged = false;
    bool ridge_floor_applied = false;
};

// Ridge logistic regression by damped Newton (IRLS with backtracking, so
// the penalized objective never increases). Penalty is
// lambda * sum_j mask[j] * coef[j]^2; weights are per-record (EM
// responsibilities), normalized by `normalizer` (<=0 means sum of weights).
LogisticFit fit_logistic(const Mat& X, const Vec& y, double lambda,
                         const Vec& penalty_mask, const Vec* weights = nullptr,
                         double normalizer = -1.0, int max_iter = 100,
                         double tol = 1e-10, const Vec* warm_start = nullptr);

// Unpenalized MLE with the 1e-8 ridge floor fallback when the Fisher
// information is numerically singular; the flag records that this fired.
LogisticFit fit_logistic_unpenalized(const Mat& X, const Vec& y, int max_iter = 100);

// penalty mask helper: 0 for coordinate 0 (intercept), 1 elsewhere
Vec intercept_free_mask(int p);

struct SoftmaxFit {
    Mat coef; // K x P
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Multinomial logistic regression against soft targets (rows of `targets`
// sum to 1). Newton with line search on the ridge-penalized cross-entropy.
SoftmaxFit fit_softmax(const Mat& X, const Mat& targets, double lambda,
                       int max_iter = 60, double tol = 1e-10);

// Row-wise softmax of a score matrix.
Mat softmax_rows(const Mat& scores);

} // namespace otss::glm
