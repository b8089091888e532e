#pragma once

#include "otss/models.hpp"

#include <cmath>
#include <limits>

namespace otss::models::detail {

struct TrainOutcome {
    Vec theta;
    double val_nll = std::numeric_limits<double>::infinity();
    double val_nll_init = std::numeric_limits<double>::infinity();
    int epochs = 0;
    bool diverged = false;
};

// Full-batch first-order descent with per-parameter adaptive step scaling
// (Adam-style moments), global gradient clipping at norm 1e3, and
// patience-based early stopping on the validation NLL. The returned theta
// is the best-validation snapshot, so it is never worse than the init.
template <class LossGrad, class ValNll>
TrainOutcome train_adam(Vec theta, LossGrad&& loss_grad, ValNll&& val_nll,
                        const FitConfig& cfg) {
    TrainOutcome out;
    const Eigen::Index dim = theta.size();
    Vec m = Vec::Zero(dim), v = Vec::Zero(dim), grad(dim);

    out.val_nll_init = val_nll(theta);
    out.val_nll = out.val_nll_init;
    out.theta = theta;
    if (!std::isfinite(out.val_nll_init)) {
        out.diverged = true;
        return out;
    }

    int since_best = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        out.epochs = epoch;
        const double loss = loss_grad(theta, grad);
        if (!std::isfinite(loss) || !grad.allFinite()) {
            out.diverged = true;
            break;
        }
        const double gn = grad.norm();
        if (gn > 1e3) grad *= 1e3 / gn;

        m = 0.9 * m + 0.1 * grad;
        v = 0.999 * v + 0.001 * grad.cwiseProduct(grad);
        const double mc = 1.0 - std::pow(0.9, epoch);
        const double vc = 1.0 - std::pow(0.999, epoch);
        theta.array() -=
            cfg.step_size * (m.array() / mc) / ((v.array() / vc).sqrt() + 1e-8);

        const double vn = val_nll(theta);
        if (!std::isfinite(vn)) {
            out.diverged = true;
            break;
        }
        if (vn < out.val_nll) {
            out.val_nll = vn;
            out.theta = theta;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return out;
}

} // namespace otss::models::detail
