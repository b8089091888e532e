#include "otss/decision.hpp"

#include <limits>
#include <stdexcept>

namespace otss {

double score(const Vec& w, const Vec& z) {
    if (w.size() != z.size()) throw std::invalid_argument("score: dimension mismatch");
    return w.dot(z);
}

int argmax_decision(const Vec& w, const DecisionLibrary& lib) {
    if (lib.size() == 0) throw std::invalid_argument("argmax_decision: empty library");
    if (w.size() != lib.factor_dim())
        throw std::invalid_argument("argmax_decision: dimension mismatch");
    const Vec scores = lib.factors() * w;
    int best = 0;
    for (int m = 1; m < lib.size(); ++m)
        if (scores[m] > scores[best]) best = m; // strict > keeps the lowest index on ties
    return best;
}

RegretRecord regret(const Vec& w_star, const Vec& w_hat, const DecisionLibrary& lib) {
    if (w_star.size() != lib.factor_dim() || w_hat.size() != lib.factor_dim())
        throw std::invalid_argument("regret: dimension mismatch");

    const Vec true_scores = lib.factors() * w_star;
    RegretRecord rec;
    rec.oracle_index = argmax_decision(w_star, lib);
    rec.chosen_index = argmax_decision(w_hat, lib);
    rec.regret = true_scores[rec.oracle_index] - true_scores[rec.chosen_index];

    // gamma: gap to the best non-oracle true score, 0 when the optimum is
    // not unique (exact equality; random continuous libraries tie w.p. 0).
    double runner_up = -std::numeric_limits<double>::infinity();
    bool duplicate_max = false;
    for (int m = 0; m < lib.size(); ++m) {
        if (m == rec.oracle_index) continue;
        if (true_scores[m] == true_scores[rec.oracle_index]) duplicate_max = true;
        runner_up = std::max(runner_up, true_scores[m]);
    }
    if (lib.size() == 1) {
        rec.margin_gamma = 0.0;
    } else {
        rec.margin_gamma = duplicate_max ? 0.0 : true_scores[rec.oracle_index] - runner_up;
    }

    rec.perturb_delta = (lib.factors() * (w_hat - w_star)).cwiseAbs().maxCoeff();
    return rec;
}

} // namespace otss
