#pragma once

#include "otss/types.hpp"

namespace otss {

// Latent decision score w'z. Dimension mismatch is a hard error.
double score(const Vec& w, const Vec& z);

// Index of the highest-scoring library entry; ties break to the lowest
// index so repeated runs pick the same decision.
int argmax_decision(const Vec& w, const DecisionLibrary& lib);

// Exact regret of acting on w_hat when w_star is true, over a finite
// library. margin_gamma is 0 when the oracle optimum is not unique
// (exact score equality); perturb_delta = max_m |(w_hat - w_star)'z_m|.
RegretRecord regret(const Vec& w_star, const Vec& w_hat, const DecisionLibrary& lib);

} // namespace otss
