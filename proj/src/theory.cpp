#include "otss/theory.hpp"

#include "otss/decision.hpp"
#include "otss/glm.hpp"
#include "otss/models.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace otss::theory {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Vec softmax_vec(const Vec& s) {
    const double m = s.maxCoeff();
    Vec e = (s.array() - m).exp();
    return e / e.sum();
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t salt) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (2 * salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// train + val restored to the original record order (val is the tail of
// the training stream, so concatenation is the first n_train records)
LoggedDataset full_training_slice(const bench::BenchmarkInstance& inst) {
    const LoggedDataset& tr = inst.train;
    const LoggedDataset& va = inst.val;
    LoggedDataset out;
    const int nt = tr.n();
    const int nv = va.n();
    out.contexts.resize(nt + nv, tr.context_dim());
    out.contexts.topRows(nt) = tr.contexts;
    out.contexts.bottomRows(nv) = va.contexts;
    out.logged_factors.resize(nt + nv, tr.factor_dim());
    out.logged_factors.topRows(nt) = tr.logged_factors;
    out.logged_factors.bottomRows(nv) = va.logged_factors;
    out.decisions = tr.decisions;
    out.decisions.insert(out.decisions.end(), va.decisions.begin(), va.decisions.end());
    out.outcomes.resize(nt + nv);
    out.outcomes.head(nt) = tr.outcomes;
    out.outcomes.tail(nv) = va.outcomes;
    out.d_sig = tr.d_sig;
    out.library = tr.library;
    return out;
}

double ols_log_slope(const std::vector<int>& n_grid, const std::vector<double>& mse) {
    const int k = static_cast<int>(n_grid.size());
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < k; ++i) {
        mx += std::log(static_cast<double>(n_grid[i]));
        my += std::log(mse[i]);
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < k; ++i) {
        const double dx = std::log(static_cast<double>(n_grid[i])) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(mse[i]) - my);
    }
    return sxy / sxx;
}

bench::BenchConfig sweep_bench_config(const RateSweepConfig& cfg, int n, int seed_idx) {
    bench::BenchConfig bc;
    bc.d_sig = 1;
    bc.d_nuis = 0;
    bc.J = cfg.j;
    bc.M = cfg.m_library;
    bc.K = cfg.k;
    bc.tau = cfg.tau;
    bc.nuisance_scale = 0.0;
    bc.n_train = n;
    bc.n_total = n + cfg.n_eval;
    bc.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(seed_idx));
    return bc;
}

bench::BenchmarkInstance sweep_instance(const RateSweepConfig& cfg, int n, int seed_idx) {
    const bench::BenchConfig bc = sweep_bench_config(cfg, n, seed_idx);
    if (cfg.k == 1) return bench::generate_benchmark(bc, bench::Family::matched_k, bench::TruthMode::hard);
    return bench::generate_benchmark(bc, bench::Family::two_expert);
}

struct BinnedFit {
    std::vector<double> edges; // internal boundaries on the uniformized scale
    Mat weights;               // bins x J
    int merged = 0;

    int assign(double t) const {
        return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), t) - edges.begin());
    }
};

// equal-mass bins on t = Phi(signal), per-bin ridge logistic on (1, z);
// the penalty is a fixed total (spread over the bin, so the per-record
// weight decays as bins grow), which tames near-separable small bins
// without touching the asymptotic convergence rate
BinnedFit fit_binned_hard(const LoggedDataset& data, int bins_requested, int j,
                          double total_ridge = 1.0) {
    const int n = data.n();
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = normal_cdf(data.contexts(i, 0));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return t[a] < t[b]; });

    int bins = std::max(1, std::min(bins_requested, n));
    std::vector<int> starts(bins + 1);
    for (int q = 0; q <= bins; ++q)
        starts[q] = static_cast<int>(static_cast<long long>(q) * n / bins);

    BinnedFit fit;
    // merge undersized bins into the smaller neighbor until every bin can
    // support the per-bin regression
    const int min_count = j + 2;
    for (;;) {
        if (bins <= 1) break;
        int worst = -1;
        for (int q = 0; q < bins; ++q) {
            if (starts[q + 1] - starts[q] < min_count) {
                worst = q;
                break;
            }
        }
        if (worst < 0) break;
        int into = worst == 0 ? 1 : worst - 1;
        if (worst > 0 && worst + 1 < bins) {
            const int left = starts[worst] - starts[worst - 1];
            const int right = starts[worst + 2] - starts[worst + 1];
            into = left <= right ? worst - 1 : worst + 1;
        }
        starts.erase(starts.begin() + std::max(worst, into));
        --bins;
        ++fit.merged;
    }

    fit.weights.resize(bins, j);
    for (int q = 0; q < bins; ++q) {
        const int lo = starts[q];
        const int hi = starts[q + 1];
        Mat x(hi - lo, 1 + j);
        Vec y(hi - lo);
        for (int r = lo; r < hi; ++r) {
            const int i = order[r];
            x(r - lo, 0) = 1.0;
            x.row(r - lo).tail(j) = data.logged_factors.row(i);
            y[r - lo] = data.outcomes[i];
        }
        const glm::LogisticFit lf = glm::fit_logistic(
            x, y, total_ridge / static_cast<double>(hi - lo), glm::intercept_free_mask(1 + j));
        fit.weights.row(q) = lf.coef.tail(j).transpose();
    }
    fit.edges.resize(bins - 1);
    for (int q = 0; q + 1 < bins; ++q) {
        const double hi_t = t[order[starts[q + 1] - 1]];
        const double lo_t = t[order[starts[q + 1]]];
        fit.edges[q] = 0.5 * (hi_t + lo_t);
    }
    return fit;
}

RateSweepResult run_rate_sweep(const RateSweepConfig& cfg, bool hard) {
    cfg.validate();
    RateSweepResult res;
    res.n_grid = cfg.n_grid;
    const int n_pts = static_cast<int>(cfg.n_grid.size());
    res.per_seed_mse.resize(cfg.seeds_per_n, n_pts);
    res.mean_mse.assign(n_pts, 0.0);
    res.bins_used.assign(n_pts, 0);

    models::FitConfig fit_cfg;
    for (int s = 0; s < cfg.seeds_per_n; ++s) {
        for (int ni = 0; ni < n_pts; ++ni) {
            const int n = cfg.n_grid[ni];
            const bench::BenchmarkInstance inst = sweep_instance(cfg, n, s);
            const LoggedDataset data = full_training_slice(inst);
            std::vector<RegretRecord> recs;
            recs.reserve(inst.eval.size());
            double mse = 0.0;
            if (hard) {
                const int bins = std::max(
                    1, static_cast<int>(std::llround(cfg.c_m * std::cbrt(static_cast<double>(n)))));
                const BinnedFit bf = fit_binned_hard(data, bins, cfg.j);
                res.merged_bins += bf.merged;
                if (s == 0) res.bins_used[ni] = static_cast<int>(bf.weights.rows());
                for (const bench::EvalPoint& pt : inst.eval) {
                    const int q = bf.assign(normal_cdf(pt.context.signal[0]));
                    const Vec w_hat = bf.weights.row(q).transpose();
                    mse += (w_hat - pt.w_star).squaredNorm();
                    recs.push_back(regret(pt.w_star, w_hat, inst.library));
                }
            } else {
                fit_cfg.seed = mix_seed(cfg.seed, 1000003ULL + static_cast<std::uint64_t>(s));
                const models::ModelPtr model = models::fit_oracle_gate_soft(data, inst.truth, fit_cfg);
                for (const bench::EvalPoint& pt : inst.eval) {
                    const Vec w_hat = model->predict_w(pt.context);
                    mse += (w_hat - pt.w_star).squaredNorm();
                    recs.push_back(regret(pt.w_star, w_hat, inst.library));
                }
            }
            const RegretTransferReport audit = regret_transfer_audit(recs);
            res.eval_rows += audit.rows;
            res.regret_violations += audit.violations;
            mse /= static_cast<double>(inst.eval.size());
            res.per_seed_mse(s, ni) = mse;
            res.mean_mse[ni] += mse / cfg.seeds_per_n;
        }
    }
    res.slope = ols_log_slope(res.n_grid, res.mean_mse);
    return res;
}

} // namespace

void FloorParams::validate() const {
    if (!(delta_beta_sq >= 0.0)) throw std::invalid_argument("floor: delta_beta_sq must be nonnegative");
    if (!(kappa >= 0.0)) throw std::invalid_argument("floor: kappa must be nonnegative");
    if (!(b > a)) throw std::invalid_argument("floor: interval is empty");
    if (m < 1) throw std::invalid_argument("floor: need at least one piece");
}

double floor_lower_bound(const FloorParams& p) {
    p.validate();
    const double w = p.b - p.a;
    return p.delta_beta_sq * p.kappa * p.kappa * w * w * w / (12.0 * p.m * p.m);
}

double best_step_fit(const std::vector<double>& f, int m) {
    const int g = static_cast<int>(f.size());
    if (m < 1) throw std::invalid_argument("best_step_fit: need at least one piece");
    if (g < 10 * m) throw std::invalid_argument("best_step_fit: grid too coarse for the piece count");

    std::vector<double> s1(g + 1, 0.0), s2(g + 1, 0.0);
    for (int i = 0; i < g; ++i) {
        s1[i + 1] = s1[i] + f[i];
        s2[i + 1] = s2[i] + f[i] * f[i];
    }
    const auto cost = [&](int i, int j) {
        const double cnt = j - i;
        const double sum = s1[j] - s1[i];
        const double v = (s2[j] - s2[i]) - sum * sum / cnt;
        return v > 0.0 ? v : 0.0;
    };

    // interval costs over a sorted sequence satisfy the Monge condition, so
    // the optimal split index is monotone in the right endpoint and a
    // divide-and-conquer search keeps each layer at O(G log G); arbitrary
    // sequences get the plain quadratic recursion instead
    bool nondec = true, noninc = true;
    for (int i = 0; i + 1 < g; ++i) {
        if (f[i + 1] < f[i]) nondec = false;
        if (f[i + 1] > f[i]) noninc = false;
    }
    const bool monotone = nondec || noninc;

    std::vector<double> prev(g + 1, kInf), cur(g + 1, kInf);
    prev[0] = 0.0;
    for (int j = 1; j <= g; ++j) prev[j] = cost(0, j);
    for (int layer = 2; layer <= m; ++layer) {
        std::fill(cur.begin(), cur.end(), kInf);
        if (monotone) {
            const std::function<void(int, int, int, int)> solve = [&](int jlo, int jhi, int ilo,
                                                                      int ihi) {
                if (jlo > jhi) return;
                const int jm = jlo + (jhi - jlo) / 2;
                int best_i = ilo;
                double best = kInf;
                const int hi = std::min(ihi, jm - 1);
                for (int i = std::max(ilo, layer - 1); i <= hi; ++i) {
                    const double v = prev[i] + cost(i, jm);
                    if (v < best) {
                        best = v;
                        best_i = i;
                    }
                }
                cur[jm] = best;
                solve(jlo, jm - 1, ilo, best_i);
                solve(jm + 1, jhi, best_i, ihi);
            };
            solve(layer, g, layer - 1, g - 1);
        } else {
            for (int j = layer; j <= g; ++j) {
                double best = kInf;
                for (int i = layer - 1; i < j; ++i) {
                    const double v = prev[i] + cost(i, j);
                    if (v < best) best = v;
                }
                cur[j] = best;
            }
        }
        std::swap(prev, cur);
    }
    return prev[g] / g;
}

FloorReport verify_floor(const std::string& name, const std::function<double(double)>& alpha,
                         double kappa, double lip, double delta_beta_sq, double a, double b,
                         const std::vector<int>& m_list, int grid) {
    if (!(b > a)) throw std::invalid_argument("verify_floor: interval is empty");
    if (grid < 100) throw std::invalid_argument("verify_floor: grid too coarse");
    const double width = b - a;
    std::vector<double> f(grid);
    for (int i = 0; i < grid; ++i) f[i] = alpha(a + width * (i + 0.5) / grid);

    FloorReport rep;
    rep.name = name;
    for (int m : m_list) {
        FloorCheckRow row;
        row.m = m;
        row.lower = floor_lower_bound({delta_beta_sq, kappa, a, b, m});
        row.dp = delta_beta_sq * width * best_step_fit(f, m);
        row.upper = delta_beta_sq * lip * lip * width * width * width / (4.0 * m * m);
        // 1e-4 relative slack absorbs the grid discretization of the integral
        row.pass = row.dp >= row.lower * (1.0 - 1e-4) && row.dp <= row.upper * (1.0 + 1e-4);
        rep.all_pass = rep.all_pass && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

FloorReport verify_floor(const bench::TwoExpertTruth& truth, const std::vector<int>& m_list,
                         double a, double b, int grid, double kappa_override) {
    if (a < 0.0) throw std::invalid_argument("verify_floor: interval must sit in the right half line");
    if (truth.tau <= 0.0) throw std::invalid_argument("verify_floor: truth gate is flat");
    const double tau = truth.tau;
    const double dbsq = (truth.beta1 - truth.beta2).squaredNorm();
    const auto slope = [tau](double t) {
        const double s = glm::sigmoid(tau * t);
        return tau * s * (1.0 - s);
    };
    // sigmoid slope decreases away from zero, so on [a, b] with a >= 0 the
    // extremes sit at the endpoints
    double kappa = slope(b);
    const double lip = slope(a);
    if (kappa_override > 0.0) kappa = kappa_override;
    std::ostringstream name;
    name << "sigmoid_gate_tau_" << tau;
    return verify_floor(name.str(), [tau](double t) { return glm::sigmoid(tau * t); }, kappa, lip,
                        dbsq, a, b, m_list, grid);
}

double pooled_oracle_error(const bench::TwoExpertTruth& truth,
                           const std::vector<ContextVector>& contexts) {
    if (contexts.empty()) throw std::invalid_argument("pooled_oracle_error: no contexts");
    const double dbsq = (truth.beta1 - truth.beta2).squaredNorm();
    double s = 0.0, s2 = 0.0;
    for (const ContextVector& x : contexts) {
        const double l = bench::true_lambda(truth, x);
        s += l;
        s2 += l * l;
    }
    const double n = static_cast<double>(contexts.size());
    const double var = s2 / n - (s / n) * (s / n);
    return dbsq * std::max(0.0, var);
}

double empirical_best_constant_error(const bench::TwoExpertTruth& truth,
                                     const std::vector<ContextVector>& contexts) {
    if (contexts.empty()) throw std::invalid_argument("empirical_best_constant_error: no contexts");
    const int n = static_cast<int>(contexts.size());
    const int j = static_cast<int>(truth.beta1.size());
    Mat w(n, j);
    for (int i = 0; i < n; ++i) w.row(i) = bench::true_weight_two_expert(truth, contexts[i]).transpose();
    const Vec mean = w.colwise().mean().transpose();
    return (w.rowwise() - mean.transpose()).rowwise().squaredNorm().mean();
}

AlignedHardReport aligned_hard_upper(const bench::TwoExpertTruth& truth,
                                     const std::vector<ContextVector>& contexts,
                                     const std::vector<double>& eps_grid) {
    if (contexts.empty()) throw std::invalid_argument("aligned_hard_upper: no contexts");
    const double dbsq = (truth.beta1 - truth.beta2).squaredNorm();
    const double n = static_cast<double>(contexts.size());

    AlignedHardReport rep;
    rep.eps_grid = eps_grid;
    std::vector<double> inside(eps_grid.size(), 0.0);
    double bound = 0.0, thr = 0.0;
    for (const ContextVector& x : contexts) {
        const double l = bench::true_lambda(truth, x);
        const double m = std::min(l, 1.0 - l);
        bound += m * m;
        const Vec w = bench::true_weight_two_expert(truth, x);
        const Vec& pick = l >= 0.5 ? truth.beta1 : truth.beta2;
        thr += (w - pick).squaredNorm();
        for (std::size_t e = 0; e < eps_grid.size(); ++e) {
            if (l >= eps_grid[e] && l <= 1.0 - eps_grid[e]) inside[e] += 1.0;
        }
    }
    rep.bound = dbsq * bound / n;
    rep.threshold_error = thr / n;
    rep.pass = rep.threshold_error <= rep.bound * (1.0 + 1e-9) + 1e-15;
    for (std::size_t e = 0; e < eps_grid.size(); ++e) {
        const double eb = dbsq * (eps_grid[e] * eps_grid[e] + 0.25 * inside[e] / n);
        rep.eps_bounds.push_back(eb);
        rep.pass = rep.pass && rep.threshold_error <= eb * (1.0 + 1e-9) + 1e-15;
    }
    return rep;
}

DecompositionReport hard_partition_decomposition_check(const Mat& w_star,
                                                       const std::vector<int>& labels,
                                                       int n_predictors, Rng& rng) {
    const int n = static_cast<int>(w_star.rows());
    const int j = static_cast<int>(w_star.cols());
    if (n == 0 || static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("decomposition check: labels do not match rows");
    int cells = 0;
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("decomposition check: negative cell label");
        cells = std::max(cells, l + 1);
    }

    Mat means = Mat::Zero(cells, j);
    std::vector<int> counts(cells, 0);
    for (int i = 0; i < n; ++i) {
        ++counts[labels[i]];
        means.row(labels[i]) += w_star.row(i);
    }
    DecompositionReport rep;
    for (int c = 0; c < cells; ++c) {
        if (counts[c] == 0) {
            ++rep.empty_cells;
        } else {
            means.row(c) /= counts[c];
        }
    }
    double within = 0.0;
    for (int i = 0; i < n; ++i) within += (w_star.row(i) - means.row(labels[i])).squaredNorm();
    within /= n;

    for (int p = 0; p < n_predictors; ++p) {
        Mat beta(cells, j);
        for (int c = 0; c < cells; ++c)
            for (int d = 0; d < j; ++d) beta(c, d) = rng.gaussian();
        double total = 0.0, proj = 0.0;
        for (int i = 0; i < n; ++i) {
            total += (w_star.row(i) - beta.row(labels[i])).squaredNorm();
            proj += (means.row(labels[i]) - beta.row(labels[i])).squaredNorm();
        }
        total /= n;
        proj /= n;
        const double rel = std::abs(total - (within + proj)) / std::max(1.0, std::abs(total));
        rep.max_rel_error = std::max(rep.max_rel_error, rel);
    }
    rep.predictors_checked = n_predictors;
    rep.pass = rep.max_rel_error <= 1e-8;
    return rep;
}

SoftDecompReport soft_decomposition_check(int instantiations, Rng& rng) {
    SoftDecompReport rep;
    bool bound_ok = true;
    double worst_ratio = -kInf;
    for (int t = 0; t < instantiations; ++t) {
        const int k = 2 + static_cast<int>(rng.uniform_int(4));
        const int j = 2 + static_cast<int>(rng.uniform_int(5));
        Mat beta(k, j), beta_star(k, j);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < j; ++c) {
                beta(r, c) = rng.gaussian();
                beta_star(r, c) = rng.gaussian();
            }
        double b_max_sq = 0.0;
        for (int r = 0; r < k; ++r) b_max_sq = std::max(b_max_sq, beta_star.row(r).squaredNorm());

        const int n = 64;
        double lhs = 0.0, gap_sq = 0.0;
        Vec mean_alpha = Vec::Zero(k);
        for (int i = 0; i < n; ++i) {
            Vec g(k), g_star(k);
            for (int r = 0; r < k; ++r) {
                g[r] = rng.gaussian();
                g_star[r] = rng.gaussian();
            }
            const Vec alpha = softmax_vec(g);
            const Vec alpha_star = softmax_vec(g_star);
            const Vec w_hat = beta.transpose() * alpha;
            const Vec w_star = beta_star.transpose() * alpha_star;
            const Vec split = (beta - beta_star).transpose() * alpha +
                              beta_star.transpose() * (alpha - alpha_star);
            const Vec diff = w_hat - w_star;
            const double rel = (diff - split).norm() / std::max(1.0, diff.norm());
            rep.max_identity_rel = std::max(rep.max_identity_rel, rel);
            lhs += diff.squaredNorm();
            mean_alpha += alpha;
            gap_sq += std::pow((alpha - alpha_star).lpNorm<1>(), 2);
        }
        lhs /= n;
        mean_alpha /= n;
        gap_sq /= n;
        double rhs = 2.0 * b_max_sq * gap_sq;
        for (int r = 0; r < k; ++r)
            rhs += 2.0 * mean_alpha[r] * (beta.row(r) - beta_star.row(r)).squaredNorm();
        if (lhs > rhs * (1.0 + 1e-12)) bound_ok = false;
        if (lhs / rhs > worst_ratio) {
            worst_ratio = lhs / rhs;
            rep.lhs = lhs;
            rep.rhs = rhs;
        }
    }
    rep.pass = bound_ok && rep.max_identity_rel <= 1e-10;
    return rep;
}

void RateSweepConfig::validate() const {
    if (n_grid.size() < 4)
        throw std::invalid_argument("rate sweep: need at least 4 sample sizes");
    for (std::size_t i = 1; i < n_grid.size(); ++i) {
        if (n_grid[i] <= n_grid[i - 1])
            throw std::invalid_argument("rate sweep: sample sizes must strictly increase");
    }
    if (n_grid.front() < 100) throw std::invalid_argument("rate sweep: smallest n too small");
    if (seeds_per_n < 1) throw std::invalid_argument("rate sweep: need at least one seed");
    if (j < 1) throw std::invalid_argument("rate sweep: factor dim must be positive");
    if (k != 1 && k != 2) throw std::invalid_argument("rate sweep: k must be 1 or 2");
    if (m_library < 2) throw std::invalid_argument("rate sweep: library too small");
    if (c_m <= 0.0) throw std::invalid_argument("rate sweep: c_m must be positive");
    if (n_eval < 100) throw std::invalid_argument("rate sweep: eval set too small");
    if (tau <= 0.0) throw std::invalid_argument("rate sweep: tau must be positive");
}

RateSweepResult hard_rate_sweep(const RateSweepConfig& cfg) { return run_rate_sweep(cfg, true); }

RateSweepResult soft_rate_sweep(const RateSweepConfig& cfg) { return run_rate_sweep(cfg, false); }

RegretTransferReport regret_transfer_audit(const std::vector<RegretRecord>& rows) {
    RegretTransferReport rep;
    rep.rows = static_cast<long long>(rows.size());
    if (rows.empty()) {
        rep.pass = true;
        return rep;
    }
    double sum_r = 0.0, sum_d2 = 0.0, max_gamma = 0.0, max_delta = 0.0;
    for (const RegretRecord& r : rows) {
        const double tol = 1e-9 * (1.0 + r.margin_gamma + r.perturb_delta + r.regret);
        const double bound =
            r.margin_gamma <= 2.0 * r.perturb_delta + tol ? 2.0 * r.perturb_delta : 0.0;
        if (r.regret > bound + tol) ++rep.violations;
        sum_r += r.regret;
        sum_d2 += r.perturb_delta * r.perturb_delta;
        max_gamma = std::max(max_gamma, r.margin_gamma);
        max_delta = std::max(max_delta, r.perturb_delta);
    }
    const double n = static_cast<double>(rows.size());
    rep.mean_regret = sum_r / n;
    rep.mean_delta_sq = sum_d2 / n;

    const double hi = std::max({1e-6, max_gamma, 2.0 * max_delta});
    const double lo = std::max(1e-9, hi * 1e-6);
    double best = kInf;
    for (int i = 0; i < 80; ++i) {
        const double eta = lo * std::pow(hi / lo, i / 79.0);
        double cnt = 0.0;
        for (const RegretRecord& r : rows) {
            if (r.margin_gamma <= 2.0 * eta) cnt += 1.0;
        }
        const double value = 2.0 * eta * cnt / n + 2.0 * rep.mean_delta_sq / eta;
        if (value < best) {
            best = value;
            rep.best_eta = eta;
        }
    }
    rep.localized_bound = best;
    rep.pass = rep.violations == 0;
    return rep;
}

RegretTransferReport random_triple_audit(long long triples, int j, int m, Rng& rng) {
    if (triples < 1) throw std::invalid_argument("random_triple_audit: need at least one triple");
    if (j < 1 || m < 1) throw std::invalid_argument("random_triple_audit: bad dimensions");
    std::vector<RegretRecord> recs;
    recs.reserve(static_cast<std::size_t>(triples));
    for (long long t = 0; t < triples; ++t) {
        Mat lib(m, j);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < j; ++c) lib(r, c) = rng.uniform(-1.0, 1.0);
        Vec w_star(j), noise(j);
        for (int c = 0; c < j; ++c) {
            w_star[c] = rng.gaussian();
            noise[c] = rng.gaussian();
        }
        const double scale = std::pow(10.0, rng.uniform(-4.0, 0.5));
        const DecisionLibrary dl(lib);
        recs.push_back(regret(w_star, w_star + scale * noise, dl));
    }
    return regret_transfer_audit(recs);
}

} // namespace otss::theory
