#include <doctest.h>

#include "otss/bench.hpp"
#include "otss/glm.hpp"
#include "otss/rng.hpp"
#include "otss/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

using namespace otss;
using namespace otss::theory;

namespace {

ContextVector ctx1(double t, int dim = 3) {
    return ContextVector(Vec::Constant(1, t), Vec::Zero(dim - 1));
}

ContextVector gauss_ctx(Rng& rng, int dim = 3) {
    Vec sig(1);
    sig[0] = rng.gaussian();
    Vec nui(dim - 1);
    for (int d = 0; d < dim - 1; ++d) nui[d] = rng.gaussian();
    return ContextVector(std::move(sig), std::move(nui));
}

bench::TwoExpertTruth axis_truth(double tau) {
    bench::TwoExpertTruth truth;
    truth.beta1 = Vec(2);
    truth.beta1 << 1.0, 0.0;
    truth.beta2 = Vec(2);
    truth.beta2 << 0.0, 1.0;
    truth.tau = tau;
    truth.u = Vec(1);
    truth.u << 1.0;
    truth.baseline_coef = Vec::Zero(4);
    return truth;
}

// same nonempty-piece convention as the production routine, but the plain
// quadratic-time recursion
double brute_step_fit(const std::vector<double>& f, int m) {
    const int g = static_cast<int>(f.size());
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
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(m + 1, std::vector<double>(g + 1, inf));
    dp[0][0] = 0.0;
    for (int layer = 1; layer <= m; ++layer) {
        for (int j = layer; j <= g; ++j) {
            for (int i = layer - 1; i < j; ++i) {
                if (dp[layer - 1][i] == inf) continue;
                dp[layer][j] = std::min(dp[layer][j], dp[layer - 1][i] + cost(i, j));
            }
        }
    }
    return dp[m][g] / g;
}

std::vector<double> midpoint_samples(int grid) {
    std::vector<double> f(grid);
    for (int i = 0; i < grid; ++i) f[i] = (i + 0.5) / grid;
    return f;
}

} // namespace

TEST_SUITE("theory") {

TEST_CASE("floor lower bound matches the closed form") {
    FloorParams p;
    p.delta_beta_sq = 4.0;
    p.kappa = 1.0;
    p.a = 0.0;
    p.b = 1.0;
    p.m = 1;
    CHECK(floor_lower_bound(p) == doctest::Approx(4.0 / 12.0).epsilon(1e-12));

    p.m = 2;
    CHECK(floor_lower_bound(p) == doctest::Approx(1.0 / 12.0).epsilon(1e-12));

    p.m = 1;
    p.b = 2.0;
    CHECK(floor_lower_bound(p) == doctest::Approx(8.0 * 4.0 / 12.0).epsilon(1e-12));

    p.b = 1.0;
    p.kappa = 0.0;
    CHECK(floor_lower_bound(p) == 0.0);
}

TEST_CASE("floor parameter validation") {
    FloorParams p;
    p.delta_beta_sq = 1.0;
    p.kappa = 0.5;

    FloorParams bad = p;
    bad.m = 0;
    CHECK_THROWS_AS(floor_lower_bound(bad), std::invalid_argument);

    bad = p;
    bad.b = bad.a;
    CHECK_THROWS_AS(floor_lower_bound(bad), std::invalid_argument);

    bad = p;
    bad.delta_beta_sq = -1.0;
    CHECK_THROWS_AS(floor_lower_bound(bad), std::invalid_argument);

    bad = p;
    bad.kappa = -0.1;
    CHECK_THROWS_AS(floor_lower_bound(bad), std::invalid_argument);
}

TEST_CASE("best step fit of a constant is zero") {
    std::vector<double> f(400, 0.75);
    for (int m : {1, 2, 5}) CHECK(best_step_fit(f, m) <= 1e-15);
}

TEST_CASE("best step fit of the identity matches the grid variance") {
    const int g = 10000;
    const std::vector<double> f = midpoint_samples(g);

    const double exact1 = (1.0 - 1.0 / (static_cast<double>(g) * g)) / 12.0;
    const double dp1 = best_step_fit(f, 1);
    CHECK(dp1 == doctest::Approx(exact1).epsilon(1e-9));
    CHECK(std::abs(dp1 - 1.0 / 12.0) < 1e-4);

    // four equal pieces are optimal by symmetry
    const double exact4 = (1.0 / 16.0 - 1.0 / (static_cast<double>(g) * g)) / 12.0;
    const double dp4 = best_step_fit(f, 4);
    CHECK(dp4 <= exact4 + 1e-12);
    CHECK(dp4 >= exact4 * 0.99);
    CHECK(std::abs(dp4 - 1.0 / (12.0 * 16.0)) / (1.0 / (12.0 * 16.0)) < 0.01);
}

TEST_CASE("best step fit is nonincreasing in the piece count") {
    const int g = 500;
    std::vector<double> f(g);
    for (int i = 0; i < g; ++i) {
        const double t = (i + 0.5) / g;
        f[i] = std::sin(6.0 * t) + 0.3 * t * t;
    }
    double prev = best_step_fit(f, 1);
    for (int m = 2; m <= 6; ++m) {
        const double cur = best_step_fit(f, m);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("divide and conquer split search agrees with the quadratic recursion") {
    Rng rng(404);
    for (int trial = 0; trial < 6; ++trial) {
        const int g = 60 + static_cast<int>(rng.uniform_int(40));
        std::vector<double> f(g);
        for (int i = 0; i < g; ++i) f[i] = rng.gaussian() + 0.5 * std::sin(0.3 * i);
        for (int m : {1, 2, 3}) {
            const double fast = best_step_fit(f, m);
            const double slow = brute_step_fit(f, m);
            CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
        }
        std::sort(f.begin(), f.end());
        for (int m : {2, 3, 5}) {
            const double fast = best_step_fit(f, m);
            const double slow = brute_step_fit(f, m);
            CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
        }
    }
}

TEST_CASE("best step fit lower-bounds random step predictors") {
    Rng rng(71);
    const int g = 200;
    const int m = 3;
    std::vector<double> f(g);
    for (int i = 0; i < g; ++i) f[i] = rng.gaussian();
    const double dp = best_step_fit(f, m);
    for (int trial = 0; trial < 100; ++trial) {
        // random cut points, per-piece optimal constant
        int c1 = 1 + static_cast<int>(rng.uniform_int(g - 2));
        int c2 = 1 + static_cast<int>(rng.uniform_int(g - 2));
        if (c1 > c2) std::swap(c1, c2);
        if (c1 == c2) continue;
        const std::vector<int> cuts = {0, c1, c2, g};
        double err = 0.0;
        for (int piece = 0; piece < 3; ++piece) {
            double s = 0.0;
            for (int i = cuts[piece]; i < cuts[piece + 1]; ++i) s += f[i];
            const double mean = s / (cuts[piece + 1] - cuts[piece]);
            for (int i = cuts[piece]; i < cuts[piece + 1]; ++i)
                err += (f[i] - mean) * (f[i] - mean);
        }
        err /= g;
        CHECK(dp <= err + 1e-12);
    }
}

TEST_CASE("best step fit refuses coarse grids and bad piece counts") {
    CHECK_THROWS_AS(best_step_fit(std::vector<double>(29, 0.0), 3), std::invalid_argument);
    CHECK_THROWS_AS(best_step_fit(std::vector<double>(100, 0.0), 0), std::invalid_argument);
    CHECK_NOTHROW(best_step_fit(std::vector<double>(30, 0.0), 3));
}

TEST_CASE("linear gate floor sandwich holds with tight dp values") {
    const std::vector<int> m_list = {1, 2, 4, 8, 16};
    const double dbsq = 4.0;
    const FloorReport rep = verify_floor(
        "linear", [](double t) { return t; }, 1.0, 1.0, dbsq, 0.0, 1.0, m_list);
    CHECK(rep.all_pass);
    REQUIRE(rep.rows.size() == m_list.size());
    for (std::size_t i = 0; i < m_list.size(); ++i) {
        const FloorCheckRow& row = rep.rows[i];
        const double m = static_cast<double>(m_list[i]);
        CHECK(row.m == m_list[i]);
        CHECK(row.pass);
        const double exact = dbsq / (12.0 * m * m);
        CHECK(std::abs(row.dp - exact) / exact < 0.01);
        CHECK(row.lower == doctest::Approx(exact).epsilon(1e-12));
        CHECK(row.dp >= row.lower * (1.0 - 1e-4));
        CHECK(row.dp <= row.upper);
    }
}

TEST_CASE("sigmoid gate floor sandwich holds and inflated kappa breaks it") {
    bench::BenchConfig bc;
    bc.seed = 5;
    bc.tau = 1.2;
    const bench::TwoExpertTruth truth = bench::make_two_expert_truth(bc);
    const std::vector<int> m_list = {1, 2, 4, 8};

    const FloorReport good = verify_floor(truth, m_list);
    CHECK(good.all_pass);
    REQUIRE(good.rows.size() == m_list.size());
    for (const FloorCheckRow& row : good.rows) {
        CHECK(row.lower > 0.0);
        CHECK(row.dp >= row.lower * (1.0 - 1e-4));
        CHECK(row.dp <= row.upper * (1.0 + 1e-4));
    }

    const double s = glm::sigmoid(truth.tau);
    const double analytic_kappa = truth.tau * s * (1.0 - s);
    const FloorReport bad = verify_floor(truth, m_list, 0.0, 1.0, 10000, 5.0 * analytic_kappa);
    CHECK_FALSE(bad.all_pass);
}

TEST_CASE("floor verification rejects flat gates and coarse grids") {
    bench::TwoExpertTruth flat = axis_truth(0.0);
    CHECK_THROWS_AS(verify_floor(flat, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(verify_floor(
                        "x", [](double t) { return t; }, 1.0, 1.0, 1.0, 0.0, 1.0, {1}, 50),
                    std::invalid_argument);
}

TEST_CASE("pooled oracle error is zero for a flat gate") {
    const bench::TwoExpertTruth truth = axis_truth(0.0);
    std::vector<ContextVector> contexts;
    for (int i = 0; i < 50; ++i) contexts.push_back(ctx1(0.1 * i - 2.0));
    CHECK(pooled_oracle_error(truth, contexts) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("pooled oracle error saturates at a quarter of the expert gap") {
    const bench::TwoExpertTruth truth = axis_truth(400.0);
    std::vector<ContextVector> contexts;
    for (int i = 0; i < 100; ++i) contexts.push_back(ctx1(i % 2 == 0 ? 1.0 : -1.0));
    // lambda alternates between ~0 and ~1, so Var = 1/4 and ||dbeta||^2 = 2
    CHECK(pooled_oracle_error(truth, contexts) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("pooled oracle error equals the best-constant projection distance") {
    const bench::TwoExpertTruth truth = axis_truth(1.2);
    Rng rng = Rng::stream(2024, "theory/pooled");
    std::vector<ContextVector> contexts;
    for (int i = 0; i < 5000; ++i) contexts.push_back(gauss_ctx(rng));
    const double oracle = pooled_oracle_error(truth, contexts);
    const double projection = empirical_best_constant_error(truth, contexts);
    CHECK(oracle == doctest::Approx(projection).epsilon(1e-9));
    CHECK(oracle > 0.0);
}

TEST_CASE("aligned hard threshold error matches its analytic bound") {
    const bench::TwoExpertTruth truth = axis_truth(1.2);
    Rng rng = Rng::stream(7, "theory/aligned");
    std::vector<ContextVector> contexts;
    for (int i = 0; i < 4000; ++i) contexts.push_back(gauss_ctx(rng));
    const std::vector<double> eps = {0.05, 0.1, 0.2, 0.3};
    const AlignedHardReport rep = aligned_hard_upper(truth, contexts, eps);
    CHECK(rep.pass);
    CHECK(rep.threshold_error == doctest::Approx(rep.bound).epsilon(1e-12));
    REQUIRE(rep.eps_bounds.size() == eps.size());
    for (std::size_t e = 0; e < eps.size(); ++e) {
        CHECK(rep.threshold_error <= rep.eps_bounds[e] * (1.0 + 1e-9) + 1e-15);
    }
}

TEST_CASE("aligned hard error collapses for sharp gates and peaks for flat ones") {
    std::vector<ContextVector> spread;
    for (int i = 0; i < 200; ++i) spread.push_back(ctx1(i % 2 == 0 ? 2.0 : -2.0));

    const AlignedHardReport sharp = aligned_hard_upper(axis_truth(500.0), spread, {0.1});
    CHECK(sharp.threshold_error < 1e-10);

    const AlignedHardReport flat = aligned_hard_upper(axis_truth(0.0), spread, {0.1});
    // lambda == 1/2 everywhere, so the threshold predictor misses by half the gap
    CHECK(flat.threshold_error == doctest::Approx(2.0 * 0.25).epsilon(1e-12));
}

TEST_CASE("hard partition decomposition identity holds for random predictors") {
    Rng rng = Rng::stream(11, "theory/decomp");
    const int n = 200, j = 4;
    Mat w(n, j);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < j; ++d) w(i, d) = rng.gaussian();
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.uniform_int(3));

    const DecompositionReport rep = hard_partition_decomposition_check(w, labels, 50, rng);
    CHECK(rep.pass);
    CHECK(rep.max_rel_error <= 1e-8);
    CHECK(rep.predictors_checked == 50);
    CHECK(rep.empty_cells == 0);
}

TEST_CASE("hard partition decomposition counts unused cells") {
    Rng rng = Rng::stream(12, "theory/decomp");
    const int n = 80, j = 3;
    Mat w(n, j);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < j; ++d) w(i, d) = rng.gaussian();
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i % 2 == 0 ? 0 : 2; // label 1 never appears

    const DecompositionReport rep = hard_partition_decomposition_check(w, labels, 20, rng);
    CHECK(rep.pass);
    CHECK(rep.empty_cells == 1);
}

TEST_CASE("hard partition decomposition rejects malformed inputs") {
    Rng rng(3);
    Mat w = Mat::Zero(4, 2);
    CHECK_THROWS_AS(hard_partition_decomposition_check(w, {0, 1, 0}, 5, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(hard_partition_decomposition_check(w, {0, 1, 0, -1}, 5, rng),
                    std::invalid_argument);
}

TEST_CASE("soft decomposition identity and quadratic bound hold") {
    Rng rng = Rng::stream(21, "theory/soft");
    const SoftDecompReport rep = soft_decomposition_check(300, rng);
    CHECK(rep.pass);
    CHECK(rep.max_identity_rel <= 1e-10);
    CHECK(rep.lhs <= rep.rhs * (1.0 + 1e-12));
    CHECK(rep.rhs > 0.0);
}

TEST_CASE("rate sweep config validation") {
    RateSweepConfig ok;
    CHECK_NOTHROW(ok.validate());

    RateSweepConfig bad = ok;
    bad.n_grid = {500, 1000};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = ok;
    bad.n_grid = {500, 400, 800, 1600};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = ok;
    bad.n_grid = {50, 100, 200, 400};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = ok;
    bad.seeds_per_n = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = ok;
    bad.k = 3;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = ok;
    bad.n_eval = 50;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = ok;
    bad.tau = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = ok;
    bad.n_grid = {500, 1000, 2000};
    CHECK_THROWS_AS(hard_rate_sweep(bad), std::invalid_argument);
}

TEST_CASE("regret transfer audit accepts consistent rows and flags violations") {
    const RegretTransferReport empty = regret_transfer_audit({});
    CHECK(empty.pass);
    CHECK(empty.rows == 0);
    CHECK(empty.violations == 0);

    std::vector<RegretRecord> rows;
    rows.push_back({0, 0, 0.0, 0.3, 0.01});  // correct pick, wide margin
    rows.push_back({2, 1, 0.15, 0.1, 0.1});  // regret within twice the perturbation
    const RegretTransferReport good = regret_transfer_audit(rows);
    CHECK(good.pass);
    CHECK(good.rows == 2);
    CHECK(good.violations == 0);
    CHECK(good.mean_regret == doctest::Approx(0.075).epsilon(1e-12));

    rows.push_back({0, 3, 1.0, 0.5, 0.1}); // margin exceeds 2 delta yet regret is positive
    const RegretTransferReport broken = regret_transfer_audit(rows);
    CHECK_FALSE(broken.pass);
    CHECK(broken.violations == 1);
}

TEST_CASE("random decision triples never violate the margin transfer bound") {
    Rng rng = Rng::stream(404, "theory/triples");
    const RegretTransferReport rep = random_triple_audit(2000, 4, 10, rng);
    CHECK(rep.pass);
    CHECK(rep.rows == 2000);
    CHECK(rep.violations == 0);
    // the localized form dominates the mean regret at the optimal eta
    CHECK(rep.mean_regret <= rep.localized_bound * (1.0 + 1e-9) + 1e-12);
    CHECK(rep.best_eta > 0.0);

    CHECK_THROWS_AS(random_triple_audit(0, 4, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(random_triple_audit(10, 0, 10, rng), std::invalid_argument);
}

TEST_CASE("hard rate sweep error decreases with sample size") {
    RateSweepConfig cfg;
    cfg.n_grid = {200, 400, 800, 1600};
    cfg.seeds_per_n = 2;
    cfg.j = 3;
    cfg.k = 2;
    cfg.m_library = 12;
    cfg.n_eval = 500;
    cfg.seed = 17;

    const RateSweepResult res = hard_rate_sweep(cfg);
    REQUIRE(res.mean_mse.size() == cfg.n_grid.size());
    for (double v : res.mean_mse) {
        CHECK(std::isfinite(v));
        CHECK(v > 0.0);
    }
    CHECK(res.mean_mse.back() < res.mean_mse.front());
    CHECK(res.slope < -0.2);
    REQUIRE(res.bins_used.size() == cfg.n_grid.size());
    for (std::size_t i = 1; i < res.bins_used.size(); ++i)
        CHECK(res.bins_used[i] >= res.bins_used[i - 1]);
    CHECK(res.eval_rows ==
          static_cast<long long>(cfg.n_grid.size()) * cfg.seeds_per_n * cfg.n_eval);
    CHECK(res.regret_violations == 0);
}

TEST_CASE("soft rate sweep error decreases with sample size") {
    RateSweepConfig cfg;
    cfg.n_grid = {200, 400, 800, 1600};
    cfg.seeds_per_n = 2;
    cfg.j = 3;
    cfg.k = 2;
    cfg.m_library = 12;
    cfg.n_eval = 500;
    cfg.seed = 17;

    const RateSweepResult res = soft_rate_sweep(cfg);
    REQUIRE(res.mean_mse.size() == cfg.n_grid.size());
    for (double v : res.mean_mse) {
        CHECK(std::isfinite(v));
        CHECK(v > 0.0);
    }
    CHECK(res.mean_mse.back() < res.mean_mse.front());
    CHECK(res.slope < -0.3);
    CHECK(res.eval_rows ==
          static_cast<long long>(cfg.n_grid.size()) * cfg.seeds_per_n * cfg.n_eval);
    CHECK(res.regret_violations == 0);
}

TEST_CASE("soft rate sweep with a single expert still runs") {
    RateSweepConfig cfg;
    cfg.n_grid = {200, 400, 800, 1600};
    cfg.seeds_per_n = 1;
    cfg.j = 2;
    cfg.k = 1;
    cfg.m_library = 8;
    cfg.n_eval = 300;
    cfg.seed = 5;

    const RateSweepResult res = soft_rate_sweep(cfg);
    for (double v : res.mean_mse) {
        CHECK(std::isfinite(v));
        CHECK(v > 0.0);
    }
    CHECK(res.regret_violations == 0);
}

} // TEST_SUITE
