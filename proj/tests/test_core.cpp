#include "otss/decision.hpp"
#include "otss/rng.hpp"
#include "otss/types.hpp"

#include <doctest.h>

#include <cmath>

using namespace otss;

namespace {

DecisionLibrary make_lib(std::initializer_list<std::initializer_list<double>> rows) {
    const int m = static_cast<int>(rows.size());
    const int j = static_cast<int>(rows.begin()->size());
    Mat f(m, j);
    int r = 0;
    for (const auto& row : rows) {
        int c = 0;
        for (double v : row) f(r, c++) = v;
        ++r;
    }
    return DecisionLibrary(f);
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

} // namespace

TEST_SUITE("core") {

TEST_CASE("score is the plain inner product") {
    CHECK(score(Vec::Zero(3), Vec::Ones(3)) == 0.0);
    CHECK(score(vec2(1.0, 0.0), vec2(2.0, -1.0)) == 2.0);
    CHECK(score(vec2(0.5, 0.5), vec2(1.0, -1.0)) == 0.0);
    CHECK_THROWS_AS(score(Vec::Zero(2), Vec::Zero(3)), std::invalid_argument);
}

TEST_CASE("argmax picks the best row, lowest index on ties") {
    const DecisionLibrary axes = make_lib({{1.0, 0.0}, {0.0, 1.0}});
    CHECK(argmax_decision(vec2(1.0, 0.0), axes) == 0);
    CHECK(argmax_decision(vec2(0.0, 1.0), axes) == 1);
    CHECK(argmax_decision(Vec::Zero(2), axes) == 0);

    const DecisionLibrary scaled = make_lib({{0.0, 0.0}, {0.3, 0.3}, {0.2, 0.2}});
    CHECK(argmax_decision(vec2(1.0, 1.0), scaled) == 1);

    CHECK_THROWS_AS(argmax_decision(Vec::Zero(2), DecisionLibrary(Mat(0, 2))),
                    std::invalid_argument);
}

TEST_CASE("argmax is invariant to positive rescaling of the weights") {
    Rng rng(21);
    for (int t = 0; t < 500; ++t) {
        Mat f(6, 3);
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 3; ++c) f(r, c) = rng.uniform(-1.0, 1.0);
        const DecisionLibrary lib(f);
        Vec w(3);
        for (int c = 0; c < 3; ++c) w[c] = rng.gaussian();
        const double scale = rng.uniform(0.1, 10.0);
        CHECK(argmax_decision(w, lib) == argmax_decision(Vec(scale * w), lib));
    }
}

TEST_CASE("regret of the truth is zero") {
    const DecisionLibrary axes = make_lib({{1.0, 0.0}, {0.0, 1.0}});
    const RegretRecord rec = regret(vec2(2.0, 1.0), vec2(2.0, 1.0), axes);
    CHECK(rec.regret == 0.0);
    CHECK(rec.chosen_index == rec.oracle_index);
    CHECK(rec.perturb_delta == 0.0);
}

TEST_CASE("single-entry library leaves no room for regret") {
    const DecisionLibrary solo = make_lib({{0.4, -0.7}});
    const RegretRecord rec = regret(vec2(1.0, 2.0), vec2(-5.0, 3.0), solo);
    CHECK(rec.regret == 0.0);
    CHECK(rec.oracle_index == 0);
    CHECK(rec.chosen_index == 0);
    CHECK(rec.margin_gamma == 0.0);
}

TEST_CASE("orthogonal misestimate on the axis library") {
    const DecisionLibrary axes = make_lib({{1.0, 0.0}, {0.0, 1.0}});
    const RegretRecord rec = regret(vec2(1.0, 0.0), vec2(0.0, 1.0), axes);
    CHECK(rec.oracle_index == 0);
    CHECK(rec.chosen_index == 1);
    CHECK(rec.regret == 1.0);
    CHECK(rec.margin_gamma == 1.0);
    CHECK(rec.perturb_delta == 1.0);
}

TEST_CASE("duplicate optimum collapses the margin to zero") {
    const DecisionLibrary dup = make_lib({{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}});
    const RegretRecord rec = regret(vec2(1.0, 0.0), vec2(1.0, 0.1), dup);
    CHECK(rec.margin_gamma == 0.0);
}

TEST_CASE("margin transfer holds on random triples") {
    Rng rng(99);
    int big_margin_rows = 0;
    for (int t = 0; t < 10000; ++t) {
        const int m = 2 + static_cast<int>(rng.uniform_int(10));
        Mat f(m, 4);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < 4; ++c) f(r, c) = rng.uniform(-1.0, 1.0);
        const DecisionLibrary lib(f);
        Vec w_star(4), noise(4);
        for (int c = 0; c < 4; ++c) {
            w_star[c] = rng.gaussian();
            noise[c] = rng.gaussian();
        }
        const double scale = std::pow(10.0, rng.uniform(-3.0, 0.3));
        const RegretRecord rec = regret(w_star, w_star + scale * noise, lib);

        CHECK(rec.regret >= 0.0);
        const double bound =
            rec.margin_gamma <= 2.0 * rec.perturb_delta ? 2.0 * rec.perturb_delta : 0.0;
        const double tol =
            1e-9 * (1.0 + rec.margin_gamma + rec.perturb_delta + std::abs(rec.regret));
        CHECK(rec.regret <= bound + tol);
        if (rec.margin_gamma > 2.0 * rec.perturb_delta + tol) {
            ++big_margin_rows;
            CHECK(rec.chosen_index == rec.oracle_index);
            CHECK(rec.regret == 0.0);
        }
    }
    // the scale distribution must actually exercise the gamma > 2 delta branch
    CHECK(big_margin_rows > 1000);
}

} // TEST_SUITE
