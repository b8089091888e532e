#include "otss/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using otss::Rng;

TEST_SUITE("rng") {

TEST_CASE("same seed reproduces the sequence") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("named streams are deterministic and distinct") {
    Rng a = Rng::stream(7, "bench/train");
    Rng a2 = Rng::stream(7, "bench/train");
    Rng b = Rng::stream(7, "bench/eval");
    CHECK(a.next_u64() == a2.next_u64());

    int agree = 0;
    Rng a3 = Rng::stream(7, "bench/train");
    for (int i = 0; i < 64; ++i) {
        a3.next_u64();
        if (a3.next_u64() == b.next_u64()) ++agree;
    }
    CHECK(agree < 4);
}

TEST_CASE("tag hash pins the FNV-1a constants") {
    CHECK(Rng::hash_tag("") == 0xcbf29ce484222325ULL);
    CHECK(Rng::hash_tag("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("uniform stays inside its interval") {
    Rng r(3);
    for (int i = 0; i < 20000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < 20000; ++i) {
        const double u = r.uniform(-2.0, 5.0);
        CHECK(u >= -2.0);
        CHECK(u < 5.0);
    }
    for (int i = 0; i < 1000; ++i) CHECK(r.uniform_pos() > 0.0);
}

TEST_CASE("gaussian consumes exactly two raw draws") {
    Rng a = Rng::stream(11, "x");
    Rng b = Rng::stream(11, "x");
    a.gaussian();
    b.next_u64();
    b.next_u64();
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("gaussian moments") {
    Rng r(5);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = r.gaussian();
        sum += g;
        sum_sq += g * g;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("bernoulli respects the endpoints") {
    Rng r(9);
    for (int i = 0; i < 1000; ++i) {
        CHECK_FALSE(r.bernoulli(0.0));
        CHECK(r.bernoulli(1.0));
    }
    int hits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits += r.bernoulli(0.3) ? 1 : 0;
    CHECK(std::abs(hits / static_cast<double>(n) - 0.3) < 0.01);
}

TEST_CASE("uniform_int covers its range evenly") {
    Rng r(13);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto v = r.uniform_int(7);
        REQUIRE(v < 7);
        ++counts[static_cast<int>(v)];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

} // TEST_SUITE
