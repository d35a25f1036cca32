#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "collusim/asymptotics.hpp"
#include "test_util.hpp"

using namespace collusim;
using Catch::Approx;

TEST_CASE("arccos transform") {
    CHECK(g_arc(0.0) == Approx(0.0));
    CHECK(g_arc(1.0) == Approx(kPi));
    CHECK(g_arc(0.5) == Approx(kPi / 2.0));
    CHECK_THROWS_AS(g_arc(-0.1), DomainError);
    CHECK_THROWS_AS(g_arc(1.1), DomainError);
}

TEST_CASE("local payoff density, analytic forms") {
    const auto il = ContinuumAttack::interleaving();
    for (double w : {0.05, 0.3, 0.5, 0.9}) CHECK(local_j(il, w) == Approx(1.0));

    const auto go = ContinuumAttack::g_opt(BiasDistribution::arcsine(), 2048);
    CHECK(local_j(go, 0.3) == Approx(1.0).margin(1e-8));
    CHECK(local_j(go, 0.7) == Approx(1.0).margin(1e-8));

    const auto cf = ContinuumAttack::coin_flip();
    CHECK(local_j(cf, 0.4) == 0.0);
}

TEST_CASE("local payoff density by finite differences") {
    const std::function<double(double)> ident = [](double w) { return w; };
    CHECK(local_j(ident, 0.5, 1e-5) == Approx(1.0).margin(1e-6));
    CHECK(local_j(ident, 0.25, 1e-5) == Approx(1.0).margin(1e-6));
    CHECK_THROWS_AS(local_j(ident, 1e-6, 1e-5), DomainError);
    const std::function<double(double)> pinned = [](double w) { return w < 0.5 ? 0.0 : 1.0; };
    CHECK_THROWS_AS(local_j(pinned, 0.3, 1e-5), NonFiniteValue);
}

TEST_CASE("majority has no continuum form") {
    CHECK_THROWS_AS(ContinuumAttack::from_named(NamedAttack::majority()), InvalidArgs);
    CHECK_THROWS_AS(ContinuumAttack::from_named(NamedAttack::minority()), InvalidArgs);
}

TEST_CASE("jbar of interleaving is one for every bias") {
    std::mt19937_64 rng(5);
    const auto il = ContinuumAttack::interleaving();
    CHECK(jbar(il, BiasDistribution::arcsine(), 256) == Approx(1.0).margin(1e-9));
    CHECK(jbar(il, BiasDistribution::uniform(), 256) == Approx(1.0).margin(1e-9));
    for (int rep = 0; rep < 10; ++rep)
        CHECK(jbar(il, testutil::random_grid(rng), 64) == Approx(1.0).margin(1e-9));
}

TEST_CASE("jbar attains the fisher bound exactly at g_opt") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        const auto g = testutil::random_grid(rng);
        const double fisher = fisher_integral(g, 64);
        const auto go = ContinuumAttack::g_opt(g, 2048);
        CHECK(jbar(go, g, 64) == Approx(kPi * kPi / fisher).margin(1e-6));
    }
}

TEST_CASE("jbar dominates the fisher bound") {
    const auto arc = BiasDistribution::arcsine();
    const double bound = kPi * kPi / fisher_integral(arc, 128);
    CHECK(bound == Approx(1.0).margin(1e-9));
    CHECK(jbar(ContinuumAttack::interleaving(), arc, 128) >= bound - 1e-9);
    // a smooth non-optimal response stays above the bound
    const std::function<double(double)> skew = [](double w) { return 0.5 * (w + w * w); };
    CHECK(jbar(skew, arc, 48) >= bound - 1e-6);

    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        const auto g = testutil::random_grid(rng);
        const double b = kPi * kPi / fisher_integral(g, 64);
        CHECK(jbar(ContinuumAttack::interleaving(), g, 64) >= b - 1e-6);
        CHECK(jbar(ContinuumAttack::g_opt(g, 2048), g, 64) >= b - 1e-6);
    }
}

TEST_CASE("g_opt closed form under the arcsine bias") {
    const auto arc = BiasDistribution::arcsine();
    CHECK(g_opt_eval(arc, 0.5, 512) == Approx(0.5).margin(1e-8));
    CHECK(g_opt_eval(arc, 0.0, 512) == 0.0);
    CHECK(g_opt_eval(arc, 1.0, 512) == 1.0);
    for (int i = 1; i < 40; ++i) {
        const double w = i / 40.0;
        CHECK(g_opt_eval(arc, w, 512) == Approx(w).margin(1e-8));
    }
}

TEST_CASE("g_opt is monotone onto [0,1]") {
    std::mt19937_64 rng(41);
    for (const auto& f : {BiasDistribution::arcsine(), testutil::random_grid(rng)}) {
        double prev = 0.0;
        for (int i = 0; i <= 100; ++i) {
            const double g = g_opt_eval(f, i / 100.0, 256);
            CHECK(g >= prev - 1e-12);
            CHECK(g >= 0.0);
            CHECK(g <= 1.0);
            prev = g;
        }
    }
    CHECK_THROWS_AS(g_opt_eval(BiasDistribution::uniform(), 0.5, 256), DivergentBias);
}

TEST_CASE("asymptotic value") {
    CHECK(asymptotic_value(100, 2) == Approx(2.885390081777927e-4).epsilon(1e-12));
    CHECK(asymptotic_value(7, 1) == Approx(1.0 / (49.0 * 2.0 * kLn2)));
    CHECK(asymptotic_value(5, 5) == Approx(1.0 / (2.0 * kLn2)));
    CHECK_THROWS_AS(asymptotic_value(2, 3), InvalidArgs);
}

TEST_CASE("convergence ratio at k=L is 2 ln 2") {
    const auto pm = BiasDistribution::point_mass(0.5);
    for (int k : {2, 4, 6}) {
        const auto t = realize(NamedAttack::interleaving(), 1);
        const double r = convergence_ratio(k, k, pm, t, equal_split(k, k), 8);
        CHECK(r == Approx(2.0 * kLn2).margin(1e-10));
    }
}

TEST_CASE("convergence ratio along the optimal strategies") {
    const auto arc = BiasDistribution::arcsine();
    const double r10 =
        convergence_ratio(10, 1, arc, realize(NamedAttack::interleaving(), 10),
                          equal_split(10, 1), 256);
    CHECK(r10 > 0.8);
    CHECK(r10 < 1.3);
    // frozen from the quadrature oracle at order 256
    CHECK(r10 == Approx(0.946366).margin(5e-5));

    const double r300 =
        convergence_ratio(300, 1, arc, realize(NamedAttack::interleaving(), 300),
                          equal_split(300, 1), 256);
    CHECK(std::abs(r300 - 1.0) < std::abs(r10 - 1.0));
}

TEST_CASE("finite-c remainder shrinks with c") {
    const auto arc = BiasDistribution::arcsine();
    const double jb = 1.0;  // interleaving
    double prev = 1e9;
    for (int c : {10, 30, 100}) {
        const auto t = realize(NamedAttack::interleaving(), c);
        const double v = std::abs(c * c * 2.0 * kLn2 * script_i(c, arc, t.row(c), 256) - jb);
        CHECK(v < prev);
        prev = v;
    }
}
