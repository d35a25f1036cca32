#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "collusim/bias.hpp"
#include "test_util.hpp"

using namespace collusim;
using Catch::Approx;

TEST_CASE("density closed forms") {
    const auto arc = BiasDistribution::arcsine();
    CHECK(density(arc, 0.5) == Approx(2.0 / kPi).epsilon(1e-12));
    CHECK(density(BiasDistribution::uniform(), 0.3) == Approx(1.0));
    // 1/(pi sqrt(0.01*0.99)), evaluated with 30-digit arithmetic
    CHECK(density(arc, 0.01) == Approx(3.19913472585565431).epsilon(1e-12));
}

TEST_CASE("density domain and discreteness errors") {
    const auto arc = BiasDistribution::arcsine();
    CHECK_THROWS_AS(density(arc, 0.0), DomainError);
    CHECK_THROWS_AS(density(arc, 1.0), DomainError);
    CHECK_THROWS_AS(density(arc, -0.2), DomainError);
    CHECK_THROWS_AS(density(BiasDistribution::point_mass(0.5), 0.5), NoDensity);
    CHECK_THROWS_AS(density(BiasDistribution::grid({0.3, 0.6}, {0.5, 0.5}), 0.3), NoDensity);
}

TEST_CASE("distribution constructors validate") {
    CHECK_THROWS_AS(BiasDistribution::point_mass(0.0), DomainError);
    CHECK_THROWS_AS(BiasDistribution::point_mass(1.0), DomainError);
    CHECK_THROWS_AS(BiasDistribution::grid({0.0, 0.5}, {0.5, 0.5}), DomainError);
    CHECK_THROWS_AS(BiasDistribution::grid({0.5, 0.5}, {0.5, 0.5}), InvalidArgs);
    CHECK_THROWS_AS(BiasDistribution::grid({0.3, 0.6}, {0.6, 0.6}), NotNormalized);
}

TEST_CASE("quadrature weights sum to one") {
    for (int order : {2, 16, 64, 301, 1024}) {
        for (const auto& d : {BiasDistribution::arcsine(), BiasDistribution::uniform()}) {
            const auto rule = make_quadrature(d, order);
            double s = 0.0;
            for (double w : rule.weights) s += w;
            CHECK(s == Approx(1.0).margin(1e-10));
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                CHECK(rule.nodes[i] > 0.0);
                CHECK(rule.nodes[i] < 1.0);
                if (i > 0) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
            }
        }
    }
}

TEST_CASE("quadrature on discrete measures returns the atoms") {
    const auto pm = make_quadrature(BiasDistribution::point_mass(0.5), 128);
    REQUIRE(pm.nodes.size() == 1);
    CHECK(pm.nodes[0] == 0.5);
    CHECK(pm.weights[0] == 1.0);

    const auto g = make_quadrature(BiasDistribution::grid({0.2, 0.7}, {0.25, 0.75}), 99);
    REQUIRE(g.nodes.size() == 2);
    CHECK(g.nodes[0] == 0.2);
    CHECK(g.weights[1] == 0.75);
}

TEST_CASE("quadrature order limits") {
    CHECK_THROWS_AS(make_quadrature(BiasDistribution::arcsine(), 1), InvalidArgs);
    CHECK_THROWS_AS(make_quadrature(BiasDistribution::arcsine(), 5000), UnsupportedOrder);
}

TEST_CASE("arcsine rule integrates moments exactly") {
    const auto rule = make_quadrature(BiasDistribution::arcsine(), 128);
    // E[W] = 1/2 by symmetry; E[W^2] = 3/8 for the arcsine law
    CHECK(expect(rule, [](double w) { return w; }) == Approx(0.5).margin(1e-10));
    CHECK(expect(rule, [](double w) { return w * w; }) == Approx(0.375).margin(1e-10));
}

TEST_CASE("expect basics") {
    const auto rule = make_quadrature(BiasDistribution::arcsine(), 64);
    CHECK(expect(rule, [](double) { return 1.0; }) == Approx(1.0).margin(1e-10));
    const auto pm = make_quadrature(BiasDistribution::point_mass(0.5), 2);
    CHECK(expect(pm, [](double w) { return binary_entropy(w); }) == Approx(1.0));
    CHECK_THROWS_AS(
        expect(rule, [](double w) { return w < 0.5 ? 1.0 : std::numeric_limits<double>::infinity(); }),
        NonFiniteValue);
}

TEST_CASE("expect reproduces the arcsine fisher constant") {
    // E_f[ 1/(f(w)^2 w(1-w)) ] is the fisher integral; for the arcsine
    // density the integrand is identically pi^2.
    const auto arc = BiasDistribution::arcsine();
    const auto rule = make_quadrature(arc, 64);
    const double v = expect(rule, [&](double w) {
        const double f = density(arc, w);
        return 1.0 / (f * f * w * (1.0 - w));
    });
    CHECK(v == Approx(kPi * kPi).margin(1e-6));
}

TEST_CASE("fisher integral values") {
    CHECK(fisher_integral(BiasDistribution::arcsine(), 64) ==
          Approx(9.869604401089358).margin(1e-6));
    CHECK(std::isinf(fisher_integral(BiasDistribution::uniform(), 16)));
    CHECK_THROWS_AS(fisher_integral(BiasDistribution::point_mass(0.5), 64), NoDensity);

    const auto g = BiasDistribution::grid({0.2, 0.5, 0.8}, {0.3, 0.4, 0.3});
    const double direct = testutil::grid_fisher_direct(g);
    CHECK(fisher_integral(g, 64) == Approx(direct).epsilon(1e-12));
    CHECK(direct > 0.0);
}

TEST_CASE("expect converges under order doubling") {
    // beyond order 256 a doubling moves any of the reference integrands
    // by less than 1e-8
    for (const auto& d : {BiasDistribution::arcsine(), BiasDistribution::uniform()}) {
        for (auto h : {+[](double w) { return w; }, +[](double w) { return w * w; },
                       +[](double w) { return binary_entropy(w); }}) {
            const double a = expect(make_quadrature(d, 512), h);
            const double b = expect(make_quadrature(d, 1024), h);
            const double c = expect(make_quadrature(d, 2048), h);
            CHECK(std::abs(b - a) < 1e-8);
            CHECK(std::abs(c - b) < 1e-8);
        }
    }
}

TEST_CASE("arcsine maximizes the fisher bound") {
    const double arcsine_bound = kPi * kPi / fisher_integral(BiasDistribution::arcsine(), 64);
    CHECK(arcsine_bound == Approx(1.0).margin(1e-6));

    std::mt19937_64 rng(20240817);
    for (int rep = 0; rep < 50; ++rep) {
        const auto g = testutil::random_grid(rng);
        const double bound = kPi * kPi / fisher_integral(g, 64);
        CHECK(bound <= 1.0 + 1e-9);
    }
}
