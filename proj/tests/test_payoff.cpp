#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "collusim/payoff.hpp"
#include "test_util.hpp"

using namespace collusim;
using Catch::Approx;

namespace {

// independent oracle: I(Y;C|W) by direct enumeration over a discrete bias
// (atoms make every expectation a finite sum, so no quadrature enters)
double mi_yc_oracle(const BiasDistribution& grid_bias, const AttackTable& attack,
                    const std::map<Composition, double>& comps) {
    const auto& nodes = grid_bias.atom_nodes();
    const auto& wts = grid_bias.atom_weights();
    const int l = static_cast<int>(comps.begin()->first.size());
    const int ny = 1 << l;
    std::vector<int> idx(l, 0);
    double total = 0.0;
    while (true) {
        double wt = 1.0;
        for (int ch = 0; ch < l; ++ch) wt *= wts[idx[ch]];
        double cond = 0.0;
        std::vector<double> mix(ny, 0.0);
        for (const auto& [comp, pc] : comps) {
            for (int y = 0; y < ny; ++y) {
                double prod = 1.0;
                for (int ch = 0; ch < l; ++ch) {
                    double b = 0.0;
                    for (int z = 0; z <= comp[ch]; ++z)
                        b += alpha(z, comp[ch], nodes[idx[ch]]) * attack.row(comp[ch])[z];
                    prod *= (y >> ch) & 1 ? b : 1.0 - b;
                }
                cond += pc * xlnx(prod);
                mix[y] += pc * prod;
            }
        }
        for (int y = 0; y < ny; ++y) cond -= xlnx(mix[y]);
        total += wt * cond;
        int ch = l - 1;
        while (ch >= 0 && ++idx[ch] == static_cast<int>(nodes.size())) {
            idx[ch] = 0;
            --ch;
        }
        if (ch < 0) break;
    }
    return total / kLn2;
}

}  // namespace

TEST_CASE("binomial tally law") {
    CHECK(alpha(1, 2, 0.5) == Approx(0.5));
    CHECK(alpha(0, 3, 0.5) == Approx(0.125));
    CHECK(alpha(2, 5, 0.3) == Approx(0.3087).margin(1e-12));
    CHECK(alpha(-1, 3, 0.5) == 0.0);
    CHECK(alpha(4, 3, 0.5) == 0.0);
    CHECK_THROWS_AS(alpha(1, 2, 0.0), DomainError);
    double sum = 0.0;
    for (int z = 0; z <= 9; ++z) sum += alpha(z, 9, 0.37);
    CHECK(sum == Approx(1.0).margin(1e-12));
}

TEST_CASE("single channel mutual information") {
    CHECK(single_channel_mi(2, 0.5, {0, 0.5, 1}) == Approx(0.5).margin(1e-12));
    CHECK(single_channel_mi(1, 0.5, {0, 1}) == Approx(1.0));
    CHECK(single_channel_mi(3, 0.5, {0, 0.5, 0.5, 1}) == Approx(0.25).margin(1e-12));
    CHECK_THROWS_AS(single_channel_mi(2, 0.5, {0.1, 0.5, 1}), InvalidArgs);
}

TEST_CASE("c=1 forces Y=Z, so the MI is the bias entropy") {
    for (double w : {0.1, 0.25, 0.5, 0.8})
        CHECK(single_channel_mi(1, w, {0, 1}) == Approx(binary_entropy(w)).margin(1e-14));
}

TEST_CASE("single channel MI stays within [0,1]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 300; ++rep) {
        const int c = 1 + static_cast<int>(rng() % 8);
        std::vector<double> row(c + 1);
        row[0] = 0.0;
        row[c] = 1.0;
        for (int z = 1; z < c; ++z) row[z] = unif(rng);
        const double v = single_channel_mi(c, 0.05 + 0.9 * unif(rng), row);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("script_i examples") {
    CHECK(script_i(1, BiasDistribution::point_mass(0.5), {0, 1}, 16) == Approx(1.0));
    CHECK(script_i(2, BiasDistribution::point_mass(0.5), {0, 0.5, 1}, 16) ==
          Approx(0.25).margin(1e-12));
}

TEST_CASE("script_i approaches the interleaving limit") {
    const auto t = realize(NamedAttack::interleaving(), 1000);
    const double v = script_i(1000, BiasDistribution::arcsine(), t.row(1000), 256);
    const double limit = 1.0 / (1000.0 * 1000.0 * 2.0 * kLn2);
    CHECK(v == Approx(limit).epsilon(0.02));
}

TEST_CASE("script_i is invariant under the symbol swap") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const int c = 2 + static_cast<int>(rng() % 5);
        std::vector<double> row(c + 1), swapped(c + 1);
        row[0] = 0.0;
        row[c] = 1.0;
        for (int z = 1; z < c; ++z) row[z] = unif(rng);
        for (int z = 0; z <= c; ++z) swapped[z] = 1.0 - row[c - z];
        const auto f = BiasDistribution::arcsine();  // symmetric about 1/2
        CHECK(script_i(c, f, row, 96) == Approx(script_i(c, f, swapped, 96)).margin(1e-10));
    }
}

TEST_CASE("payoff_jtilde") {
    const auto pm = BiasDistribution::point_mass(0.5);
    const auto il3 = realize(NamedAttack::interleaving(), 3);
    CHECK(payoff_jtilde(4, 2, pm, il3, equal_split(4, 2), 16) == Approx(0.125).margin(1e-12));
    // L=1 reduction
    const auto il5 = realize(NamedAttack::interleaving(), 5);
    CHECK(payoff_jtilde(5, 1, BiasDistribution::arcsine(), il5, equal_split(5, 1), 64) ==
          Approx(script_i(5, BiasDistribution::arcsine(), il5.row(5), 64)).margin(1e-14));
}

TEST_CASE("payoff_j examples") {
    const auto pm = BiasDistribution::point_mass(0.5);
    const auto rep = payoff_j(4, 2, pm, realize(NamedAttack::interleaving(), 3),
                              equal_split(4, 2), 16);
    CHECK(rep.value == Approx(0.25).margin(1e-12));
    CHECK(rep.components.at("I(Y;C|W)") == 0.0);

    const auto big = payoff_j(1000, 2, BiasDistribution::arcsine(),
                              realize(NamedAttack::interleaving(), 999), equal_split(1000, 2),
                              256);
    CHECK(big.value == Approx(4.0 / (1e6 * 2.0 * kLn2)).epsilon(0.02));
}

TEST_CASE("payoff_j at L=1 reduces to the single channel payoff") {
    const auto arc = BiasDistribution::arcsine();
    const auto il = realize(NamedAttack::interleaving(), 6);
    const auto rep = payoff_j(6, 1, arc, il, equal_split(6, 1), 64);
    CHECK(rep.value == Approx(script_i(6, arc, il.row(6), 64)).margin(1e-14));
    CHECK(rep.components.at("I(Y;C|W)") == 0.0);
}

TEST_CASE("I(Y;C|W) vanishes for deterministic loads") {
    const auto arc = BiasDistribution::arcsine();
    const auto il = realize(NamedAttack::interleaving(), 4);
    CHECK(mi_y_c_given_w(8, 2, arc, il, equal_split(8, 2), 16) == 0.0);
    CHECK(mi_y_c_given_w(6, 3, arc, il, equal_split(6, 3), 16) == 0.0);
    CHECK(mi_y_c_given_w(5, 1, arc, realize(NamedAttack::interleaving(), 5),
                         equal_split(5, 1), 16) == 0.0);
}

TEST_CASE("I(Y;C|W) against a hand enumeration") {
    // k=4, L=2, load on partition (3,1); all-ones-iff-z=c attack; w = 1/2
    const auto pm = BiasDistribution::point_mass(0.5);
    AttackTable allones(3, {{0, 1}, {0, 0, 1}, {0, 0, 0, 1}});
    const ChannelLoad load(2, 4, {{{3, 1}, 1.0}});

    const double got = mi_y_c_given_w(4, 2, pm, allones, load, 8);

    // channels carry Bern(1/8) at c=3 and Bern(1/2) at c=1
    const double p3 = 0.125, p1 = 0.5;
    double mixent = 0.0, condent = 0.0;
    for (int y0 = 0; y0 < 2; ++y0)
        for (int y1 = 0; y1 < 2; ++y1) {
            const double pa = (y0 ? p3 : 1 - p3) * (y1 ? p1 : 1 - p1);
            const double pb = (y0 ? p1 : 1 - p1) * (y1 ? p3 : 1 - p3);
            condent += 0.5 * xlnx(pa) + 0.5 * xlnx(pb);
            mixent += xlnx(0.5 * pa + 0.5 * pb);
        }
    const double expected = (condent - mixent) / kLn2;
    CHECK(got == Approx(expected).margin(1e-12));
    CHECK(got > 0.0);
    CHECK(got <= 1.0);  // at most H(C-hat) = 1 bit
}

TEST_CASE("I(Y;C|W) against the direct-sum oracle on a grid bias") {
    std::mt19937_64 rng(17);
    const auto g = BiasDistribution::grid({0.25, 0.55, 0.8}, {0.5, 0.3, 0.2});
    for (int rep = 0; rep < 5; ++rep) {
        const auto load = testutil::random_load(rng, 5, 2);
        const auto attack = realize(NamedAttack::majority(), 4);
        const double got = mi_y_c_given_w(5, 2, g, attack, load, 8);
        const double want = mi_yc_oracle(g, attack, symmetrize(load.on_partitions, 2));
        CHECK(got == Approx(want).margin(1e-12));
    }
}

TEST_CASE("tensor path caps") {
    const auto arc = BiasDistribution::arcsine();
    const auto il = realize(NamedAttack::interleaving(), 4);
    CHECK_THROWS_AS(
        mi_y_c_given_w(8, 4, arc, il, ChannelLoad(4, 8, {{{5, 1, 1, 1}, 0.5}, {{2, 2, 2, 2}, 0.5}}), 8),
        ExplicitOverflow);
}

TEST_CASE("additivity identity") {
    const auto arc = BiasDistribution::arcsine();
    const auto il = realize(NamedAttack::interleaving(), 5);
    {
        const auto [lhs, rhs] = additivity_check({2, 3}, arc, il, 24);
        CHECK(lhs == Approx(rhs).margin(1e-10));
    }
    {
        const auto [lhs, rhs] = additivity_check({5}, arc, il, 24);
        CHECK(lhs == Approx(5.0 * script_i(5, arc, il.row(5), 24)).margin(1e-10));
    }
    {
        const auto pm = BiasDistribution::point_mass(0.5);
        const auto [lhs, rhs] = additivity_check({1, 1}, pm, realize(NamedAttack::majority(), 1), 8);
        CHECK(lhs == Approx(2.0).margin(1e-12));
        CHECK(rhs == Approx(2.0).margin(1e-12));
    }
    CHECK_THROWS_AS(additivity_check({7, 7}, arc, realize(NamedAttack::interleaving(), 7), 8),
                    ExplicitOverflow);
}

TEST_CASE("additivity across attacks and biases") {
    const auto grid = BiasDistribution::grid({0.2, 0.5, 0.85}, {0.4, 0.4, 0.2});
    for (const auto& bias : {BiasDistribution::arcsine(), grid}) {
        for (const auto& named : {NamedAttack::interleaving(), NamedAttack::majority(),
                                  NamedAttack::coin_flip()}) {
            const auto t = realize(named, 5);
            for (const Composition& chat :
                 {Composition{1, 2}, Composition{3, 3}, Composition{2, 2, 2},
                  Composition{4, 1}, Composition{1, 1, 4}}) {
                const auto [lhs, rhs] = additivity_check(chat, bias, t, 20);
                CHECK(lhs == Approx(rhs).margin(1e-10));
            }
        }
    }
}

TEST_CASE("brute force R equals J when L=1") {
    const auto arc = BiasDistribution::arcsine();
    for (int k : {2, 3, 4}) {
        const auto t = realize(NamedAttack::interleaving(), k);
        const auto rep = payoff_r_bruteforce(k, 1, arc, t, equal_split(k, 1), 24);
        CHECK(rep.value == Approx(rep.components.at("J")).margin(1e-12));
        CHECK(std::abs(rep.components.at("I(Y;S|X)")) < 1e-12);
    }
}

TEST_CASE("brute force difference terms and residuals") {
    const auto arc = BiasDistribution::arcsine();
    {
        // k=2, L=2: load forced to (1,1)
        const auto t = realize(NamedAttack::interleaving(), 1);
        const auto rep = payoff_r_bruteforce(2, 2, arc, t, equal_split(2, 2), 24);
        CHECK(rep.components.at("I(Y;S|X)") >= -1e-10);
        CHECK(std::abs(rep.components.at("residual")) < 1e-10);
        CHECK(rep.value <= rep.components.at("J") + 1e-10);
    }
    {
        const auto t = realize(NamedAttack::interleaving(), 2);
        const auto rep = payoff_r_bruteforce(3, 2, arc, t, equal_split(3, 2), 32);
        CHECK(rep.value <= rep.components.at("J") + 1e-10);
        CHECK(std::abs(rep.components.at("residual")) < 1e-10);
        CHECK(std::abs(rep.components.at("residual_w_conditioned")) < 1e-10);
        // the two difference-term variants agree, as does the tally grouping
        CHECK(rep.components.at("I(Y;S|X)") ==
              Approx(rep.components.at("I(Y;S|X,W)")).margin(1e-10));
        CHECK(rep.components.at("I(Y;M|X)") ==
              Approx(rep.components.at("I(Y;S|X)")).margin(1e-10));
    }
    CHECK_THROWS_AS(payoff_r_bruteforce(6, 2, arc, realize(NamedAttack::interleaving(), 5),
                                        equal_split(6, 2), 8),
                    ExplicitOverflow);
    CHECK_THROWS_AS(payoff_r_bruteforce(4, 3, arc, realize(NamedAttack::interleaving(), 2),
                                        equal_split(4, 3), 8),
                    ExplicitOverflow);
}
