#pragma once

#include <random>
#include <vector>

#include "collusim/bias.hpp"
#include "collusim/combinatorics.hpp"
#include "collusim/strategy.hpp"

namespace testutil {

inline collusim::BiasDistribution random_grid(std::mt19937_64& rng, int min_nodes = 3,
                                              int max_nodes = 20) {
    std::uniform_int_distribution<int> size(min_nodes, max_nodes);
    std::uniform_real_distribution<double> pos(0.02, 0.98);
    std::exponential_distribution<double> expo(1.0);
    const int n = size(rng);
    std::vector<double> nodes;
    while (static_cast<int>(nodes.size()) < n) {
        const double w = pos(rng);
        bool clash = false;
        for (double v : nodes)
            if (std::abs(v - w) < 1e-4) clash = true;
        if (!clash) nodes.push_back(w);
    }
    std::vector<double> weights(nodes.size());
    double s = 0.0;
    for (double& v : weights) {
        v = expo(rng) + 1e-3;
        s += v;
    }
    for (double& v : weights) v /= s;
    // make the sum exactly 1 up to the constructor's tolerance
    return collusim::BiasDistribution::grid(nodes, weights);
}

inline collusim::ChannelLoad random_load(std::mt19937_64& rng, int k, int l) {
    const auto parts = collusim::enumerate_partitions(k, l);
    std::exponential_distribution<double> expo(1.0);
    std::map<collusim::Partition, double> m;
    double s = 0.0;
    std::vector<double> w(parts.size());
    for (double& v : w) {
        v = expo(rng);
        s += v;
    }
    for (std::size_t i = 0; i < parts.size(); ++i) m[parts[i]] = w[i] / s;
    return collusim::ChannelLoad(l, k, std::move(m));
}

// direct-sum oracle for the grid fisher integral: the histogram over the
// theta-Voronoi cells (w = sin^2(theta/2)) gives sum_i Theta_i^2 / p_i
inline double grid_fisher_direct(const collusim::BiasDistribution& g) {
    const auto& n = g.atom_nodes();
    const auto& p = g.atom_weights();
    std::vector<double> theta(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) theta[i] = 2.0 * std::asin(std::sqrt(n[i]));
    double total = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const double lo = i == 0 ? 0.0 : 0.5 * (theta[i - 1] + theta[i]);
        const double hi = i + 1 == n.size() ? collusim::kPi : 0.5 * (theta[i] + theta[i + 1]);
        total += (hi - lo) * (hi - lo) / p[i];
    }
    return total;
}

}  // namespace testutil
