#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "collusim/bias.hpp"
#include "collusim/combinatorics.hpp"
#include "collusim/common.hpp"
#include "collusim/strategy.hpp"

namespace collusim {

struct PayoffReport {
    enum class Method { Exact, BruteForce };

    double value = 0.0;  // bits, per the payoff's own normalization
    std::map<std::string, double> components;
    int quadrature_order = 0;
    Method method = Method::Exact;
};

// Binomial law of the per-channel tally: P(Z=z | C=c, W=w).
inline double alpha(int z, int c, double w) {
    if (c < 1) throw InvalidArgs("alpha requires c >= 1");
    if (!(w > 0.0 && w < 1.0)) throw DomainError("alpha requires w strictly inside (0,1)");
    if (z < 0 || z > c) return 0.0;
    const double lg = std::lgamma(c + 1.0) - std::lgamma(z + 1.0) - std::lgamma(c - z + 1.0);
    return std::exp(lg + z * std::log(w) + (c - z) * std::log1p(-w));
}

namespace detail {

// Full binomial pmf row alpha_0..alpha_c at bias w.
inline void alpha_row(int c, double w, std::vector<double>& out) {
    out.resize(c + 1);
    const double lw = std::log(w), l1w = std::log1p(-w);
    const double lgc = std::lgamma(c + 1.0);
    for (int z = 0; z <= c; ++z)
        out[z] = std::exp(lgc - std::lgamma(z + 1.0) - std::lgamma(c - z + 1.0) + z * lw +
                          (c - z) * l1w);
}

inline void check_row(int c, const std::vector<double>& row) {
    if (static_cast<int>(row.size()) != c + 1)
        throw InvalidArgs("attack row for c must have c+1 entries");
    if (row.front() != 0.0 || row.back() != 1.0)
        throw InvalidArgs("marking assumption violated in attack row");
}

}  // namespace detail

// I(Y; Z | C=c, W=w) in bits for one channel and one bias value.
inline double single_channel_mi(int c, double w, const std::vector<double>& row) {
    detail::check_row(c, row);
    std::vector<double> a;
    detail::alpha_row(c, w, a);
    double pbar = 0.0, cond = 0.0;
    for (int z = 0; z <= c; ++z) {
        pbar += a[z] * row[z];
        cond += a[z] * binary_entropy(row[z]);
    }
    const double v = binary_entropy(pbar) - cond;
    return v > 0.0 ? v : 0.0;
}

// Single-channel payoff I_c = E_{f_W}[ I(Y;Z|C=c,W) ] / c.
inline double script_i(int c, const BiasDistribution& f, const std::vector<double>& row,
                       int order) {
    detail::check_row(c, row);
    const QuadratureRule rule = make_quadrature(f, order);
    return expect(rule, [&](double w) { return single_channel_mi(c, w, row); }) / c;
}

// J~ = sum_c p_C(c) (c/k) I_c.
inline double payoff_jtilde(int k, int l, const BiasDistribution& f, const AttackTable& attack,
                            const ChannelLoad& load, int order) {
    if (load.k != k || load.l != l) throw InvalidArgs("load does not match (k,l)");
    if (attack.c_max < load.max_part())
        throw InvalidArgs("attack table does not cover the load's largest part");
    double jt = 0.0;
    for (const auto& [c, pc] : marginal_load(load))
        jt += pc * (static_cast<double>(c) / k) * script_i(c, f, attack.row(c), order);
    return jt;
}

inline constexpr int kCompositionSupportCap = 10000;
inline constexpr int kTensorChannelCap = 3;

namespace detail {

struct CompositionDist {
    std::vector<Composition> comps;
    std::vector<double> probs;
};

inline CompositionDist expand_load(const ChannelLoad& load) {
    const auto m = symmetrize(load.on_partitions, load.l);
    if (static_cast<int>(m.size()) > kCompositionSupportCap)
        throw ExplicitOverflow("composition support exceeds the exact-path cap");
    CompositionDist d;
    for (const auto& [comp, p] : m) {
        d.comps.push_back(comp);
        d.probs.push_back(p);
    }
    return d;
}

// Full tensor grid over L copies of a rule; cb(index array, weight).
// Deterministic row-major order.
template <typename Cb>
void for_tensor(const QuadratureRule& rule, int l, Cb&& cb) {
    const int n = static_cast<int>(rule.nodes.size());
    std::vector<int> idx(l, 0);
    while (true) {
        double wt = 1.0;
        for (int a = 0; a < l; ++a) wt *= rule.weights[idx[a]];
        cb(idx, wt);
        int a = l - 1;
        while (a >= 0 && ++idx[a] == n) {
            idx[a] = 0;
            --a;
        }
        if (a < 0) break;
    }
}

}  // namespace detail

// Exact I(Y-hat; C-hat | W-hat) in bits. Zero when the expanded load has a
// single composition (deterministic C-hat).
inline double mi_y_c_given_w(int k, int l, const BiasDistribution& f, const AttackTable& attack,
                             const ChannelLoad& load, int order) {
    if (load.k != k || load.l != l) throw InvalidArgs("load does not match (k,l)");
    const auto dist = detail::expand_load(load);
    if (dist.comps.size() <= 1) return 0.0;
    if (l > kTensorChannelCap)
        throw ExplicitOverflow("tensor quadrature over w-hat is limited to L <= 3");
    if (attack.c_max < load.max_part())
        throw InvalidArgs("attack table does not cover the load's largest part");

    const QuadratureRule rule = make_quadrature(f, order);
    const int n = static_cast<int>(rule.nodes.size());

    // b1[c][i] = P(Y=1 | C=c, W=node_i)
    std::map<int, std::vector<double>> b1;
    std::vector<double> arow;
    for (const auto& comp : dist.comps) {
        for (int c : comp) {
            if (b1.count(c)) continue;
            auto& v = b1[c];
            v.resize(n);
            for (int i = 0; i < n; ++i) {
                detail::alpha_row(c, rule.nodes[i], arow);
                double s = 0.0;
                for (int z = 0; z <= c; ++z) s += arow[z] * attack.row(c)[z];
                v[i] = s;
            }
        }
    }

    const int ny = 1 << l;
    std::vector<double> mix(ny);
    std::vector<double> contributions;
    detail::for_tensor(rule, l, [&](const std::vector<int>& idx, double wt) {
        std::fill(mix.begin(), mix.end(), 0.0);
        double cond = 0.0;  // sum_c p(c) sum_y P ln P
        for (std::size_t a = 0; a < dist.comps.size(); ++a) {
            const double pc = dist.probs[a];
            for (int y = 0; y < ny; ++y) {
                double prod = 1.0;
                for (int ch = 0; ch < l; ++ch) {
                    const double b = b1.at(dist.comps[a][ch])[idx[ch]];
                    prod *= (y >> ch) & 1 ? b : 1.0 - b;
                }
                cond += pc * xlnx(prod);
                mix[y] += pc * prod;
            }
        }
        double mixent = 0.0;
        for (int y = 0; y < ny; ++y) mixent += xlnx(mix[y]);
        contributions.push_back(wt * (cond - mixent));
    });
    const double nats = pairwise_sum(contributions);
    return std::max(0.0, nats / kLn2);
}

// Multi-channel payoff J = L*J~ + I(Y;C|W)/k, reported with both terms.
inline PayoffReport payoff_j(int k, int l, const BiasDistribution& f, const AttackTable& attack,
                             const ChannelLoad& load, int order) {
    const double jt = payoff_jtilde(k, l, f, attack, load, order);
    const double ic = mi_y_c_given_w(k, l, f, attack, load, order);
    PayoffReport r;
    r.value = l * jt + ic / k;
    r.components["I(Y;Z|C,W)"] = static_cast<double>(k) * l * jt;
    r.components["I(Y;C|W)"] = ic;
    r.quadrature_order = order;
    r.method = PayoffReport::Method::Exact;
    const double recon = (r.components["I(Y;Z|C,W)"] + r.components["I(Y;C|W)"]) / k;
    if (std::abs(recon - r.value) > 1e-10)
        throw NonFiniteValue("payoff decomposition inconsistent");
    return r;
}

// Checks I(Y-hat; Z-hat | C-hat=c-hat, W-hat) = sum_l c^l I_{c^l}: lhs by
// full joint enumeration, rhs by the per-channel sum.
inline std::pair<double, double> additivity_check(const Composition& chat,
                                                  const BiasDistribution& f,
                                                  const AttackTable& attack, int order) {
    const int l = static_cast<int>(chat.size());
    if (l < 1) throw InvalidArgs("composition must be nonempty");
    int total = 0;
    for (int c : chat) {
        if (c < 1) throw InvalidArgs("composition parts must be positive");
        total += c;
    }
    if (total > 12 || l > kTensorChannelCap)
        throw ExplicitOverflow("joint enumeration limited to sum(c) <= 12 and L <= 3");
    if (attack.c_max < *std::max_element(chat.begin(), chat.end()))
        throw InvalidArgs("attack table does not cover the composition");

    const QuadratureRule rule = make_quadrature(f, order);
    const int n = static_cast<int>(rule.nodes.size());
    const int ny = 1 << l;

    // per-channel alpha tables at every node
    std::vector<std::vector<std::vector<double>>> at(l);
    for (int ch = 0; ch < l; ++ch) {
        at[ch].resize(n);
        for (int i = 0; i < n; ++i) detail::alpha_row(chat[ch], rule.nodes[i], at[ch][i]);
    }

    std::vector<double> contributions;
    std::vector<double> mix(ny);
    std::vector<int> z(l, 0);
    detail::for_tensor(rule, l, [&](const std::vector<int>& idx, double wt) {
        std::fill(mix.begin(), mix.end(), 0.0);
        double cond = 0.0;
        std::fill(z.begin(), z.end(), 0);
        while (true) {
            double pz = 1.0;
            for (int ch = 0; ch < l; ++ch) pz *= at[ch][idx[ch]][z[ch]];
            for (int y = 0; y < ny; ++y) {
                double py = 1.0;
                for (int ch = 0; ch < l; ++ch) {
                    const double pi = attack.row(chat[ch])[z[ch]];
                    py *= (y >> ch) & 1 ? pi : 1.0 - pi;
                }
                cond += pz * xlnx(py);
                mix[y] += pz * py;
            }
            int ch = l - 1;
            while (ch >= 0 && ++z[ch] > chat[ch]) {
                z[ch] = 0;
                --ch;
            }
            if (ch < 0) break;
        }
        double mixent = 0.0;
        for (int y = 0; y < ny; ++y) mixent += xlnx(mix[y]);
        contributions.push_back(wt * (cond - mixent));
    });
    const double lhs = pairwise_sum(contributions) / kLn2;

    double rhs = 0.0;
    for (int c : chat) rhs += c * script_i(c, f, attack.row(c), order);
    return {lhs, rhs};
}

// Brute-force alternative payoff R = I(Y-hat; X-hat_K | W-hat)/k with the
// identity-level assignment enumerated explicitly. Also reports J on the
// same grid, both difference-term variants, and the decomposition
// residuals R - (J - I/k).
inline PayoffReport payoff_r_bruteforce(int k, int l, const BiasDistribution& f,
                                        const AttackTable& attack, const ChannelLoad& load,
                                        int order) {
    if (k > 5 || l > 2) throw ExplicitOverflow("brute force limited to k <= 5, L <= 2");
    if (load.k != k || load.l != l) throw InvalidArgs("load does not match (k,l)");
    if (attack.c_max < load.max_part())
        throw InvalidArgs("attack table does not cover the load's largest part");

    const auto dist = detail::expand_load(load);
    const QuadratureRule rule = make_quadrature(f, order);
    const int n = static_cast<int>(rule.nodes.size());
    const int ny = 1 << l;
    const int nx = 1 << (k * l);
    const std::uint32_t full = (1u << k) - 1u;

    // Assignments at identity level: per channel a membership mask, with
    // p(s) = p(c-hat) / multinomial(k, c-hat).
    struct Assign {
        std::vector<std::uint32_t> masks;
        double prob;
    };
    std::vector<Assign> assigns;
    for (std::size_t a = 0; a < dist.comps.size(); ++a) {
        const Composition& comp = dist.comps[a];
        const double ps = dist.probs[a] / static_cast<double>(multinomial(k, comp));
        if (l == 1) {
            assigns.push_back({{full}, ps});
        } else {
            for (std::uint32_t m = 1; m < full; ++m)
                if (std::popcount(m) == comp[0]) assigns.push_back({{m, full & ~m}, ps});
        }
    }

    // q[y][x] = P(y-hat | x-hat): independent of w-hat because S is drawn
    // independently of (X, W). dterm/dmterm hold the per-x KL masses of
    // the identity-level and tally-level difference terms (in nats).
    std::vector<std::vector<double>> q(ny, std::vector<double>(nx, 0.0));
    std::vector<double> dterm(nx, 0.0), dmterm(nx, 0.0);
    std::vector<std::vector<int>> nl(l, std::vector<int>(nx));

    for (int x = 0; x < nx; ++x) {
        for (int ch = 0; ch < l; ++ch)
            nl[ch][x] = std::popcount(static_cast<std::uint32_t>(x >> (ch * k)) & full);

        std::vector<std::vector<double>> pys(assigns.size());
        std::map<std::vector<int>, double> group_prob;        // tally -> prob
        std::map<std::vector<int>, std::vector<double>> group_py;
        for (std::size_t s = 0; s < assigns.size(); ++s) {
            std::vector<int> key;
            std::vector<double> py(ny, 1.0);
            for (int ch = 0; ch < l; ++ch) {
                const std::uint32_t mask = assigns[s].masks[ch];
                const int c = std::popcount(mask);
                const int zz =
                    std::popcount((static_cast<std::uint32_t>(x >> (ch * k)) & full) & mask);
                const double pi = attack.row(c)[zz];
                key.push_back(zz);
                key.push_back(c);
                for (int y = 0; y < ny; ++y) py[y] *= (y >> ch) & 1 ? pi : 1.0 - pi;
            }
            pys[s] = py;
            group_prob[key] += assigns[s].prob;
            group_py[key] = py;  // identical within a group
            for (int y = 0; y < ny; ++y) q[y][x] += assigns[s].prob * py[y];
        }
        double d = 0.0;
        for (std::size_t s = 0; s < assigns.size(); ++s)
            for (int y = 0; y < ny; ++y)
                if (pys[s][y] > 0.0)
                    d += assigns[s].prob * pys[s][y] * std::log(pys[s][y] / q[y][x]);
        dterm[x] = d;
        double dm = 0.0;
        for (const auto& [key, pg] : group_prob) {
            const auto& py = group_py[key];
            for (int y = 0; y < ny; ++y)
                if (py[y] > 0.0) dm += pg * py[y] * std::log(py[y] / q[y][x]);
        }
        dmterm[x] = dm;
    }

    // pw[i][m] = node_i^m (1-node_i)^(k-m)
    std::vector<std::vector<double>> pw(n, std::vector<double>(k + 1));
    for (int i = 0; i < n; ++i)
        for (int m = 0; m <= k; ++m)
            pw[i][m] = std::pow(rule.nodes[i], m) * std::pow(1.0 - rule.nodes[i], k - m);

    // alpha tables per distinct part value, for the J computation
    std::map<int, std::vector<std::vector<double>>> atab;
    for (const auto& comp : dist.comps)
        for (int c : comp)
            if (!atab.count(c)) {
                auto& t = atab[c];
                t.resize(n);
                for (int i = 0; i < n; ++i) detail::alpha_row(c, rule.nodes[i], t[i]);
            }

    std::vector<double> r_terms, j_terms, dw_terms, px_acc(nx, 0.0), pxw(nx), mixy(ny);
    detail::for_tensor(rule, l, [&](const std::vector<int>& idx, double wt) {
        for (int x = 0; x < nx; ++x) {
            double p = 1.0;
            for (int ch = 0; ch < l; ++ch) p *= pw[idx[ch]][nl[ch][x]];
            pxw[x] = p;
            px_acc[x] += wt * p;
        }
        // I(Y;X | w-hat) and the w-conditioned difference term
        std::fill(mixy.begin(), mixy.end(), 0.0);
        double cond = 0.0, dcond = 0.0;
        for (int x = 0; x < nx; ++x) {
            for (int y = 0; y < ny; ++y) {
                cond += pxw[x] * xlnx(q[y][x]);
                mixy[y] += pxw[x] * q[y][x];
            }
            dcond += pxw[x] * dterm[x];
        }
        double mixent = 0.0;
        for (int y = 0; y < ny; ++y) mixent += xlnx(mixy[y]);
        r_terms.push_back(wt * (cond - mixent));
        dw_terms.push_back(wt * dcond);

        // I(Y; Z,C | w-hat) on the same grid
        std::fill(mixy.begin(), mixy.end(), 0.0);
        double jcond = 0.0;
        for (std::size_t a = 0; a < dist.comps.size(); ++a) {
            const Composition& comp = dist.comps[a];
            std::vector<int> z(l, 0);
            while (true) {
                double pz = dist.probs[a];
                for (int ch = 0; ch < l; ++ch) pz *= atab[comp[ch]][idx[ch]][z[ch]];
                for (int y = 0; y < ny; ++y) {
                    double py = 1.0;
                    for (int ch = 0; ch < l; ++ch) {
                        const double pi = attack.row(comp[ch])[z[ch]];
                        py *= (y >> ch) & 1 ? pi : 1.0 - pi;
                    }
                    jcond += pz * xlnx(py);
                    mixy[y] += pz * py;
                }
                int ch = l - 1;
                while (ch >= 0 && ++z[ch] > comp[ch]) {
                    z[ch] = 0;
                    --ch;
                }
                if (ch < 0) break;
            }
        }
        double jmixent = 0.0;
        for (int y = 0; y < ny; ++y) jmixent += xlnx(mixy[y]);
        j_terms.push_back(wt * (jcond - jmixent));
    });

    const double i_yx_w = pairwise_sum(r_terms) / kLn2;
    const double i_yzc_w = pairwise_sum(j_terms) / kLn2;
    const double i_ys_xw = pairwise_sum(dw_terms) / kLn2;
    double i_ys_x = 0.0, i_ym_x = 0.0;
    for (int x = 0; x < nx; ++x) {
        i_ys_x += px_acc[x] * dterm[x];
        i_ym_x += px_acc[x] * dmterm[x];
    }
    i_ys_x /= kLn2;
    i_ym_x /= kLn2;

    PayoffReport r;
    r.method = PayoffReport::Method::BruteForce;
    r.quadrature_order = order;
    r.value = i_yx_w / k;
    r.components["I(Y;X|W)"] = i_yx_w;
    r.components["I(Y;Z,C|W)"] = i_yzc_w;
    r.components["I(Y;S|X)"] = i_ys_x;
    r.components["I(Y;S|X,W)"] = i_ys_xw;
    r.components["I(Y;M|X)"] = i_ym_x;
    r.components["J"] = i_yzc_w / k;
    r.components["R"] = r.value;
    r.components["residual"] = r.value - (i_yzc_w - i_ys_x) / k;
    r.components["residual_w_conditioned"] = r.value - (i_yzc_w - i_ys_xw) / k;
    return r;
}

}  // namespace collusim
