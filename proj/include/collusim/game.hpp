#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "collusim/bias.hpp"
#include "collusim/combinatorics.hpp"
#include "collusim/common.hpp"
#include "collusim/payoff.hpp"
#include "collusim/strategy.hpp"

namespace collusim {

struct GameOptions {
    int max_sweeps = 200;
    double tol = 1e-8;
    int restarts = 8;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency
};

struct InnerResult {
    AttackTable attack;
    ChannelLoad load;
    double value = 0.0;
    double inner_gap = 0.0;
    bool converged = true;
};

struct GameResult {
    double value = 0.0;
    BiasDistribution f_w = BiasDistribution::arcsine();  // replaced by the grid optimum
    AttackTable attack;
    ChannelLoad load;
    int iterations = 0;
    double inner_gap = 0.0;
    bool converged = true;
    std::vector<std::pair<int, double>> outer_profile;
};

namespace detail {

inline void project_simplex(std::vector<double>& v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    int rho = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        css += u[i];
        const double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) {
            rho = static_cast<int>(i + 1);
            theta = t;
        }
    }
    (void)rho;
    for (double& x : v) x = std::max(0.0, x - theta);
}

// Payoff J(pi, q) over a fixed bias grid, with analytic gradients in the
// free attack entries and the partition weights, plus the partial
// gradient in the grid weights used by the outer (Danskin) ascent.
class GameModel {
public:
    GameModel(int k, int l, std::vector<double> nodes, std::vector<double> fw)
        : k_(k), l_(l), cmax_(k - l + 1), nodes_(std::move(nodes)), fw_(std::move(fw)) {
        if (l_ > kTensorChannelCap)
            throw ExplicitOverflow("game solver limited to L <= 3");
        parts_ = enumerate_partitions(k_, l_);
        for (std::size_t p = 0; p < parts_.size(); ++p) {
            Composition perm = parts_[p];
            std::sort(perm.begin(), perm.end());
            const double share = 1.0 / static_cast<double>(distinct_permutations(parts_[p]));
            do {
                comps_.push_back(perm);
                comp_part_.push_back(static_cast<int>(p));
                comp_share_.push_back(share);
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
        const int n = static_cast<int>(nodes_.size());
        alpha_.resize(cmax_);
        std::vector<double> arow;
        for (int c = 1; c <= cmax_; ++c) {
            alpha_[c - 1].assign(static_cast<std::size_t>(c + 1) * n, 0.0);
            for (int i = 0; i < n; ++i) {
                payoff_alpha_row(c, nodes_[i], arow);
                for (int z = 0; z <= c; ++z) alpha_[c - 1][z * n + i] = arow[z];
            }
        }
    }

    int k() const { return k_; }
    int l() const { return l_; }
    int cmax() const { return cmax_; }
    int n_nodes() const { return static_cast<int>(nodes_.size()); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& fw() const { return fw_; }
    void set_fw(std::vector<double> fw) { fw_ = std::move(fw); }
    const std::vector<Partition>& partitions() const { return parts_; }

    struct Point {
        std::vector<std::vector<double>> pi;  // pi[c-1], size c+1, pinned ends
        std::vector<double> q;                // over partitions
    };

    Point interleaving_start() const {
        Point x;
        x.pi.resize(cmax_);
        for (int c = 1; c <= cmax_; ++c) {
            x.pi[c - 1].resize(c + 1);
            for (int z = 0; z <= c; ++z) x.pi[c - 1][z] = static_cast<double>(z) / c;
        }
        x.q.assign(parts_.size(), 0.0);
        const Partition balanced = equal_split(k_, l_).on_partitions.begin()->first;
        for (std::size_t p = 0; p < parts_.size(); ++p)
            if (parts_[p] == balanced) x.q[p] = 1.0;
        return x;
    }

    Point random_start(std::mt19937_64& rng) const {
        Point x;
        std::uniform_real_distribution<double> unif(0.05, 0.95);
        std::exponential_distribution<double> expo(1.0);
        x.pi.resize(cmax_);
        for (int c = 1; c <= cmax_; ++c) {
            x.pi[c - 1].resize(c + 1);
            x.pi[c - 1][0] = 0.0;
            x.pi[c - 1][c] = 1.0;
            for (int z = 1; z < c; ++z) x.pi[c - 1][z] = unif(rng);
        }
        x.q.resize(parts_.size());
        double s = 0.0;
        for (double& v : x.q) {
            v = expo(rng);
            s += v;
        }
        for (double& v : x.q) v /= s;
        return x;
    }

    struct Eval {
        double value = 0.0;
        std::vector<std::vector<double>> dpi;
        std::vector<double> dq;
    };

    double value(const Point& x) const { return evaluate(x, false).value; }

    Eval evaluate(const Point& x, bool want_grad) const {
        const int n = n_nodes();
        Eval ev;
        if (want_grad) {
            ev.dpi.resize(cmax_);
            for (int c = 1; c <= cmax_; ++c) ev.dpi[c - 1].assign(c + 1, 0.0);
            ev.dq.assign(parts_.size(), 0.0);
        }

        // p_C marginal from partition weights
        std::vector<double> pc(cmax_ + 1, 0.0);
        for (std::size_t p = 0; p < parts_.size(); ++p)
            for (int c : parts_[p]) pc[c] += x.q[p] / l_;

        // per-c: P1[i] = P(Y=1|c,node_i); raw single-channel MI in bits
        std::vector<std::vector<double>> p1(cmax_);
        std::vector<double> ic_raw(cmax_ + 1, 0.0);
        for (int c = 1; c <= cmax_; ++c) {
            p1[c - 1].assign(n, 0.0);
            const auto& A = alpha_[c - 1];
            const auto& row = x.pi[c - 1];
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                double pbar = 0.0, cond = 0.0;
                for (int z = 0; z <= c; ++z) {
                    pbar += A[z * n + i] * row[z];
                    cond += A[z * n + i] * binary_entropy(row[z]);
                }
                p1[c - 1][i] = pbar;
                acc += fw_[i] * (binary_entropy(pbar) - cond);
            }
            ic_raw[c] = acc;
        }

        double j1 = 0.0;  // L * Jtilde
        for (int c = 1; c <= cmax_; ++c) j1 += pc[c] * ic_raw[c];
        j1 *= static_cast<double>(l_) / k_;

        if (want_grad) {
            for (int c = 1; c <= cmax_; ++c) {
                if (pc[c] == 0.0) continue;
                const auto& A = alpha_[c - 1];
                const auto& row = x.pi[c - 1];
                for (int z = 1; z < c; ++z) {
                    const double hpz = entropy_slope(row[z]);
                    double g = 0.0;
                    for (int i = 0; i < n; ++i)
                        g += fw_[i] * A[z * n + i] * (entropy_slope(p1[c - 1][i]) - hpz);
                    ev.dpi[c - 1][z] += (static_cast<double>(l_) / k_) * pc[c] * g;
                }
            }
            for (std::size_t p = 0; p < parts_.size(); ++p) {
                double g = 0.0;
                for (int c : parts_[p]) g += ic_raw[c];
                ev.dq[p] += g / k_;
            }
        }

        // C-term I(Y;C|W)/k, nonzero only for mixtures over compositions
        double i2_nats = 0.0;
        if (comps_.size() > 1 && l_ >= 1) {
            std::vector<double> dB;  // dI2/dB[c][i], nats
            if (want_grad) dB.assign(static_cast<std::size_t>(cmax_) * n, 0.0);
            const int ny = 1 << l_;
            std::vector<double> mix(ny), pa(comps_.size());
            for (std::size_t a = 0; a < comps_.size(); ++a)
                pa[a] = x.q[comp_part_[a]] * comp_share_[a];

            std::vector<int> idx(l_, 0);
            std::vector<double> factors(l_);
            while (true) {
                double wt = 1.0;
                for (int ch = 0; ch < l_; ++ch) wt *= fw_[idx[ch]];
                if (wt > 0.0 || want_grad) {
                    std::fill(mix.begin(), mix.end(), 0.0);
                    double cond = 0.0;
                    for (std::size_t a = 0; a < comps_.size(); ++a) {
                        if (pa[a] == 0.0 && !want_grad) continue;
                        for (int y = 0; y < ny; ++y) {
                            double prod = 1.0;
                            for (int ch = 0; ch < l_; ++ch) {
                                const double b = p1[comps_[a][ch] - 1][idx[ch]];
                                prod *= (y >> ch) & 1 ? b : 1.0 - b;
                            }
                            cond += pa[a] * xlnx(prod);
                            mix[y] += pa[a] * prod;
                        }
                    }
                    double mixent = 0.0;
                    for (int y = 0; y < ny; ++y) mixent += xlnx(mix[y]);
                    i2_nats += wt * (cond - mixent);

                    if (want_grad) {
                        for (std::size_t a = 0; a < comps_.size(); ++a) {
                            double dq_nats = 0.0;
                            for (int y = 0; y < ny; ++y) {
                                double prod = 1.0;
                                for (int ch = 0; ch < l_; ++ch) {
                                    const double b = p1[comps_[a][ch] - 1][idx[ch]];
                                    factors[ch] = (y >> ch) & 1 ? b : 1.0 - b;
                                    prod *= factors[ch];
                                }
                                const double lr =
                                    prod > 0.0 && mix[y] > 0.0 ? std::log(prod / mix[y]) : 0.0;
                                dq_nats += prod * lr;
                                if (pa[a] > 0.0 && prod > 0.0) {
                                    for (int ch = 0; ch < l_; ++ch) {
                                        const double rest = prod / factors[ch];
                                        const double sign = (y >> ch) & 1 ? 1.0 : -1.0;
                                        dB[(comps_[a][ch] - 1) * n + idx[ch]] +=
                                            wt * pa[a] * sign * rest * lr;
                                    }
                                }
                            }
                            ev.dq[comp_part_[a]] += wt * comp_share_[a] * dq_nats / kLn2 / k_;
                        }
                    }
                }
                int ch = l_ - 1;
                while (ch >= 0 && ++idx[ch] == n) {
                    idx[ch] = 0;
                    --ch;
                }
                if (ch < 0) break;
            }

            if (want_grad) {
                for (int c = 1; c <= cmax_; ++c) {
                    const auto& A = alpha_[c - 1];
                    for (int z = 1; z < c; ++z) {
                        double g = 0.0;
                        for (int i = 0; i < n; ++i) g += dB[(c - 1) * n + i] * A[z * n + i];
                        ev.dpi[c - 1][z] += g / kLn2 / k_;
                    }
                }
            }
        }

        ev.value = j1 + std::max(0.0, i2_nats) / kLn2 / k_;
        return ev;
    }

    // Partial gradient of J in the grid weights at fixed (pi, q); by
    // Danskin this is an ascent direction for the inner-min value.
    std::vector<double> fw_gradient(const Point& x) const {
        const int n = n_nodes();
        std::vector<double> grad(n, 0.0);

        std::vector<double> pc(cmax_ + 1, 0.0);
        for (std::size_t p = 0; p < parts_.size(); ++p)
            for (int c : parts_[p]) pc[c] += x.q[p] / l_;

        std::vector<std::vector<double>> p1(cmax_);
        for (int c = 1; c <= cmax_; ++c) {
            p1[c - 1].assign(n, 0.0);
            const auto& A = alpha_[c - 1];
            for (int i = 0; i < n; ++i) {
                double pbar = 0.0, cond = 0.0;
                for (int z = 0; z <= c; ++z) {
                    pbar += A[z * n + i] * x.pi[c - 1][z];
                    cond += A[z * n + i] * binary_entropy(x.pi[c - 1][z]);
                }
                p1[c - 1][i] = pbar;
                if (pc[c] > 0.0)
                    grad[i] += (static_cast<double>(l_) / k_) * pc[c] *
                               (binary_entropy(pbar) - cond);
            }
        }

        if (comps_.size() > 1) {
            const int ny = 1 << l_;
            std::vector<double> mix(ny), pa(comps_.size());
            for (std::size_t a = 0; a < comps_.size(); ++a)
                pa[a] = x.q[comp_part_[a]] * comp_share_[a];
            std::vector<int> idx(l_, 0);
            while (true) {
                std::fill(mix.begin(), mix.end(), 0.0);
                double cond = 0.0;
                for (std::size_t a = 0; a < comps_.size(); ++a) {
                    if (pa[a] == 0.0) continue;
                    for (int y = 0; y < ny; ++y) {
                        double prod = 1.0;
                        for (int ch = 0; ch < l_; ++ch) {
                            const double b = p1[comps_[a][ch] - 1][idx[ch]];
                            prod *= (y >> ch) & 1 ? b : 1.0 - b;
                        }
                        cond += pa[a] * xlnx(prod);
                        mix[y] += pa[a] * prod;
                    }
                }
                double mixent = 0.0;
                for (int y = 0; y < ny; ++y) mixent += xlnx(mix[y]);
                const double tnode = (cond - mixent) / kLn2 / k_;
                for (int ch = 0; ch < l_; ++ch) {
                    double rest = 1.0;
                    for (int ch2 = 0; ch2 < l_; ++ch2)
                        if (ch2 != ch) rest *= fw_[idx[ch2]];
                    grad[idx[ch]] += rest * tnode;
                }
                int ch = l_ - 1;
                while (ch >= 0 && ++idx[ch] == n) {
                    idx[ch] = 0;
                    --ch;
                }
                if (ch < 0) break;
            }
        }
        return grad;
    }

private:
    static void payoff_alpha_row(int c, double w, std::vector<double>& out) {
        collusim::detail::alpha_row(c, w, out);
    }

    // d/dp of binary entropy in bits, clamped away from the pins.
    static double entropy_slope(double p) {
        const double eps = 1e-12;
        p = std::min(1.0 - eps, std::max(eps, p));
        return std::log2((1.0 - p) / p);
    }

    int k_, l_, cmax_;
    std::vector<double> nodes_, fw_;
    std::vector<Partition> parts_;
    std::vector<Composition> comps_;
    std::vector<int> comp_part_;
    std::vector<double> comp_share_;
    std::vector<std::vector<double>> alpha_;  // alpha_[c-1][z*n+i]
};

struct InnerState {
    GameModel::Point x;
    double value = 0.0;
    double pgrad = 0.0;
    bool converged = false;
};

inline constexpr double kPinEps = 1e-9;

inline InnerState descend(const GameModel& model, GameModel::Point x, int max_sweeps,
                          double tol) {
    // clamp interior entries into the open box
    for (auto& row : x.pi)
        for (std::size_t z = 1; z + 1 < row.size(); ++z)
            row[z] = std::min(1.0 - kPinEps, std::max(kPinEps, row[z]));
    detail::project_simplex(x.q);

    double value = model.value(x);
    double eta_pi = 0.25, eta_q = 0.25;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const double before = value;
        GameModel::Eval ev = model.evaluate(x, true);
        value = ev.value;

        // attack-rows block
        for (int ls = 0; ls < 40; ++ls) {
            GameModel::Point trial = x;
            for (int c = 1; c <= model.cmax(); ++c)
                for (int z = 1; z < c; ++z)
                    trial.pi[c - 1][z] =
                        std::min(1.0 - kPinEps,
                                 std::max(kPinEps, x.pi[c - 1][z] - eta_pi * ev.dpi[c - 1][z]));
            const double tv = model.value(trial);
            if (tv < value - 1e-15) {
                x = std::move(trial);
                value = tv;
                eta_pi = std::min(4.0, eta_pi * 1.3);
                break;
            }
            eta_pi *= 0.5;
            if (eta_pi < 1e-14) break;
        }

        // partition-weights block
        if (x.q.size() > 1) {
            GameModel::Eval evq = model.evaluate(x, true);
            value = evq.value;
            for (int ls = 0; ls < 40; ++ls) {
                GameModel::Point trial = x;
                for (std::size_t p = 0; p < trial.q.size(); ++p)
                    trial.q[p] = x.q[p] - eta_q * evq.dq[p];
                detail::project_simplex(trial.q);
                const double tv = model.value(trial);
                if (tv < value - 1e-15) {
                    x = std::move(trial);
                    value = tv;
                    eta_q = std::min(4.0, eta_q * 1.3);
                    break;
                }
                eta_q *= 0.5;
                if (eta_q < 1e-14) break;
            }
        }

        if (std::abs(before - value) <= tol * std::max(1.0, std::abs(value))) {
            converged = true;
            break;
        }
    }

    // projected-gradient norm as the first-order certificate
    GameModel::Eval ev = model.evaluate(x, true);
    double pg = 0.0;
    for (int c = 1; c <= model.cmax(); ++c)
        for (int z = 1; z < c; ++z) {
            const double moved =
                std::min(1.0 - kPinEps, std::max(kPinEps, x.pi[c - 1][z] - ev.dpi[c - 1][z]));
            pg += (x.pi[c - 1][z] - moved) * (x.pi[c - 1][z] - moved);
        }
    {
        std::vector<double> qq = x.q;
        for (std::size_t p = 0; p < qq.size(); ++p) qq[p] -= ev.dq[p];
        detail::project_simplex(qq);
        for (std::size_t p = 0; p < qq.size(); ++p)
            pg += (x.q[p] - qq[p]) * (x.q[p] - qq[p]);
    }

    InnerState st;
    st.x = std::move(x);
    st.value = ev.value;
    st.pgrad = std::sqrt(pg);
    st.converged = converged;
    return st;
}

// Canonical representative for rows the load never uses: the standalone
// minimizer of the single-channel payoff I_c.
inline void minimize_row(const GameModel& model, GameModel::Point& x, int c) {
    const int n = model.n_nodes();
    if (c < 2) return;
    GameModel::Point probe = x;
    // isolate: descend on I_c alone via a toy objective
    double eta = 0.25;
    auto row_value = [&](const std::vector<double>& row) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double pbar = 0.0, cond = 0.0;
            for (int z = 0; z <= c; ++z) {
                const double a = alpha(z, c, model.nodes()[i]);
                pbar += a * row[z];
                cond += a * binary_entropy(row[z]);
            }
            acc += model.fw()[i] * (binary_entropy(pbar) - cond);
        }
        return acc;
    };
    std::vector<double>& row = probe.pi[c - 1];
    double value = row_value(row);
    for (int it = 0; it < 200; ++it) {
        // analytic gradient of I_c in the free entries
        std::vector<double> grad(c + 1, 0.0);
        std::vector<double> p1(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int z = 0; z <= c; ++z) p1[i] += alpha(z, c, model.nodes()[i]) * row[z];
        for (int z = 1; z < c; ++z) {
            const double pz = std::min(1.0 - kPinEps, std::max(kPinEps, row[z]));
            const double hpz = std::log2((1.0 - pz) / pz);
            for (int i = 0; i < n; ++i) {
                const double p = std::min(1.0 - kPinEps, std::max(kPinEps, p1[i]));
                grad[z] += model.fw()[i] * alpha(z, c, model.nodes()[i]) *
                           (std::log2((1.0 - p) / p) - hpz);
            }
        }
        bool improved = false;
        for (int ls = 0; ls < 40; ++ls) {
            std::vector<double> trial = row;
            for (int z = 1; z < c; ++z)
                trial[z] = std::min(1.0 - kPinEps, std::max(kPinEps, row[z] - eta * grad[z]));
            const double tv = row_value(trial);
            if (tv < value - 1e-15) {
                row = std::move(trial);
                value = tv;
                eta = std::min(4.0, eta * 1.3);
                improved = true;
                break;
            }
            eta *= 0.5;
            if (eta < 1e-14) break;
        }
        if (!improved) break;
    }
    x.pi[c - 1] = probe.pi[c - 1];
}

}  // namespace detail

// Minimize J over (attack rows, channel load) for a fixed Grid bias.
// Multi-start projected-gradient block-coordinate descent; the reported
// gap is the larger of the first-order certificate and the spread of the
// restart minima.
inline InnerResult inner_min(int k, int l, const BiasDistribution& f, int order,
                             const GameOptions& opts = {}) {
    if (k > 12) throw InvalidArgs("inner_min limited to k <= 12");
    if (l < 1 || k < l) throw InvalidArgs("inner_min requires k >= l >= 1");
    if (f.kind() != BiasKind::Grid && f.kind() != BiasKind::PointMass)
        throw InvalidArgs("inner_min requires a Grid (or point-mass) bias distribution");
    (void)order;  // grid atoms are the quadrature rule

    detail::GameModel model(k, l, f.atom_nodes(), f.atom_weights());

    const int restarts = std::max(1, opts.restarts);
    std::vector<detail::InnerState> states(restarts);
    auto run = [&](int r) {
        std::mt19937_64 rng(opts.seed * 0x9E3779B97F4A7C15ull + r);
        auto x0 = r == 0 ? model.interleaving_start() : model.random_start(rng);
        states[r] = detail::descend(model, std::move(x0), opts.max_sweeps, opts.tol);
    };
    int threads = opts.threads > 0 ? opts.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, restarts));
    if (threads == 1) {
        for (int r = 0; r < restarts; ++r) run(r);
    } else {
        std::vector<std::future<void>> fut;
        std::atomic<int> next{0};
        for (int t = 0; t < threads; ++t)
            fut.push_back(std::async(std::launch::async, [&] {
                for (int r = next.fetch_add(1); r < restarts; r = next.fetch_add(1)) run(r);
            }));
        for (auto& fh : fut) fh.get();
    }

    int best = 0;
    double lo = states[0].value, hi = states[0].value;
    for (int r = 1; r < restarts; ++r) {
        lo = std::min(lo, states[r].value);
        hi = std::max(hi, states[r].value);
        if (states[r].value < states[best].value - 1e-12) best = r;
    }
    detail::InnerState& st = states[best];

    // snap near-degenerate loads so reported loads are exact
    double qsum = 0.0;
    for (double& v : st.x.q) {
        if (v < 1e-10) v = 0.0;
        qsum += v;
    }
    for (double& v : st.x.q) v /= qsum;

    // rows with zero marginal mass do not enter J; report the canonical
    // standalone minimizer for them
    std::vector<double> pc(model.cmax() + 1, 0.0);
    for (std::size_t p = 0; p < model.partitions().size(); ++p)
        for (int c : model.partitions()[p]) pc[c] += st.x.q[p];
    for (int c = 1; c <= model.cmax(); ++c)
        if (pc[c] == 0.0) detail::minimize_row(model, st.x, c);

    // tidy attack entries that sit within the clamp width of the box
    for (auto& row : st.x.pi)
        for (std::size_t z = 1; z + 1 < row.size(); ++z) {
            if (row[z] < 2 * detail::kPinEps) row[z] = 0.0;
            if (row[z] > 1.0 - 2 * detail::kPinEps) row[z] = 1.0;
        }

    InnerResult res;
    res.attack = AttackTable(model.cmax(), st.x.pi);
    std::map<Partition, double> lp;
    for (std::size_t p = 0; p < model.partitions().size(); ++p)
        if (st.x.q[p] > 0.0) lp[model.partitions()[p]] = st.x.q[p];
    res.load = ChannelLoad(l, k, std::move(lp));
    res.value = st.value;
    res.inner_gap = std::max(st.pgrad, hi - lo);
    res.converged = st.converged && res.inner_gap <= std::max(opts.tol * 100.0, 1e-6);
    return res;
}

// Single payoff evaluation used by both loops.
inline double evaluate_profile(int k, int l, const BiasDistribution& f, const AttackTable& attack,
                               const ChannelLoad& load, int order) {
    return payoff_j(k, l, f, attack, load, order).value;
}

// Maximize the inner-min value over Grid weights on arcsine nodes.
// Projected (Danskin) gradient ascent with multi-start; restart 0 begins
// at the arcsine-discretized weights.
inline GameResult outer_max(int k, int l, int grid_size, int order, int restarts,
                            const GameOptions& base_opts = {}) {
    if (grid_size < 2 || grid_size > 128) throw InvalidArgs("grid_size must be in [2,128]");
    if (k > 12) throw InvalidArgs("outer_max limited to k <= 12");
    if (l < 1 || k < l) throw InvalidArgs("outer_max requires k >= l >= 1");

    const QuadratureRule arc = make_quadrature(BiasDistribution::arcsine(), grid_size);
    const std::vector<double>& nodes = arc.nodes;

    GameOptions opts = base_opts;
    if (restarts < 1) restarts = 1;

    detail::GameModel model(k, l, nodes, arc.weights);

    struct OuterState {
        std::vector<double> fw;
        double value = -1.0;
        detail::InnerState inner;
    };

    // quick inner solve reusing a warm start plus the interleaving start
    auto solve_at = [&](const std::vector<double>& fw, const detail::InnerState* warm,
                        int nrand, std::uint64_t seed) {
        model.set_fw(fw);
        detail::InnerState best;
        bool have = false;
        auto consider = [&](detail::InnerState cand) {
            if (!have || cand.value < best.value) {
                best = std::move(cand);
                have = true;
            }
        };
        consider(detail::descend(model, model.interleaving_start(), opts.max_sweeps, opts.tol));
        if (warm) consider(detail::descend(model, warm->x, opts.max_sweeps, opts.tol));
        std::mt19937_64 rng(seed);
        for (int r = 0; r < nrand; ++r)
            consider(detail::descend(model, model.random_start(rng), opts.max_sweeps, opts.tol));
        return best;
    };

    GameResult out;
    int total_iters = 0;
    std::vector<double> best_fw;
    double best_value = -1.0;
    std::vector<std::pair<int, double>> best_profile;

    std::mt19937_64 outer_rng(opts.seed ^ 0xD1B54A32D192ED03ull);
    for (int rs = 0; rs < restarts; ++rs) {
        OuterState cur;
        cur.fw.assign(grid_size, 0.0);
        if (rs == 0) {
            cur.fw = arc.weights;  // arcsine-discretized start
        } else {
            std::exponential_distribution<double> expo(1.0);
            double s = 0.0;
            for (double& v : cur.fw) {
                v = expo(outer_rng);
                s += v;
            }
            for (double& v : cur.fw) v /= s;
        }
        cur.inner = solve_at(cur.fw, nullptr, 2, opts.seed + rs);
        cur.value = cur.inner.value;

        std::vector<std::pair<int, double>> profile;
        profile.emplace_back(0, cur.value);

        double eta = 0.5;
        for (int it = 1; it <= 60; ++it) {
            ++total_iters;
            model.set_fw(cur.fw);
            std::vector<double> grad = model.fw_gradient(cur.inner.x);
            bool accepted = false;
            for (int ls = 0; ls < 25; ++ls) {
                std::vector<double> fw2 = cur.fw;
                for (int i = 0; i < grid_size; ++i) fw2[i] += eta * grad[i];
                detail::project_simplex(fw2);
                detail::InnerState cand = solve_at(fw2, &cur.inner, 0, opts.seed + rs);
                if (cand.value > cur.value + 1e-12) {
                    cur.fw = std::move(fw2);
                    cur.inner = std::move(cand);
                    cur.value = cur.inner.value;
                    eta = std::min(8.0, eta * 1.5);
                    accepted = true;
                    break;
                }
                eta *= 0.5;
                if (eta < 1e-11) break;
            }
            if (!accepted) break;
            profile.emplace_back(it, cur.value);
        }

        if (cur.value > best_value) {
            best_value = cur.value;
            best_fw = cur.fw;
            best_profile = std::move(profile);
        }
    }

    // honest final solve with the full restart budget
    BiasDistribution fbest = BiasDistribution::grid(nodes, best_fw);
    GameOptions fin = opts;
    InnerResult final_inner = inner_min(k, l, fbest, order, fin);

    out.value = final_inner.value;
    out.f_w = fbest;
    out.attack = final_inner.attack;
    out.load = final_inner.load;
    out.iterations = total_iters;
    out.inner_gap = final_inner.inner_gap;
    out.converged = final_inner.converged;
    out.outer_profile = std::move(best_profile);
    return out;
}

}  // namespace collusim
