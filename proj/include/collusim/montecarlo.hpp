#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "collusim/bias.hpp"
#include "collusim/combinatorics.hpp"
#include "collusim/common.hpp"
#include "collusim/strategy.hpp"

namespace collusim {

// Counter-based generator: every draw is a pure function of
// (seed, segment, channel, role, index), so parallel generation order
// cannot change the stream.
class CounterRng {
public:
    enum Role : std::uint64_t {
        kBias = 1,
        kPartition = 2,
        kComposition = 3,
        kIdentity = 4,
        kCode = 5,
        kOutput = 6
    };

    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t segment, std::uint64_t channel, Role role,
                       std::uint64_t index) const {
        std::uint64_t h = mix(seed_ ^ 0x6A09E667F3BCC909ull);
        h = mix(h ^ mix(segment + 0x9E3779B97F4A7C15ull));
        h = mix(h ^ mix(channel + 0xBB67AE8584CAA73Bull));
        h = mix(h ^ mix(static_cast<std::uint64_t>(role) + 0x3C6EF372FE94F82Bull));
        h = mix(h ^ mix(index + 0xA54FF53A5F1D36F1ull));
        return h;
    }

    double uniform(std::uint64_t segment, std::uint64_t channel, Role role,
                   std::uint64_t index) const {
        return static_cast<double>(bits(segment, channel, role, index) >> 11) * 0x1.0p-53;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};

struct SimConfig {
    int m = 0;  // user count; innocent users never enter any payoff
    long long n = 0;
    int k = 0;
    int l = 0;
    int l_tilde = 1;
    BiasDistribution bias = BiasDistribution::arcsine();
    NamedAttack attack = NamedAttack::interleaving();
    ChannelLoad load;
    std::uint64_t seed = 0;

    void validate() const {
        if (k < 1 || k > m) throw InvalidConfig("need 1 <= k <= m");
        if (l < 1 || l > k) throw InvalidConfig("need 1 <= l <= k");
        if (l_tilde != 1) throw InvalidConfig("only one channel per user is supported");
        if (n < 1) throw InvalidConfig("segment count must be positive");
        if (k > 62) throw InvalidConfig("coalition block limited to k <= 62");
        if (load.k != k || load.l != l) throw InvalidConfig("load does not match (k,l)");
    }
};

struct TraceSample {
    std::vector<double> w;                // per channel bias
    std::vector<std::uint64_t> code;      // per channel coalition column bits
    std::vector<int> channel_of;          // per colluder, channel index
    std::vector<int> c;                   // per channel coalition size
    std::vector<int> z;                   // per channel tally of 1s
    std::vector<std::uint8_t> y;          // per channel pirate output
};

namespace detail {

inline double draw_bias(const BiasDistribution& bias, double u) {
    switch (bias.kind()) {
        case BiasKind::Arcsine: {
            const double s = std::sin(kPi * u / 2.0);
            return std::min(1.0 - 1e-15, std::max(1e-15, s * s));
        }
        case BiasKind::Uniform:
            return std::min(1.0 - 1e-15, std::max(1e-15, u));
        case BiasKind::PointMass:
            return bias.atom_nodes()[0];
        case BiasKind::Grid: {
            const auto& wts = bias.atom_weights();
            double acc = 0.0;
            for (std::size_t i = 0; i < wts.size(); ++i) {
                acc += wts[i];
                if (u < acc) return bias.atom_nodes()[i];
            }
            return bias.atom_nodes().back();
        }
    }
    throw InvalidConfig("unknown bias kind");
}

}  // namespace detail

// Simulate the full generative process: i.i.d. biases per (segment,
// channel), coalition code block, identity assignment per the multinomial
// rule, tallies, and pirate outputs. The marking assumption is asserted
// on every sample.
inline std::vector<TraceSample> generate(const SimConfig& config) {
    config.validate();
    const CounterRng rng(config.seed);
    const AttackTable table = realize(config.attack, config.k - config.l + 1);

    // load as cumulative over partitions, deterministic order
    std::vector<Partition> parts;
    std::vector<double> cum;
    double acc = 0.0;
    for (const auto& [p, pr] : config.load.on_partitions) {
        parts.push_back(p);
        acc += pr;
        cum.push_back(acc);
    }

    std::vector<TraceSample> out;
    out.reserve(static_cast<std::size_t>(config.n));
    std::vector<int> perm(config.k), comp(config.l);
    for (long long seg = 0; seg < config.n; ++seg) {
        TraceSample s;
        s.w.resize(config.l);
        s.code.assign(config.l, 0);
        s.channel_of.resize(config.k);
        s.c.resize(config.l);
        s.z.assign(config.l, 0);
        s.y.resize(config.l);

        // partition then a uniformly random arrangement of its parts
        const double up = rng.uniform(seg, 0, CounterRng::kPartition, 0);
        std::size_t pi = 0;
        while (pi + 1 < cum.size() && up >= cum[pi]) ++pi;
        for (int ch = 0; ch < config.l; ++ch) comp[ch] = parts[pi][ch];
        for (int i = config.l - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.uniform(seg, 0, CounterRng::kComposition, i) *
                                           (i + 1));
            std::swap(comp[i], comp[std::min(j, i)]);
        }

        // identity assignment: random permutation, first c^1 to channel 0, ...
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = config.k - 1; i > 0; --i) {
            const int j =
                static_cast<int>(rng.uniform(seg, 0, CounterRng::kIdentity, i) * (i + 1));
            std::swap(perm[i], perm[std::min(j, i)]);
        }
        {
            int pos = 0;
            for (int ch = 0; ch < config.l; ++ch) {
                s.c[ch] = comp[ch];
                for (int t = 0; t < comp[ch]; ++t) s.channel_of[perm[pos++]] = ch;
            }
        }

        for (int ch = 0; ch < config.l; ++ch) {
            s.w[ch] = detail::draw_bias(config.bias, rng.uniform(seg, ch, CounterRng::kBias, 0));
            for (int j = 0; j < config.k; ++j)
                if (rng.uniform(seg, ch, CounterRng::kCode, j) < s.w[ch])
                    s.code[ch] |= 1ull << j;
            for (int j = 0; j < config.k; ++j)
                if (s.channel_of[j] == ch && (s.code[ch] >> j) & 1) ++s.z[ch];
            const double pi_zc = table.row(s.c[ch])[s.z[ch]];
            s.y[ch] = rng.uniform(seg, ch, CounterRng::kOutput, 0) < pi_zc ? 1 : 0;

            // hard assertions: assignment validity and the marking rule
            if (s.z[ch] == 0 && s.y[ch] != 0)
                throw NonFiniteValue("marking assumption violated (z=0)");
            if (s.z[ch] == s.c[ch] && s.y[ch] != 1)
                throw NonFiniteValue("marking assumption violated (z=c)");
        }
        {
            int csum = 0;
            for (int ch = 0; ch < config.l; ++ch) {
                if (s.c[ch] < 1) throw NonFiniteValue("empty channel in assignment");
                csum += s.c[ch];
            }
            if (csum != config.k) throw NonFiniteValue("assignment does not cover the coalition");
        }
        out.push_back(std::move(s));
    }
    return out;
}

enum class MiTarget { YZCgivenW, YCgivenW, YSgivenX };

struct MiEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    int table_cells = 0;
};

namespace detail {

struct JointTable {
    // flattened joint counts over (condition, a, b)
    std::vector<std::uint64_t> cond, a, b;
    std::vector<long long> count;
    long long total = 0;
};

inline double plugin_cmi(const JointTable& t, const std::vector<long long>& counts,
                         bool miller_madow = false) {
    // group by condition
    std::map<std::uint64_t, std::vector<std::size_t>> by_cond;
    for (std::size_t i = 0; i < t.cond.size(); ++i)
        if (counts[i] > 0) by_cond[t.cond[i]].push_back(i);
    long long total = 0;
    for (long long c : counts) total += c;
    double mi = 0.0;
    for (const auto& [cond, idx] : by_cond) {
        long long ng = 0;
        std::map<std::uint64_t, long long> ca, cb;
        for (std::size_t i : idx) {
            ng += counts[i];
            ca[t.a[i]] += counts[i];
            cb[t.b[i]] += counts[i];
        }
        double gmi = 0.0;
        for (std::size_t i : idx) {
            const double pab = static_cast<double>(counts[i]) / ng;
            const double pa = static_cast<double>(ca[t.a[i]]) / ng;
            const double pb = static_cast<double>(cb[t.b[i]]) / ng;
            gmi += pab * std::log2(pab / (pa * pb));
        }
        if (miller_madow) {
            // first-order bias of H(a)+H(b)-H(a,b)
            gmi += (static_cast<double>(ca.size()) - 1 + static_cast<double>(cb.size()) - 1 -
                    (static_cast<double>(idx.size()) - 1)) /
                   (2.0 * ng * kLn2);
        }
        mi += (static_cast<double>(ng) / total) * std::max(0.0, gmi);
    }
    return mi;
}

inline std::uint64_t mix_key(std::uint64_t h, std::uint64_t v) {
    return h * 1099511628211ull ^ (v + 0x9E3779B97F4A7C15ull);
}

}  // namespace detail

// Plug-in conditional MI estimate with a bootstrap standard error
// (200 multinomial resamples of the contingency table).
inline MiEstimate estimate_mi(const std::vector<TraceSample>& samples, MiTarget which,
                              const SimConfig& config, int bootstrap = 200,
                              bool miller_madow = false) {
    if (config.bias.has_density())
        throw ContinuousConditioning("estimator requires a discrete bias distribution");
    if (samples.size() < 10000) throw InvalidArgs("estimator needs at least 1e4 samples");

    // atom index lookup for encoding w
    const auto& atoms = config.bias.atom_nodes();
    auto w_index = [&](double w) {
        const auto it = std::lower_bound(atoms.begin(), atoms.end(), w - 1e-15);
        return static_cast<std::uint64_t>(it - atoms.begin());
    };

    std::map<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>, long long> counts;
    for (const auto& s : samples) {
        std::uint64_t cond = 1469598103934665603ull, a = cond, b = cond;
        for (int ch = 0; ch < config.l; ++ch) a = detail::mix_key(a, s.y[ch]);
        switch (which) {
            case MiTarget::YZCgivenW:
                for (int ch = 0; ch < config.l; ++ch) {
                    cond = detail::mix_key(cond, w_index(s.w[ch]));
                    b = detail::mix_key(b, static_cast<std::uint64_t>(s.z[ch]) * 64 + s.c[ch]);
                }
                break;
            case MiTarget::YCgivenW:
                for (int ch = 0; ch < config.l; ++ch) {
                    cond = detail::mix_key(cond, w_index(s.w[ch]));
                    b = detail::mix_key(b, static_cast<std::uint64_t>(s.c[ch]));
                }
                break;
            case MiTarget::YSgivenX:
                for (int ch = 0; ch < config.l; ++ch)
                    cond = detail::mix_key(cond, s.code[ch]);
                for (int j = 0; j < config.k; ++j)
                    b = detail::mix_key(b, static_cast<std::uint64_t>(s.channel_of[j]));
                break;
        }
        ++counts[{cond, a, b}];
    }

    detail::JointTable t;
    for (const auto& [key, cnt] : counts) {
        t.cond.push_back(std::get<0>(key));
        t.a.push_back(std::get<1>(key));
        t.b.push_back(std::get<2>(key));
        t.count.push_back(cnt);
        t.total += cnt;
    }

    MiEstimate e;
    e.table_cells = static_cast<int>(t.count.size());
    e.estimate = detail::plugin_cmi(t, t.count, miller_madow);

    // multinomial resampling of the table
    std::vector<double> boots(bootstrap);
    const CounterRng rng(config.seed ^ (0xABCDEF1234567890ull + static_cast<int>(which)));
    std::vector<long long> resampled(t.count.size());
    for (int rep = 0; rep < bootstrap; ++rep) {
        long long remaining = t.total;
        double prob_left = 1.0;
        for (std::size_t i = 0; i < t.count.size(); ++i) {
            const double p = std::min(1.0, (static_cast<double>(t.count[i]) / t.total) / prob_left);
            long long draw = 0;
            if (i + 1 == t.count.size()) {
                draw = remaining;
            } else {
                // binomial via normal approximation with exact small-count loop
                const double mean = remaining * p;
                if (remaining <= 0 || p <= 0.0) {
                    draw = 0;
                } else if (remaining < 64) {
                    for (long long tgl = 0; tgl < remaining; ++tgl)
                        if (rng.uniform(rep, i, CounterRng::kOutput, tgl) < p) ++draw;
                } else {
                    const double sd = std::sqrt(remaining * p * (1.0 - p));
                    const double u1 = rng.uniform(rep, i, CounterRng::kOutput, 0);
                    const double u2 = rng.uniform(rep, i, CounterRng::kOutput, 1);
                    const double gauss =
                        std::sqrt(-2.0 * std::log(std::max(1e-300, u1))) *
                        std::cos(2.0 * kPi * u2);
                    draw = std::llround(mean + sd * gauss);
                    draw = std::max(0ll, std::min(remaining, draw));
                }
            }
            resampled[i] = draw;
            remaining -= draw;
            prob_left -= static_cast<double>(t.count[i]) / t.total;
            if (prob_left <= 0.0) prob_left = 1e-300;
        }
        boots[rep] = detail::plugin_cmi(t, resampled, miller_madow);
    }
    double mean = 0.0;
    for (double v : boots) mean += v;
    mean /= bootstrap;
    double var = 0.0;
    for (double v : boots) var += (v - mean) * (v - mean);
    e.std_error = std::sqrt(var / (bootstrap - 1));
    return e;
}

struct MarginalPairReport {
    int channel_a = 0;
    int channel_b = 0;
    double chi2_zc = 0.0;
    double p_zc = 1.0;
    double chi2_y = 0.0;
    double p_y = 1.0;
};

namespace detail {

inline double chi2_tail(double stat, int dof) {
    if (dof <= 0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

// two-sample chi-square over the union of observed cells
inline std::pair<double, double> two_sample_chi2(const std::map<std::uint64_t, long long>& x1,
                                                 const std::map<std::uint64_t, long long>& x2) {
    std::map<std::uint64_t, std::pair<long long, long long>> cells;
    long long n1 = 0, n2 = 0;
    for (const auto& [k, v] : x1) {
        cells[k].first += v;
        n1 += v;
    }
    for (const auto& [k, v] : x2) {
        cells[k].second += v;
        n2 += v;
    }
    double stat = 0.0;
    int used = 0;
    for (const auto& [k, v] : cells) {
        const double pooled = static_cast<double>(v.first + v.second) / (n1 + n2);
        const double e1 = n1 * pooled, e2 = n2 * pooled;
        if (e1 < 1e-12 || e2 < 1e-12) continue;
        stat += (v.first - e1) * (v.first - e1) / e1 + (v.second - e2) * (v.second - e2) / e2;
        ++used;
    }
    return {stat, chi2_tail(stat, used - 1)};
}

}  // namespace detail

// Pairwise two-sample chi-square between channels, over the empirical
// (z,c) joint and over y. Channel symmetry predicts identical marginals.
inline std::vector<MarginalPairReport> verify_identical_marginals(
    const std::vector<TraceSample>& samples) {
    std::vector<MarginalPairReport> out;
    if (samples.empty()) return out;
    const int l = static_cast<int>(samples.front().c.size());
    if (l <= 1) return out;
    std::vector<std::map<std::uint64_t, long long>> zc(l), yy(l);
    for (const auto& s : samples)
        for (int ch = 0; ch < l; ++ch) {
            ++zc[ch][static_cast<std::uint64_t>(s.z[ch]) * 64 + s.c[ch]];
            ++yy[ch][s.y[ch]];
        }
    for (int a = 0; a < l; ++a)
        for (int b = a + 1; b < l; ++b) {
            MarginalPairReport r;
            r.channel_a = a;
            r.channel_b = b;
            std::tie(r.chi2_zc, r.p_zc) = detail::two_sample_chi2(zc[a], zc[b]);
            std::tie(r.chi2_y, r.p_y) = detail::two_sample_chi2(yy[a], yy[b]);
            out.push_back(r);
        }
    return out;
}

}  // namespace collusim
