#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "collusim/bias.hpp"
#include "collusim/combinatorics.hpp"
#include "collusim/common.hpp"

namespace collusim {

// Per-coalition-size collusion rule pi_{z,c} = P(Y=1 | Z=z, C=c).
// Row c has c+1 entries; the marking assumption pins pi_{0,c}=0 and
// pi_{c,c}=1 exactly.
struct AttackTable {
    int c_max = 0;
    std::vector<std::vector<double>> rows;  // rows[c-1] has c+1 entries

    AttackTable() = default;
    AttackTable(int cmax, std::vector<std::vector<double>> r) : c_max(cmax), rows(std::move(r)) {
        validate();
    }

    const std::vector<double>& row(int c) const {
        if (c < 1 || c > c_max) throw InvalidArgs("attack row out of range");
        return rows[static_cast<std::size_t>(c) - 1];
    }

    void validate() const {
        if (c_max < 1 || static_cast<int>(rows.size()) != c_max)
            throw InvalidArgs("attack table must have one row per coalition size");
        for (int c = 1; c <= c_max; ++c) {
            const auto& r = rows[static_cast<std::size_t>(c) - 1];
            if (static_cast<int>(r.size()) != c + 1)
                throw InvalidArgs("attack row for c must have c+1 entries");
            if (r.front() != 0.0 || r.back() != 1.0)
                throw InvalidArgs("marking assumption violated: rows must pin pi_0=0, pi_c=1");
            for (double v : r)
                if (!(v >= 0.0 && v <= 1.0))
                    throw InvalidArgs("attack probabilities must lie in [0,1]");
        }
    }
};

class NamedAttack {
public:
    enum class Kind { Interleaving, Majority, Minority, CoinFlip, GOpt, Custom };

    static NamedAttack interleaving() { return NamedAttack(Kind::Interleaving); }
    static NamedAttack majority() { return NamedAttack(Kind::Majority); }
    static NamedAttack minority() { return NamedAttack(Kind::Minority); }
    static NamedAttack coin_flip() { return NamedAttack(Kind::CoinFlip); }
    static NamedAttack g_opt(BiasDistribution f) {
        NamedAttack a(Kind::GOpt);
        a.bias_.push_back(std::move(f));
        return a;
    }
    static NamedAttack custom(AttackTable table) {
        NamedAttack a(Kind::Custom);
        table.validate();
        a.table_.push_back(std::move(table));
        return a;
    }

    Kind kind() const { return kind_; }
    const BiasDistribution& gopt_bias() const { return bias_.front(); }
    const AttackTable& custom_table() const { return table_.front(); }

    std::string name() const {
        switch (kind_) {
            case Kind::Interleaving: return "interleaving";
            case Kind::Majority: return "majority";
            case Kind::Minority: return "minority";
            case Kind::CoinFlip: return "coinflip";
            case Kind::GOpt: return "gopt";
            case Kind::Custom: return "custom";
        }
        return "?";
    }

private:
    explicit NamedAttack(Kind k) : kind_(k) {}
    Kind kind_;
    std::vector<BiasDistribution> bias_;  // singleton when GOpt
    std::vector<AttackTable> table_;      // singleton when Custom
};

// Realize a named attack as explicit rows for c = 1..c_max. Named rules
// use g_c = g independent of c; Custom tables may vary per c.
inline AttackTable realize(const NamedAttack& a, int c_max) {
    if (c_max < 1) throw InvalidArgs("c_max must be at least 1");
    if (a.kind() == NamedAttack::Kind::Custom) {
        const AttackTable& t = a.custom_table();
        if (t.c_max < c_max) throw InvalidArgs("custom table does not cover requested c_max");
        std::vector<std::vector<double>> rows(t.rows.begin(),
                                              t.rows.begin() + c_max);
        return AttackTable(c_max, std::move(rows));
    }

    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(c_max));

    // GOpt needs the cumulative fisher profile of the bias.
    std::vector<FisherProfile> profile;
    if (a.kind() == NamedAttack::Kind::GOpt) {
        const BiasDistribution& f = a.gopt_bias();
        if (f.kind() == BiasKind::PointMass)
            throw NoDensity("g_opt undefined for a point-mass bias");
        FisherProfile fp = f.kind() == BiasKind::Grid ? FisherProfile::for_grid(f)
                                                      : FisherProfile::for_density(f, 2048);
        if (fp.divergent()) throw DivergentBias("g_opt undefined: fisher integral diverges");
        profile.push_back(std::move(fp));
    }

    for (int c = 1; c <= c_max; ++c) {
        std::vector<double> row(static_cast<std::size_t>(c) + 1);
        row[0] = 0.0;
        row[static_cast<std::size_t>(c)] = 1.0;
        for (int z = 1; z < c; ++z) {
            const double x = static_cast<double>(z) / c;
            double v = 0.0;
            switch (a.kind()) {
                case NamedAttack::Kind::Interleaving: v = x; break;
                case NamedAttack::Kind::Majority:
                    v = 2 * z > c ? 1.0 : (2 * z < c ? 0.0 : 0.5);
                    break;
                case NamedAttack::Kind::Minority:
                    v = 2 * z > c ? 0.0 : (2 * z < c ? 1.0 : 0.5);
                    break;
                case NamedAttack::Kind::CoinFlip: v = 0.5; break;
                case NamedAttack::Kind::GOpt: v = profile.front().g_opt(x); break;
                case NamedAttack::Kind::Custom: break;  // handled above
            }
            row[static_cast<std::size_t>(z)] = v;
        }
        rows.push_back(std::move(row));
    }
    return AttackTable(c_max, std::move(rows));
}

// Permutation-symmetric distribution of coalition sizes over channels,
// stored on partitions of k into l positive parts.
struct ChannelLoad {
    int l = 0;
    int k = 0;
    std::map<Partition, double> on_partitions;

    ChannelLoad() = default;
    ChannelLoad(int l_, int k_, std::map<Partition, double> p)
        : l(l_), k(k_), on_partitions(std::move(p)) {
        validate();
    }

    void validate() {
        if (l < 1 || k < l) throw InvalidArgs("channel load requires k >= l >= 1");
        double total = 0.0;
        for (const auto& [parts, p] : on_partitions) {
            if (static_cast<int>(parts.size()) != l)
                throw InvalidArgs("load partition length must equal l");
            int sum = 0;
            for (std::size_t i = 0; i < parts.size(); ++i) {
                if (parts[i] < 1) throw InvalidArgs("load partition parts must be positive");
                if (i > 0 && parts[i] > parts[i - 1])
                    throw InvalidArgs("load partition parts must be non-increasing");
                sum += parts[i];
            }
            if (sum != k) throw InvalidArgs("load partition parts must sum to k");
            if (p < 0.0) throw NotNormalized("load probabilities must be nonnegative");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw NotNormalized("load probabilities must sum to 1 within 1e-12");
        for (auto& [parts, p] : on_partitions) p /= total;
    }

    int max_part() const {
        int m = 0;
        for (const auto& [parts, p] : on_partitions) m = std::max(m, parts.front());
        return m;
    }
};

// Point mass on the balanced partition: parts differ by at most one.
inline ChannelLoad equal_split(int k, int l) {
    if (l < 1 || k < l) throw InvalidArgs("equal_split requires k >= l >= 1");
    const int base = k / l, rem = k % l;
    Partition parts;
    parts.reserve(static_cast<std::size_t>(l));
    for (int i = 0; i < rem; ++i) parts.push_back(base + 1);
    for (int i = rem; i < l; ++i) parts.push_back(base);
    std::map<Partition, double> p;
    p[parts] = 1.0;
    return ChannelLoad(l, k, std::move(p));
}

// Common per-channel marginal p_C; channel symmetry makes it identical
// across channels, with E[C/k] = 1/L.
inline std::map<int, double> marginal_load(const ChannelLoad& load) {
    std::map<int, double> pc;
    for (const auto& [parts, p] : load.on_partitions) {
        for (int c : parts) pc[c] += p / load.l;
    }
    return pc;
}

}  // namespace collusim
