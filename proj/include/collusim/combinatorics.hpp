#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "collusim/common.hpp"

namespace collusim {

using BigInt = boost::multiprecision::cpp_int;

// Ordered split of k into positive parts (one per channel).
using Composition = std::vector<int>;
// Unordered split, stored non-increasing.
using Partition = std::vector<int>;

// Stirling numbers of the second kind by the standard recurrence
// S(n,l) = l*S(n-1,l) + S(n-1,l-1).
inline BigInt stirling2(int n, int l) {
    if (n < 0 || l < 0) throw InvalidArgs("stirling2 arguments must be nonnegative");
    if (l > n) return 0;
    if (n == 0) return l == 0 ? 1 : 0;
    if (l == 0) return 0;
    std::vector<BigInt> row(static_cast<std::size_t>(l) + 1, 0);
    row[0] = 1;  // S(0,0)
    for (int i = 1; i <= n; ++i) {
        const int jmax = std::min(i, l);
        for (int j = jmax; j >= 1; --j) row[j] = j * row[j] + row[j - 1];
        row[0] = 0;
    }
    return row[l];
}

inline BigInt factorial(int n) {
    BigInt f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

inline BigInt binomial_big(int n, int r) {
    if (r < 0 || r > n) return 0;
    r = std::min(r, n - r);
    BigInt num = 1;
    for (int i = 0; i < r; ++i) {
        num *= (n - i);
        num /= (i + 1);  // exact: product of i+1 consecutive integers divides
    }
    return num;
}

// Number of ordered assignments of k distinguishable colluders onto l
// channels with no channel empty: L! * S(K,L).
inline BigInt assignment_count(int k, int l) {
    if (l < 1 || k < l) throw InvalidArgs("assignment_count requires k >= l >= 1");
    return factorial(l) * stirling2(k, l);
}

inline constexpr long long kEnumerationCap = 1000000;

// All compositions of k into exactly l positive parts, lexicographic.
inline std::vector<Composition> enumerate_compositions(int k, int l) {
    if (l < 1 || k < l) throw InvalidArgs("enumerate_compositions requires k >= l >= 1");
    if (binomial_big(k - 1, l - 1) > kEnumerationCap)
        throw ExplicitOverflow("composition support exceeds the enumeration cap");
    std::vector<Composition> out;
    Composition cur(static_cast<std::size_t>(l));
    // recursive descent in lexicographic order
    auto rec = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == l - 1) {
            cur[static_cast<std::size_t>(pos)] = remaining;
            out.push_back(cur);
            return;
        }
        const int slots_left = l - pos - 1;
        for (int v = 1; v <= remaining - slots_left; ++v) {
            cur[static_cast<std::size_t>(pos)] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    rec(rec, 0, k);
    return out;
}

// All partitions of k into exactly l parts, non-increasing parts,
// descending lexicographic order: (5,1,1), (4,2,1), ...
inline std::vector<Partition> enumerate_partitions(int k, int l) {
    if (l < 1 || k < l) throw InvalidArgs("enumerate_partitions requires k >= l >= 1");
    std::vector<Partition> out;
    Partition cur(static_cast<std::size_t>(l));
    auto rec = [&](auto&& self, int pos, int remaining, int maxpart) -> void {
        const int slots_left = l - pos;
        if (slots_left == 1) {
            if (remaining >= 1 && remaining <= maxpart) {
                cur[static_cast<std::size_t>(pos)] = remaining;
                out.push_back(cur);
            }
            return;
        }
        // each later part is at least 1 and at most this one
        const int hi = std::min(maxpart, remaining - (slots_left - 1));
        for (int v = hi; v >= (remaining + slots_left - 1) / slots_left; --v) {
            cur[static_cast<std::size_t>(pos)] = v;
            self(self, pos + 1, remaining - v, v);
        }
    };
    rec(rec, 0, k, k);
    return out;
}

inline BigInt multinomial(int k, const Composition& parts) {
    long long sum = 0;
    for (int p : parts) {
        if (p < 1) throw InvalidArgs("multinomial parts must be positive");
        sum += p;
    }
    if (sum != k) throw InvalidArgs("multinomial parts must sum to k");
    BigInt res = factorial(k);
    for (int p : parts) res /= factorial(p);
    return res;
}

// Number of distinct permutations of a partition's parts: l!/prod(mult!).
inline BigInt distinct_permutations(const Partition& parts) {
    BigInt denom = 1;
    int run = 1;
    for (std::size_t i = 1; i <= parts.size(); ++i) {
        if (i < parts.size() && parts[i] == parts[i - 1]) {
            ++run;
        } else {
            denom *= factorial(run);
            run = 1;
        }
    }
    return factorial(static_cast<int>(parts.size())) / denom;
}

// Expand a permutation-symmetric distribution over partitions into the
// distribution over compositions, splitting each partition's mass equally
// among its distinct arrangements.
inline std::map<Composition, double> symmetrize(const std::map<Partition, double>& p_partition,
                                                int l) {
    double total = 0.0;
    for (const auto& [parts, p] : p_partition) {
        if (static_cast<int>(parts.size()) != l)
            throw InvalidArgs("partition length must equal the channel count");
        if (!std::is_sorted(parts.rbegin(), parts.rend()))
            throw InvalidArgs("partition parts must be non-increasing");
        if (p < 0.0) throw NotNormalized("partition probabilities must be nonnegative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw NotNormalized("partition probabilities must sum to 1");
    std::map<Composition, double> out;
    for (const auto& [parts, p] : p_partition) {
        if (p == 0.0) continue;
        Composition perm = parts;
        std::sort(perm.begin(), perm.end());
        const double share = (p / total) / static_cast<double>(distinct_permutations(parts));
        do {
            out[perm] += share;
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return out;
}

}  // namespace collusim
