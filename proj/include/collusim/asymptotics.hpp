#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "collusim/bias.hpp"
#include "collusim/common.hpp"
#include "collusim/payoff.hpp"
#include "collusim/strategy.hpp"

namespace collusim {

struct AsymptoticReport {
    double jbar = 0.0;
    double bound = 0.0;             // pi^2 / fisher integral
    double asymptotic_value = 0.0;  // L^2 / (k^2 2 ln 2)
    double ratio_to_limit = 0.0;
};

// G[g(w)] = arccos(1 - 2 g(w)).
inline double g_arc(double g_at_w) {
    if (!(g_at_w >= 0.0 && g_at_w <= 1.0)) throw DomainError("g_arc requires a value in [0,1]");
    return std::acos(1.0 - 2.0 * g_at_w);
}

// Continuum attack function g with, where available, a closed form for
// the local payoff density J[g(w)] = w(1-w) G'(w)^2. Majority/minority
// have no admissible continuum form (not twice differentiable) and are
// supported only in the exact finite-c paths.
class ContinuumAttack {
public:
    static ContinuumAttack interleaving() { return ContinuumAttack(Kind::Interleaving); }
    static ContinuumAttack coin_flip() { return ContinuumAttack(Kind::CoinFlip); }
    static ContinuumAttack g_opt(const BiasDistribution& f, int order) {
        ContinuumAttack a(Kind::GOpt);
        if (f.kind() == BiasKind::PointMass)
            throw NoDensity("g_opt undefined for a point-mass bias");
        FisherProfile fp = f.kind() == BiasKind::Grid ? FisherProfile::for_grid(f)
                                                      : FisherProfile::for_density(f, order);
        if (fp.divergent()) throw DivergentBias("g_opt undefined: fisher integral diverges");
        a.profile_.push_back(std::move(fp));
        a.bias_.push_back(f);
        return a;
    }

    static ContinuumAttack from_named(const NamedAttack& a, const int order = 2048) {
        switch (a.kind()) {
            case NamedAttack::Kind::Interleaving: return interleaving();
            case NamedAttack::Kind::CoinFlip: return coin_flip();
            case NamedAttack::Kind::GOpt: return g_opt(a.gopt_bias(), order);
            default:
                throw InvalidArgs("attack has no admissible continuum form");
        }
    }

    double operator()(double w) const {
        switch (kind_) {
            case Kind::Interleaving: return w;
            case Kind::CoinFlip: return w <= 0.0 ? 0.0 : (w >= 1.0 ? 1.0 : 0.5);
            case Kind::GOpt: return profile_.front().g_opt(w);
        }
        return w;
    }

    // w(1-w) G'(w)^2, analytic.
    double local_j(double w) const {
        if (!(w > 0.0 && w < 1.0)) throw DomainError("local_j requires w strictly inside (0,1)");
        switch (kind_) {
            case Kind::Interleaving:
                // G'(w) = 1/sqrt(w(1-w))
                return 1.0;
            case Kind::CoinFlip:
                return 0.0;
            case Kind::GOpt: {
                // G(w) = pi F(w)/F(1), so J = w(1-w) pi^2 phi(w)^2 / F(1)^2
                const FisherProfile& fp = profile_.front();
                const double phi = fp.phi(bias_.front(), w);
                const double ratio = kPi * phi / fp.total();
                return w * (1.0 - w) * ratio * ratio;
            }
        }
        return 0.0;
    }

private:
    enum class Kind { Interleaving, CoinFlip, GOpt };
    explicit ContinuumAttack(Kind k) : kind_(k) {}
    Kind kind_;
    std::vector<FisherProfile> profile_;  // singleton when GOpt
    std::vector<BiasDistribution> bias_;
};

inline double local_j(const ContinuumAttack& g, double w) { return g.local_j(w); }

// Finite-difference fallback for custom g. G' blows up where g touches
// the pins, so both the w-window and the g-window are guarded.
inline double local_j(const std::function<double(double)>& g, double w, double fd_step) {
    if (!(fd_step > 0.0)) throw InvalidArgs("fd_step must be positive");
    if (!(w >= 10.0 * fd_step && w <= 1.0 - 10.0 * fd_step))
        throw DomainError("local_j (finite difference) requires w in [10h, 1-10h]");
    const double gm = g(w - fd_step), gp = g(w + fd_step), g0 = g(w);
    for (double v : {gm, g0, gp})
        if (std::min(v, 1.0 - v) < fd_step)
            throw NonFiniteValue("g too close to the marking pins for finite differences");
    const double dG = (g_arc(gp) - g_arc(gm)) / (2.0 * fd_step);
    if (!std::isfinite(dG)) throw NonFiniteValue("finite-difference derivative not finite");
    return w * (1.0 - w) * dG * dG;
}

// J-bar[g] = E_{f_W}[ J[g(W)] ].
inline double jbar(const ContinuumAttack& g, const BiasDistribution& f, int order) {
    const QuadratureRule rule = make_quadrature(f, order);
    return expect(rule, [&](double w) { return g.local_j(w); });
}

inline double jbar(const std::function<double(double)>& g, const BiasDistribution& f, int order,
                   double fd_step = 1e-5) {
    const QuadratureRule rule = make_quadrature(f, order);
    return expect(rule, [&](double w) { return local_j(g, w, fd_step); });
}

// g_opt(w) = (1 - cos(pi F(w)/F(1)))/2 with F the cumulative fisher
// integrand; monotone, g_opt(0)=0, g_opt(1)=1.
inline double g_opt_eval(const BiasDistribution& f, double w, int order) {
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("g_opt_eval requires w in [0,1]");
    if (f.kind() == BiasKind::PointMass) throw NoDensity("g_opt undefined for a point mass");
    FisherProfile fp = f.kind() == BiasKind::Grid ? FisherProfile::for_grid(f)
                                                  : FisherProfile::for_density(f, order);
    if (fp.divergent()) throw DivergentBias("g_opt undefined: fisher integral diverges");
    return fp.g_opt(w);
}

// Theorem-level limit L^2 / (k^2 2 ln 2).
inline double asymptotic_value(int k, int l) {
    if (l < 1 || k < l) throw InvalidArgs("asymptotic_value requires k >= l >= 1");
    return static_cast<double>(l) * l / (static_cast<double>(k) * k * 2.0 * kLn2);
}

// payoff / asymptotic limit; tends to 1 along the optimal strategies.
inline double convergence_ratio(int k, int l, const BiasDistribution& f,
                                const AttackTable& attack, const ChannelLoad& load, int order) {
    return payoff_j(k, l, f, attack, load, order).value / asymptotic_value(k, l);
}

inline AsymptoticReport asymptotic_report(int k, int l, const BiasDistribution& f,
                                          const NamedAttack& attack, const ChannelLoad& load,
                                          int order) {
    AsymptoticReport r;
    r.jbar = jbar(ContinuumAttack::from_named(attack), f, order);
    const double fisher = fisher_integral(f, order);
    r.bound = std::isfinite(fisher) ? kPi * kPi / fisher : 0.0;
    r.asymptotic_value = asymptotic_value(k, l);
    r.ratio_to_limit =
        convergence_ratio(k, l, f, realize(attack, k - l + 1), load, order);
    return r;
}

}  // namespace collusim
