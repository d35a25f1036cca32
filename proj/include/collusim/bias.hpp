#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "collusim/common.hpp"

namespace collusim {

enum class BiasKind { Arcsine, Uniform, PointMass, Grid };

// The tracer's bias distribution f_W on (0,1). Arcsine and Uniform are
// densities; PointMass and Grid are atomic. Grid doubles as the solver's
// finite-dimensional strategy space: its weights live on the simplex and
// its nodes stay strictly inside (0,1).
class BiasDistribution {
public:
    static BiasDistribution arcsine() { return BiasDistribution(BiasKind::Arcsine); }
    static BiasDistribution uniform() { return BiasDistribution(BiasKind::Uniform); }

    static BiasDistribution point_mass(double w0) {
        if (!(w0 > 0.0 && w0 < 1.0))
            throw DomainError("point mass location must lie strictly inside (0,1)");
        BiasDistribution d(BiasKind::PointMass);
        d.nodes_ = {w0};
        d.weights_ = {1.0};
        return d;
    }

    static BiasDistribution grid(std::vector<double> nodes, std::vector<double> weights) {
        if (nodes.empty() || nodes.size() != weights.size())
            throw InvalidArgs("grid nodes and weights must be nonempty and equal-length");
        std::vector<std::size_t> idx(nodes.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return nodes[a] < nodes[b]; });
        std::vector<double> n(nodes.size()), w(nodes.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            n[i] = nodes[idx[i]];
            w[i] = weights[idx[i]];
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < n.size(); ++i) {
            if (!(n[i] > 0.0 && n[i] < 1.0))
                throw DomainError("grid nodes must lie strictly inside (0,1)");
            if (i > 0 && !(n[i] > n[i - 1])) throw InvalidArgs("grid nodes must be distinct");
            if (w[i] < 0.0) throw InvalidArgs("grid weights must be nonnegative");
            sum += w[i];
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw NotNormalized("grid weights must sum to 1 within 1e-12");
        for (double& x : w) x /= sum;
        BiasDistribution d(BiasKind::Grid);
        d.nodes_ = std::move(n);
        d.weights_ = std::move(w);
        return d;
    }

    BiasKind kind() const { return kind_; }
    bool is_discrete() const { return kind_ == BiasKind::PointMass || kind_ == BiasKind::Grid; }
    bool has_density() const { return kind_ == BiasKind::Arcsine || kind_ == BiasKind::Uniform; }

    // Atoms of a discrete distribution (PointMass or Grid).
    const std::vector<double>& atom_nodes() const { return nodes_; }
    const std::vector<double>& atom_weights() const { return weights_; }

    std::string name() const {
        switch (kind_) {
            case BiasKind::Arcsine: return "arcsine";
            case BiasKind::Uniform: return "uniform";
            case BiasKind::PointMass: return "point";
            case BiasKind::Grid: return "grid";
        }
        return "?";
    }

private:
    explicit BiasDistribution(BiasKind k) : kind_(k) {}
    BiasKind kind_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

inline double density(const BiasDistribution& d, double w) {
    if (!(w > 0.0 && w < 1.0)) throw DomainError("density requires w strictly inside (0,1)");
    switch (d.kind()) {
        case BiasKind::Arcsine: return 1.0 / (kPi * std::sqrt(w * (1.0 - w)));
        case BiasKind::Uniform: return 1.0;
        default: throw NoDensity("discrete bias distributions have no density");
    }
}

// Nodes strictly inside (0,1), weights absorbing the density, so that
// sum_i weights[i]*h(nodes[i]) approximates E_{f_W}[h(W)].
struct QuadratureRule {
    int order = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline constexpr int kMaxQuadratureOrder = 4096;

namespace detail {

// Gauss-Legendre nodes/weights on (0,1) by Newton iteration on P_n.
inline QuadratureRule gauss_legendre01(int n) {
    QuadratureRule r;
    r.order = n;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        r.nodes[i] = 0.5 * (1.0 - x);
        r.weights[i] = 0.5 * w;
        r.nodes[n - 1 - i] = 0.5 * (1.0 + x);
        r.weights[n - 1 - i] = 0.5 * w;
    }
    return r;
}

// Gauss-Chebyshev rule for the arcsine measure, via w = sin^2(theta/2).
// The substitution flattens the endpoint singularity completely: the rule
// is the n-point Gauss rule for the weight 1/(pi*sqrt(w(1-w))) and is
// exact for polynomials up to degree 2n-1.
inline QuadratureRule arcsine_chebyshev(int n) {
    QuadratureRule r;
    r.order = n;
    r.nodes.resize(n);
    r.weights.assign(n, 1.0 / n);
    for (int i = 1; i <= n; ++i) {
        const double theta = (2.0 * i - 1.0) * kPi / (2.0 * n);
        const double c = std::cos(theta / 2.0);
        r.nodes[n - i] = c * c;  // cos is decreasing, so fill back-to-front
    }
    return r;
}

}  // namespace detail

inline QuadratureRule make_quadrature(const BiasDistribution& d, int order,
                                      int order_cap = kMaxQuadratureOrder) {
    if (order < 2) throw InvalidArgs("quadrature order must be at least 2");
    if (order > order_cap) throw UnsupportedOrder("quadrature order exceeds cap");
    switch (d.kind()) {
        case BiasKind::Arcsine: return detail::arcsine_chebyshev(order);
        case BiasKind::Uniform: return detail::gauss_legendre01(order);
        case BiasKind::PointMass:
        case BiasKind::Grid: {
            QuadratureRule r;
            r.order = static_cast<int>(d.atom_nodes().size());
            r.nodes = d.atom_nodes();
            r.weights = d.atom_weights();
            return r;
        }
    }
    throw InvalidArgs("unknown bias kind");
}

template <typename Fn>
double expect(const QuadratureRule& rule, Fn&& h) {
    std::vector<double> terms(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double v = h(rule.nodes[i]);
        if (!std::isfinite(v)) throw NonFiniteValue("integrand not finite at quadrature node");
        terms[i] = rule.weights[i] * v;
    }
    return pairwise_sum(terms);
}

// Machinery around the integral  F(w) = int_0^w dv / (f_W(v) v(1-v)).
// Its total F(1) controls the asymptotic payoff bound and its normalized
// cumulative drives g_opt. Everything lives in the theta parametrization
// w = sin^2(theta/2), where the integral collapses to int_0^pi d.theta /
// f_theta(theta): the endpoint singularity disappears and the bound
// F(1) >= pi^2 is plain Cauchy-Schwarz. Atomic Grid distributions are
// read as the histogram over the theta-Voronoi cells of their nodes, so
// their total is the direct sum  sum_i Theta_i^2 / p_i.
class FisherProfile {
public:
    static FisherProfile for_density(const BiasDistribution& d, int order) {
        FisherProfile fp;
        fp.grid_ = false;
        const int m = std::max(order, 64);
        fp.theta_.resize(m + 1);
        fp.cum_.assign(m + 1, 0.0);
        const double dtheta = kPi / m;
        double acc = 0.0;
        fp.theta_[0] = 0.0;
        for (int j = 0; j < m; ++j) {
            acc += dtheta * density_psi(d, (j + 0.5) * dtheta);
            fp.theta_[j + 1] = (j + 1) * dtheta;
            fp.cum_[j + 1] = acc;
        }
        // non-settling totals under refinement mean a divergent integral
        double acc2 = 0.0;
        const double dt2 = kPi / (2 * m);
        for (int j = 0; j < 2 * m; ++j) acc2 += dt2 * density_psi(d, (j + 0.5) * dt2);
        if (std::abs(acc2 - acc) > 1e-6 * std::max(1.0, std::abs(acc2)))
            fp.total_ = std::numeric_limits<double>::infinity();
        else
            fp.total_ = acc;
        fp.build_slopes();
        return fp;
    }

    static FisherProfile for_grid(const BiasDistribution& d) {
        FisherProfile fp;
        fp.grid_ = true;
        const auto& n = d.atom_nodes();
        const auto& p = d.atom_weights();
        const std::size_t m = n.size();
        std::vector<double> theta(m);
        for (std::size_t i = 0; i < m; ++i) theta[i] = 2.0 * std::asin(std::sqrt(n[i]));
        fp.cell_edges_.resize(m + 1);
        fp.cell_edges_[0] = 0.0;
        fp.cell_edges_[m] = kPi;
        for (std::size_t i = 1; i < m; ++i)
            fp.cell_edges_[i] = 0.5 * (theta[i - 1] + theta[i]);
        fp.slope_.resize(m);  // dF/dtheta = Theta_i / p_i on cell i
        fp.cum_.assign(m + 1, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double width = fp.cell_edges_[i + 1] - fp.cell_edges_[i];
            fp.slope_[i] =
                p[i] > 0.0 ? width / p[i] : std::numeric_limits<double>::infinity();
            fp.cum_[i + 1] = fp.cum_[i] + width * fp.slope_[i];
        }
        fp.total_ = fp.cum_[m];
        return fp;
    }

    double total() const { return total_; }
    bool divergent() const { return !std::isfinite(total_); }

    // Integrand 1/(f(w) w (1-w)) under the profile's density convention.
    double phi(const BiasDistribution& d, double w) const {
        if (grid_) {
            const double theta = 2.0 * std::asin(std::sqrt(w));
            const std::size_t i = cell_index(theta);
            // dF/dw = (dF/dtheta) (dtheta/dw), dtheta/dw = 1/sqrt(w(1-w))
            return slope_[i] / std::sqrt(w * (1.0 - w));
        }
        return 1.0 / (density(d, w) * w * (1.0 - w));
    }

    // Cumulative F(w), monotone by construction.
    double cumulative(double w) const {
        if (w <= 0.0) return 0.0;
        if (w >= 1.0) return total_;
        const double theta = 2.0 * std::asin(std::sqrt(w));
        if (grid_) {
            const std::size_t i = cell_index(theta);
            return cum_[i] + (theta - cell_edges_[i]) * slope_[i];
        }
        return pchip_eval(theta);
    }

    // g_opt(w) = (1 - cos(pi F(w)/F(1))) / 2, clamped to [0,1].
    double g_opt(double w) const {
        if (divergent()) throw DivergentBias("g_opt undefined: fisher integral diverges");
        if (w <= 0.0) return 0.0;
        if (w >= 1.0) return 1.0;
        const double ratio = cumulative(w) / total_;
        const double g = 0.5 * (1.0 - std::cos(kPi * std::min(1.0, std::max(0.0, ratio))));
        return std::min(1.0, std::max(0.0, g));
    }

private:
    // dF/dtheta = (dw/dtheta) / (f(w) w(1-w)) = 2 / (f(w) sin(theta))
    static double density_psi(const BiasDistribution& d, double theta) {
        const double s = std::sin(theta / 2.0), c = std::cos(theta / 2.0);
        return 2.0 / (density(d, s * s) * (2.0 * s * c));
    }

    std::size_t cell_index(double theta) const {
        auto it = std::upper_bound(cell_edges_.begin(), cell_edges_.end(), theta);
        std::size_t i = static_cast<std::size_t>(it - cell_edges_.begin());
        if (i == 0) return 0;
        if (i > slope_.size()) return slope_.size() - 1;
        return i - 1;
    }

    // Fritsch-Carlson monotone cubic slopes for the theta-space table.
    void build_slopes() {
        const std::size_t m = theta_.size();
        slopes_.assign(m, 0.0);
        if (m < 2) return;
        std::vector<double> sec(m - 1);
        for (std::size_t i = 0; i + 1 < m; ++i)
            sec[i] = (cum_[i + 1] - cum_[i]) / (theta_[i + 1] - theta_[i]);
        slopes_[0] = sec[0];
        slopes_[m - 1] = sec[m - 2];
        for (std::size_t i = 1; i + 1 < m; ++i) {
            if (sec[i - 1] * sec[i] <= 0.0) {
                slopes_[i] = 0.0;
            } else {
                // harmonic mean preserves monotonicity
                slopes_[i] = 2.0 * sec[i - 1] * sec[i] / (sec[i - 1] + sec[i]);
            }
        }
    }

    double pchip_eval(double theta) const {
        const std::size_t m = theta_.size();
        auto it = std::upper_bound(theta_.begin(), theta_.end(), theta);
        std::size_t i = static_cast<std::size_t>(it - theta_.begin());
        if (i == 0) i = 1;
        if (i >= m) i = m - 1;
        const double h = theta_[i] - theta_[i - 1];
        const double t = (theta - theta_[i - 1]) / h;
        const double y0 = cum_[i - 1], y1 = cum_[i];
        const double d0 = slopes_[i - 1] * h, d1 = slopes_[i] * h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * d0 +
               (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * d1;
    }

    bool grid_ = false;
    double total_ = 0.0;
    std::vector<double> theta_, cum_, slopes_;  // density path
    std::vector<double> cell_edges_, slope_;    // grid path (theta cells)
};

// int_0^1 dw / (f_W(w) w(1-w)); +infinity when the integral diverges.
// Diverging integrands never settle under order doubling, which is the
// detection signal (the arcsine substitution makes admissible densities
// converge spectrally, so a non-settling sequence means divergence).
inline double fisher_integral(const BiasDistribution& d, int rule_order) {
    if (d.kind() == BiasKind::PointMass)
        throw NoDensity("fisher integral undefined for a point mass");
    if (d.kind() == BiasKind::Grid) return FisherProfile::for_grid(d).total();

    int order = std::max(8, rule_order);
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int round = 0; round < 8; ++round) {
        const QuadratureRule rule = make_quadrature(d, order, 1 << 20);
        // E_f[ 1/(f(w)^2 w(1-w)) ] equals the target integral.
        const double cur = expect(rule, [&](double w) {
            const double f = density(d, w);
            return 1.0 / (f * f * w * (1.0 - w));
        });
        if (round > 0 && std::abs(cur - prev) <= 1e-9 * std::max(1.0, std::abs(cur)))
            return cur;
        prev = cur;
        order *= 2;
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace collusim
