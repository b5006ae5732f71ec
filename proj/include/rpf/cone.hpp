#pragma once

// Cones of locally Hoelder positive functions and their projective metric.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rpf/grid.hpp"
#include "rpf/transfer.hpp"

namespace rpf {

struct ConeParams {
    double k = 1.0;
    double delta = 0.25;
    double alpha = 0.5;
};

struct Membership {
    bool member = false;
    double ratio = 0.0;
};

inline Membership cone_membership(const GridFunction& psi, const ConeParams& p) {
    const double lo = psi.min();
    if (!(lo > 0.0)) return {false, INFINITY};
    const double r = grid_holder_seminorm(psi, p.alpha, p.delta) / lo;
    return {r <= p.k, r};
}

inline double default_cone_k(double phi_seminorm, double inf_phi, int degree, int N) {
    return 10.0 * std::max(1.0, phi_seminorm / std::exp(inf_phi)) * std::pow(double(degree), N);
}

struct ThetaResult {
    double theta = 0.0;
    double A = 0.0;
    double B = 0.0;
};

namespace detail {

struct PairSweep {
    double A = INFINITY, B = -INFINITY;
    int ai = -1, aj = -1, bi = -1, bj = -1;
};

// Extremes over z of the ratio for the ordered pair (i, j).
inline void sweep_pair(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi, double a, int i, int j,
                       PairSweep& s) {
    const double dpsi = psi[i] - psi[j];
    const double dphi = phi[i] - phi[j];
    double lo = INFINITY, hi = -INFINITY;
    for (Eigen::Index z = 0; z < phi.size(); ++z) {
        const double r = (a * psi[z] - dpsi) / (a * phi[z] - dphi);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    if (lo < s.A) {
        s.A = lo;
        s.ai = i;
        s.aj = j;
    }
    if (hi > s.B) {
        s.B = hi;
        s.bi = i;
        s.bj = j;
    }
}

}  // namespace detail

// Theta_k(phi, psi) = log(B/A) with the ratio
//   [k d^a psi(z) - (psi(x) - psi(y))] / [k d^a phi(z) - (phi(x) - phi(y))]
// minimised (A) and maximised (B) over d(x,y) < delta and all z. Pairs are
// swept on a decimated grid of at most `coarse_points` points, then refined
// at full resolution around the extremal pairs; z always runs over the
// full grid.
inline ThetaResult theta_distance(const GridFunction& phi, const GridFunction& psi, const ConeParams& p,
                                  int coarse_points = 128, double boundary_tol = 1e-9) {
    if (phi.resolution() != psi.resolution()) throw ConfigError("theta_distance: resolution mismatch");
    for (const GridFunction* g : {&phi, &psi}) {
        const Membership m = cone_membership(*g, p);
        if (!(g->min() > 0.0) || m.ratio >= p.k * (1.0 - boundary_tol))
            throw BoundaryOfCone("theta_distance needs strict cone members (ratio " + std::to_string(m.ratio) +
                                 ", k " + std::to_string(p.k) + ")");
    }
    const int n = phi.resolution();
    const SpaceKind kind = phi.kind();
    const Eigen::VectorXd& a = phi.values();
    const Eigen::VectorXd& b = psi.values();
    const int stride = std::max(1, (n + coarse_points - 1) / coarse_points);
    auto offset_ok = [&](int k) { return double(k) / n < p.delta; };
    auto partner = [&](int i, int k) -> int {
        int j = i + k;
        if (kind == SpaceKind::circle) return ((j % n) + n) % n;
        return (j < 0 || j >= n) ? -1 : j;
    };
    const int max_off = kind == SpaceKind::circle ? n / 2 : n - 1;

    detail::PairSweep s;
    std::vector<double> coef(max_off + 1, 0.0);
    for (int k = 1; k <= max_off; ++k) coef[k] = p.k * std::pow(double(k) / n, p.alpha);
    for (int i = 0; i < n; i += stride)
        for (int k = stride; k <= max_off && offset_ok(k); k += stride)
            for (int sgn : {-1, 1}) {
                const int j = partner(i, sgn * k);
                if (j >= 0) detail::sweep_pair(a, b, coef[k], i, j, s);
            }

    // Full-resolution refinement around the extremal pairs.
    auto refine = [&](int ci, int cj) {
        if (ci < 0) return;
        for (int di = -stride; di <= stride; ++di) {
            const int i = partner(ci, di);
            if (i < 0) continue;
            for (int dj = -stride; dj <= stride; ++dj) {
                const int j = partner(cj, dj);
                if (j < 0 || j == i) continue;
                int off = std::abs(i - j);
                if (kind == SpaceKind::circle) off = std::min(off, n - off);
                if (!offset_ok(off)) continue;
                detail::sweep_pair(a, b, coef[off], i, j, s);
            }
        }
    };
    const detail::PairSweep coarse = s;
    refine(coarse.ai, coarse.aj);
    refine(coarse.bi, coarse.bj);

    ThetaResult r;
    r.A = s.A;
    r.B = s.B;
    if (!(s.A > 0.0) || !std::isfinite(s.B)) {
        r.theta = INFINITY;
    } else {
        r.theta = std::log(s.B / s.A);
        if (r.theta > 700.0) r.theta = INFINITY;
    }
    return r;
}

// exp(s g) for a band-limited Gaussian trigonometric field g, with s found
// by bisection so that the cone ratio equals `target_ratio`.
inline GridFunction random_cone_member(std::mt19937_64& rng, SpaceKind kind, int n, const ConeParams& p,
                                       double target_ratio, int modes = 8) {
    std::normal_distribution<double> N01(0.0, 1.0);
    std::vector<double> ca(modes), cb(modes);
    for (int m = 0; m < modes; ++m) {
        ca[m] = N01(rng) / (m + 1);
        cb[m] = N01(rng) / (m + 1);
    }
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) {
        const double x = cell_center(i, n);
        double v = 0.0;
        for (int m = 0; m < modes; ++m)
            v += ca[m] * std::cos(2.0 * M_PI * (m + 1) * x) + cb[m] * std::sin(2.0 * M_PI * (m + 1) * x);
        g[i] = v;
    }
    auto ratio = [&](double s) {
        Eigen::VectorXd v = (s * g.array()).exp().matrix();
        return grid_holder_seminorm(kind, v, p.alpha, p.delta) / v.minCoeff();
    };
    double lo = 0.0, hi = 1.0;
    while (ratio(hi) < target_ratio) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) break;
    }
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ratio(mid) < target_ratio ? lo : hi) = mid;
    }
    Eigen::VectorXd v = (lo * g.array()).exp().matrix();
    return {kind, v / v.maxCoeff()};
}

struct InvarianceResult {
    bool all_mapped = false;
    double worst_ratio = 0.0;  // worst image ratio divided by k
    double lambda_hat_predicted = 0.0;
    std::vector<double> input_ratios, image_ratios;
};

// Random members with ratio in [0.1k, 0.9k] are pushed through L^N; they
// are mapped correctly when every image ratio is at most lambda_hat k
// (1 + slack).
inline InvarianceResult cone_invariance_check(const DiscretizedOperator& op, const ConeParams& p, int N, int trials,
                                              double lambda_hat, std::uint64_t seed, double slack = 0.1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.1, 0.9);
    InvarianceResult r;
    r.lambda_hat_predicted = lambda_hat;
    for (int t = 0; t < trials; ++t) {
        const GridFunction psi = random_cone_member(rng, op.kind(), op.resolution(), p, U(rng) * p.k);
        const GridFunction img = op.apply_n(psi, N, PowerMethod::iterated);
        const double in = cone_membership(psi, p).ratio;
        const double out = cone_membership(img, p).ratio;
        r.input_ratios.push_back(in);
        r.image_ratios.push_back(out);
        r.worst_ratio = std::max(r.worst_ratio, out / p.k);
    }
    r.all_mapped = r.worst_ratio <= lambda_hat * (1.0 + slack);
    return r;
}

struct ContractionResult {
    double max_observed_factor = 0.0;
    double delta_diam = 0.0;
    std::vector<double> theta_before, theta_after;
    bool passes() const { return max_observed_factor < 1.0; }
};

inline GridFunction normalized(const GridFunction& g) { return {g.kind(), g.values() / g.max()}; }

inline ContractionResult contraction_check(const DiscretizedOperator& op, const ConeParams& p, int N, int pairs,
                                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.1, 0.9);
    ContractionResult r;
    for (int t = 0; t < pairs; ++t) {
        const GridFunction a = random_cone_member(rng, op.kind(), op.resolution(), p, U(rng) * p.k);
        const GridFunction b = random_cone_member(rng, op.kind(), op.resolution(), p, U(rng) * p.k);
        const double before = theta_distance(a, b, p).theta;
        const GridFunction la = normalized(op.apply_n(a, N, PowerMethod::iterated));
        const GridFunction lb = normalized(op.apply_n(b, N, PowerMethod::iterated));
        const double after = theta_distance(la, lb, p).theta;
        r.theta_before.push_back(before);
        r.theta_after.push_back(after);
        const double factor = before > 0.0 ? after / before : 0.0;
        r.max_observed_factor = std::max(r.max_observed_factor, factor);
        r.delta_diam = std::max(r.delta_diam, after);
    }
    return r;
}

struct SupInfCheck {
    bool pass = false;
    double slack = 0.0;  // bound / (sup / inf)
};

inline SupInfCheck sup_inf_bound_check(const GridFunction& psi, const ConeParams& p, double diameter) {
    const int m = chain_count(diameter, p.delta);
    const double bound = psi.min() * 2.0 * m * std::pow(diameter, p.alpha) * p.k;
    return {psi.max() <= bound, bound / psi.max()};
}

}  // namespace rpf
