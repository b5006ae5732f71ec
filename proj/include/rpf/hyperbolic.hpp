#pragma once

// Hyperbolic times along orbits, the finite-horizon non-uniform expansion
// proxy, pre-ball contraction and the contraction constant gamma.

#include <cmath>
#include <vector>

#include "rpf/dynamics.hpp"

namespace rpf {

struct OrbitExpansionTrace {
    double x0 = 0.0;
    int horizon = 0;
    std::vector<double> points;      // x_j, j = 0..horizon
    std::vector<int> branches;       // branch owning x_j, j = 0..horizon-1
    std::vector<double> logs;        // log |Df(x_j)|^{-1}, j = 0..horizon-1
    std::vector<double> prefix_avg;  // mean of logs[0..j]
};

inline OrbitExpansionTrace make_trace(const PiecewiseMap& f, double x0, int horizon) {
    OrbitExpansionTrace t;
    t.x0 = x0;
    t.horizon = horizon;
    t.points.reserve(horizon + 1);
    double x = f.space().wrap(x0);
    double s = 0.0;
    for (int j = 0; j < horizon; ++j) {
        t.points.push_back(x);
        const int b = f.branch_of(x);
        t.branches.push_back(b);
        const double l = -std::log(std::abs(f.derivative(x, b)));
        t.logs.push_back(l);
        s += l;
        t.prefix_avg.push_back(s / (j + 1));
        x = f.evaluate(x);
    }
    t.points.push_back(x);
    return t;
}

// n is hyperbolic iff every suffix window of logs[0..n-1] of length k < n
// sums to at most (k/2) log sigma.
inline bool is_hyperbolic_time(const OrbitExpansionTrace& t, int n, double sigma) {
    const double half_log = 0.5 * std::log(sigma);
    double s = 0.0;
    for (int k = 1; k < n; ++k) {
        s += t.logs[n - k];
        if (s > k * half_log) return false;
    }
    return true;
}

inline std::vector<int> hyperbolic_times(const OrbitExpansionTrace& t, double sigma) {
    std::vector<int> out;
    for (int n = 1; n <= t.horizon; ++n)
        if (is_hyperbolic_time(t, n, sigma)) out.push_back(n);
    return out;
}

inline double hyperbolic_time_density(const OrbitExpansionTrace& t, double sigma) {
    return t.horizon > 0 ? double(hyperbolic_times(t, sigma).size()) / t.horizon : 0.0;
}

inline int first_hyperbolic_time_at_least(const PiecewiseMap& f, double sigma, int lower_bound,
                                          const std::vector<double>& sample, int horizon) {
    std::vector<OrbitExpansionTrace> traces;
    traces.reserve(sample.size());
    for (double x : sample) traces.push_back(make_trace(f, x, horizon));
    for (int n = std::max(lower_bound, 1); n <= horizon; ++n)
        for (const auto& t : traces)
            if (is_hyperbolic_time(t, n, sigma)) return n;
    throw NoHyperbolicTime("no sampled point has a hyperbolic time in [" + std::to_string(lower_bound) + ", " +
                           std::to_string(horizon) + "]");
}

// Finite-horizon stand-in for the limsup condition: the largest prefix
// average over the second half of the horizon must not exceed log sigma
// plus a slack. A proxy, not a decision procedure.
inline bool sigma_membership_proxy(const OrbitExpansionTrace& t, double sigma, double slack = 0.01) {
    double tail = -INFINITY;
    for (int j = t.horizon / 2; j < t.horizon; ++j) tail = std::max(tail, t.prefix_avg[j]);
    return tail <= std::log(sigma) + slack;
}

inline double gamma_constant(double sigma, double theta, int n_tilde_mix, int n_tilde_hyp) {
    if (!(sigma * theta < 1.0))
        throw StarViolation("sigma * theta = " + std::to_string(sigma * theta) + " is not below 1");
    return std::pow(sigma, 0.5 * n_tilde_hyp - n_tilde_mix) * std::pow(sigma * theta, n_tilde_mix);
}

struct PreballCheck {
    double worst_ratio = 0.0;  // max of d(level n-k) / (sigma^{k/2} d(level n)); <= 1 passes
    long pairs = 0;
    bool passes() const { return worst_ratio <= 1.0; }
};

// Pulls a grid of points of B(f^n x, delta) back along the recorded branch
// itinerary of x and compares backward distances with sigma^{k/2}.
inline PreballCheck preball_contraction(const PiecewiseMap& f, const OrbitExpansionTrace& t, int n, double sigma,
                                        double delta, int points = 17) {
    const bool circle = f.space().kind == SpaceKind::circle;
    std::vector<std::vector<double>> lv(n + 1);
    for (int p = 0; p < points; ++p) {
        double w = t.points[n] + delta * (-1.0 + 2.0 * (p + 1) / (points + 1));
        if (!circle) {
            if (w < 0.0 || w > 1.0) continue;
        }
        lv[n].push_back(w);
    }
    for (int j = n - 1; j >= 0; --j) {
        lv[j].reserve(lv[n].size());
        for (double w : lv[j + 1]) lv[j].push_back(f.local_inverse(t.branches[j], w).y);
    }
    PreballCheck res;
    const std::size_t m = lv[n].size();
    for (std::size_t p = 0; p < m; ++p)
        for (std::size_t q = p + 1; q < m; ++q) {
            const double top = std::abs(lv[n][p] - lv[n][q]);
            for (int k = 1; k < n; ++k) {
                const double d = std::abs(lv[n - k][p] - lv[n - k][q]);
                res.worst_ratio = std::max(res.worst_ratio, d / (std::pow(sigma, 0.5 * k) * top));
                ++res.pairs;
            }
        }
    return res;
}

}  // namespace rpf
