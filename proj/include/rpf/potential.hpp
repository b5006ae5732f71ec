#pragma once

// Hoelder potentials, grid variation and seminorms, and the smallness
// certificates (star, double star, small variation).

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rpf/dynamics.hpp"
#include "rpf/grid.hpp"
#include "rpf/hyperbolic.hpp"

namespace rpf {

enum class PotentialFamily { constant, geometric, custom };

inline const char* to_string(PotentialFamily f) {
    switch (f) {
        case PotentialFamily::constant: return "constant";
        case PotentialFamily::geometric: return "geometric";
        default: return "custom";
    }
}

class Potential {
public:
    using Fn = std::function<double(double, int)>;

    static Potential constant(double c, double alpha = 1.0) {
        Potential p;
        p.family_ = PotentialFamily::constant;
        p.c_ = c;
        p.alpha_ = alpha;
        return p;
    }

    // -t log|f'|, evaluated with the derivative of the branch that produced
    // the point when one is supplied.
    static Potential geometric(MapPtr map, double t, double alpha = 0.5) {
        Potential p;
        p.family_ = PotentialFamily::geometric;
        p.map_ = std::move(map);
        p.t_ = t;
        p.alpha_ = alpha;
        return p;
    }

    static Potential custom(Fn f, double alpha, std::string label = "custom") {
        Potential p;
        p.family_ = PotentialFamily::custom;
        p.fn_ = std::move(f);
        p.alpha_ = alpha;
        p.label_ = std::move(label);
        return p;
    }

    static Potential from_grid(GridFunction g, double alpha) {
        auto gp = std::make_shared<GridFunction>(std::move(g));
        return custom([gp](double x, int) { return gp->eval(x); }, alpha, "grid");
    }

    // phi + s * psi as a custom potential.
    Potential plus(const Potential& psi, double s) const {
        Potential a = *this, b = psi;
        return custom([a, b, s](double x, int br) { return a.eval(x, br) + s * b.eval(x, br); }, alpha_,
                      "perturbed");
    }

    double eval(double x, int branch = -1) const {
        switch (family_) {
            case PotentialFamily::constant: return c_;
            case PotentialFamily::geometric: {
                const double d = branch >= 0 ? map_->derivative(x, branch) : map_->derivative(x);
                return -t_ * std::log(std::abs(d));
            }
            default: return fn_(x, branch);
        }
    }

    PotentialFamily family() const { return family_; }
    double alpha() const { return alpha_; }
    double t() const { return t_; }
    double value() const { return c_; }
    const std::string& label() const { return label_; }

    GridFunction on_grid(SpaceKind kind, int n) const {
        return GridFunction::sample(kind, n, [this](double x) { return eval(x); });
    }

private:
    PotentialFamily family_ = PotentialFamily::constant;
    MapPtr map_;
    Fn fn_;
    double c_ = 0.0, t_ = 0.0, alpha_ = 1.0;
    std::string label_ = "constant";
};

inline double variation(const Potential& pot, SpaceKind kind, int n) {
    const GridFunction g = pot.on_grid(kind, n);
    return g.max() - g.min();
}

inline double holder_seminorm(const Potential& pot, SpaceKind kind, double alpha, int n, double radius) {
    return grid_holder_seminorm(pot.on_grid(kind, n), alpha, radius);
}

inline bool small_variation_check(const PiecewiseMap& f, const Potential& pot, int q, int n = 1 << 12) {
    if (!(q >= 1 && q < f.degree())) throw ConfigError("small variation check needs 1 <= q < degree");
    return variation(pot, f.space().kind, n) < std::log(double(f.degree())) - std::log(double(q));
}

// Hoelder seminorm of y -> exp(S_N phi(y)) over matched N-step preimages of
// coarse-grid pairs (x, x') with d(x, x') < delta; distances are measured
// between the preimages.
inline double exp_birkhoff_seminorm(const PiecewiseMap& f, const Potential& pot, int N, double alpha,
                                    double delta, int coarse = 64) {
    const double leaves_d = std::pow(double(f.degree()), N);
    if (leaves_d > double(1 << 20)) throw BranchExplosion("deg^N exceeds the history budget 2^20");
    const long leaves = static_cast<long>(leaves_d);
    while (coarse > 8 && 2.0 * coarse * leaves > double(1 << 24)) coarse /= 2;
    const bool circle = f.space().kind == SpaceKind::circle;
    const int starts = circle ? 2 * coarse : coarse;

    // Leaf positions and Birkhoff sums, in history order, for every start.
    std::vector<std::vector<double>> pos(starts), sum(starts);
    auto start_point = [&](int s) { return circle ? (s % coarse + 0.5) / coarse + (s / coarse) : double(s) / (coarse - 1); };
    for (int s = 0; s < starts; ++s) {
        std::vector<double> cur{start_point(s)}, acc{0.0};
        for (int level = 0; level < N; ++level) {
            std::vector<double> nxt, nacc;
            nxt.reserve(cur.size() * f.degree());
            nacc.reserve(cur.size() * f.degree());
            for (std::size_t i = 0; i < cur.size(); ++i)
                for (int b = 0; b < f.degree(); ++b) {
                    const Preimage y = f.local_inverse(b, cur[i]);
                    nxt.push_back(y.y);
                    nacc.push_back(acc[i] + pot.eval(f.space().wrap(y.y), y.branch));
                }
            cur.swap(nxt);
            acc.swap(nacc);
        }
        pos[s] = std::move(cur);
        sum[s] = std::move(acc);
    }
    double best = 0.0;
    for (int s = 0; s < coarse; ++s) {
        const double x = start_point(s);
        for (int s2 = s + 1; s2 < starts; ++s2) {
            const double x2 = start_point(s2);
            if (!(x2 - x < delta)) break;
            for (long l = 0; l < leaves; ++l) {
                const double d = std::abs(pos[s][l] - pos[s2][l]);
                if (d <= 0.0) continue;
                best = std::max(best, std::abs(std::exp(sum[s][l]) - std::exp(sum[s2][l])) / std::pow(d, alpha));
            }
        }
    }
    return best;
}

struct LambdaHatParams {
    double sigma = 0.9;
    double alpha = 0.5;
    double delta = 0.25;
    int N = 0;
    int n_tilde_mix = 0;  // mixing time
    int n_tilde_hyp = 0;  // first hyperbolic time >= 2 * mixing time
    int m = 0;            // chain count ceil(d/delta) + 1
};

struct LambdaHat {
    double plain = 0.0;
    double improved = 0.0;
    double value = 0.0;  // improved when theta^N < 2, plain otherwise
    bool remark_active = false;
    double gamma = 0.0;
    double var_phi = 0.0;
    double inf_phi = 0.0;
    double exp_seminorm = 0.0;
};

inline int chain_count(double diameter, double delta) { return static_cast<int>(std::ceil(diameter / delta)) + 1; }

// Closed-form invariance factor. The improved bracket uses
// max(theta^N - 1, 0)^alpha + 1 so that it stays real when theta^N < 1.
inline LambdaHat lambda_hat_formula(double var_phi, double inf_phi, double exp_seminorm, double theta, int deg,
                                    double diameter, double gamma, const LambdaHatParams& p) {
    LambdaHat r;
    r.gamma = gamma;
    r.var_phi = var_phi;
    r.inf_phi = inf_phi;
    r.exp_seminorm = exp_seminorm;
    const double thN = std::pow(theta, p.N);
    const double degN = std::pow(double(deg), p.N);
    const double second = ((degN - 1.0) * std::pow(theta, p.N * p.alpha) + std::pow(gamma, p.alpha)) / degN;
    const double tail = 2.0 * p.m * std::pow(diameter, p.alpha) * exp_seminorm / std::exp(p.N * inf_phi);
    const double growth = std::exp(p.N * var_phi);
    r.plain = (growth * (thN + 1.0) + tail) * second;
    r.improved = (growth * (std::pow(std::max(thN - 1.0, 0.0), p.alpha) + 1.0) + tail) * second;
    r.remark_active = thN < 2.0;
    r.value = r.remark_active ? r.improved : r.plain;
    return r;
}

inline LambdaHat lambda_hat(const PiecewiseMap& f, const Potential& pot, const LambdaHatParams& p, int n = 1 << 12) {
    const GridFunction g = pot.on_grid(f.space().kind, n);
    const double gamma = gamma_constant(p.sigma, f.theta(), p.n_tilde_mix, p.n_tilde_hyp);
    const double es = exp_birkhoff_seminorm(f, pot, p.N, p.alpha, p.delta);
    return lambda_hat_formula(g.max() - g.min(), g.min(), es, f.theta(), f.degree(), f.space().diameter(), gamma,
                              p);
}

struct SmallnessReport {
    int resolution = 0;
    double var_phi = 0.0;
    double holder_seminorm = 0.0;
    double sigma = 0.0;
    double theta = 0.0;
    double alpha = 0.0;
    double delta = 0.0;
    int n_tilde_mix = 0;
    int n_tilde_hyp = 0;
    int N = 0;
    int m = 0;
    int q = 1;
    double gamma = 0.0;
    double lambda_hat = 0.0;
    double lambda_hat_plain = 0.0;
    bool remark_active = false;
    bool passes_star = false;
    bool passes_double_star = false;
    bool passes_small_variation = false;
    std::string note;
};

struct CertifyOptions {
    double sigma = 0.9;
    double alpha = 0.5;
    double delta = 0.25;
    int q = 1;
    int resolution = 1 << 12;
    int sample_points = 64;
    int hyp_horizon = 10000;
    std::uint64_t seed = 1;
};

// Mixing time, first hyperbolic time, gamma and lambda-hat in one report.
// Failing certificates are data; only missing ingredients raise.
inline SmallnessReport certify_smallness(const PiecewiseMap& f, const Potential& pot, const CertifyOptions& o) {
    SmallnessReport r;
    r.resolution = o.resolution;
    r.sigma = o.sigma;
    r.theta = f.theta();
    r.alpha = o.alpha;
    r.delta = o.delta;
    r.q = o.q;
    const GridFunction g = pot.on_grid(f.space().kind, o.resolution);
    r.var_phi = g.max() - g.min();
    r.holder_seminorm = grid_holder_seminorm(g, o.alpha, INFINITY);
    r.passes_star = o.sigma * r.theta < 1.0;
    r.passes_small_variation =
        o.q >= 1 && o.q < f.degree() && r.var_phi < std::log(double(f.degree())) - std::log(double(o.q));
    r.m = chain_count(f.space().diameter(), o.delta);
    r.n_tilde_mix = mixing_time(f, o.delta).n_tilde;
    // Deterministic low-discrepancy sample of starting points.
    std::vector<double> sample;
    for (int i = 0; i < o.sample_points; ++i) sample.push_back(std::fmod(0.5 + i * 0.6180339887498949, 1.0));
    r.n_tilde_hyp = first_hyperbolic_time_at_least(f, o.sigma, 2 * r.n_tilde_mix, sample, o.hyp_horizon);
    r.N = r.n_tilde_mix + r.n_tilde_hyp;
    if (!r.passes_star) {
        r.note = "condition (star) fails; gamma and lambda-hat undefined";
        r.lambda_hat = r.lambda_hat_plain = INFINITY;
        return r;
    }
    LambdaHatParams p{o.sigma, o.alpha, o.delta, r.N, r.n_tilde_mix, r.n_tilde_hyp, r.m};
    const LambdaHat lh = lambda_hat(f, pot, p, o.resolution);
    r.gamma = lh.gamma;
    r.lambda_hat = lh.value;
    r.lambda_hat_plain = lh.plain;
    r.remark_active = lh.remark_active;
    r.passes_double_star = lh.value < 1.0;
    return r;
}

}  // namespace rpf
