#pragma once

// Skew products F(x, y) = (f(x), g(x, y)) over a piecewise expanding base
// with uniformly contracting fibres on [0, 1].

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rpf/parallel.hpp"
#include "rpf/statistics.hpp"

namespace rpf {

// g(x, y) = ybar + rate (y - ybar) (1 + a sin 2 pi x) / (1 + |a|). The
// Lipschitz constant in y is at most `rate` and g(x, ybar) = ybar.
class SkewSystem {
public:
    SkewSystem(MapPtr base, double rate, double amplitude = 0.0, double ybar = 0.0)
        : base_(std::move(base)), rate_(rate), amp_(amplitude), ybar_(ybar) {
        if (!(rate_ >= 0.0 && rate_ < 1.0)) throw ConfigError("fibre contraction rate must lie in [0, 1)");
        if (!(ybar_ >= 0.0 && ybar_ <= 1.0)) throw ConfigError("fixed fibre point must lie in [0, 1]");
    }

    const PiecewiseMap& base() const { return *base_; }
    const MapPtr& base_ptr() const { return base_; }
    double rate() const { return rate_; }
    double amplitude() const { return amp_; }
    double fixed_point() const { return ybar_; }

    double fiber(double x, double y) const {
        if (y == ybar_) return ybar_;
        return ybar_ + rate_ * (y - ybar_) * (1.0 + amp_ * std::sin(2.0 * M_PI * x)) / (1.0 + std::abs(amp_));
    }

    std::pair<double, double> step(double x, double y) const { return {base_->evaluate(x), fiber(x, y)}; }

private:
    MapPtr base_;
    double rate_, amp_, ybar_;
};

// Potential on the product, evaluated with the base branch when known.
using SkewPotential = std::function<double(double x, double y, int branch)>;
using SkewObservable = std::function<double(double x, double y)>;

struct FiberChecks {
    double lipschitz = 0.0;      // max |g(x,y1) - g(x,y2)| / |y1 - y2|
    double fixed_defect = 0.0;   // max |g(x, ybar) - ybar|
    double line_defect = 0.0;    // max |F(x, ybar) - (f(x), ybar)|
    bool contraction_ok = false;
    bool fixed_ok = false;
};

inline FiberChecks fiber_checks(const SkewSystem& s, int nx = 101, int ny = 41) {
    FiberChecks c;
    for (int i = 0; i < nx; ++i) {
        const double x = (i + 0.5) / nx;
        for (int a = 0; a < ny; ++a)
            for (int b = a + 1; b < ny; ++b) {
                const double y1 = double(a) / (ny - 1), y2 = double(b) / (ny - 1);
                c.lipschitz = std::max(c.lipschitz, std::abs(s.fiber(x, y1) - s.fiber(x, y2)) / (y2 - y1));
            }
        c.fixed_defect = std::max(c.fixed_defect, std::abs(s.fiber(x, s.fixed_point()) - s.fixed_point()));
        const auto [fx, fy] = s.step(x, s.fixed_point());
        c.line_defect = std::max({c.line_defect, std::abs(fx - s.base().evaluate(x)), std::abs(fy - s.fixed_point())});
    }
    c.contraction_ok = c.lipschitz <= s.rate() * (1.0 + 1e-12);
    c.fixed_ok = c.fixed_defect <= 1e-12 && c.line_defect == 0.0;
    return c;
}

// phi(x) = Phi(x, ybar), the restriction to the invariant fibre line.
inline Potential induce_potential(const SkewSystem& s, const SkewPotential& Phi, double alpha = 0.5) {
    const double yb = s.fixed_point();
    return Potential::custom([Phi, yb](double x, int b) { return Phi(x, yb, b); }, alpha, "induced");
}

struct VariationCheck {
    double var_phi = 0.0, var_Phi = 0.0;
    bool holds() const { return var_phi <= var_Phi; }
};

// Variations on an nx-by-ny product grid whose y-nodes include ybar.
inline VariationCheck variation_check(const SkewSystem& s, const SkewPotential& Phi, int nx = 256, int ny = 65) {
    std::vector<double> ys;
    for (int j = 0; j < ny; ++j) ys.push_back(double(j) / (ny - 1));
    ys.push_back(s.fixed_point());
    double lo = INFINITY, hi = -INFINITY, plo = INFINITY, phi_hi = -INFINITY;
    for (int i = 0; i < nx; ++i) {
        const double x = (i + 0.5) / nx;
        for (double y : ys) {
            const double v = Phi(x, y, -1);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double v = Phi(x, s.fixed_point(), -1);
        plo = std::min(plo, v);
        phi_hi = std::max(phi_hi, v);
    }
    return {phi_hi - plo, hi - lo};
}

// sup |F_emp - F_mu| for a sample against the cellwise-linear CDF of mu.
inline double cdf_distance(std::vector<double>& xs, const Eigen::VectorXd& mu) {
    const int n = static_cast<int>(mu.size());
    std::vector<double> cum(n + 1, 0.0);
    for (int i = 0; i < n; ++i) cum[i + 1] = cum[i] + std::max(mu[i], 0.0);
    for (double& c : cum) c /= cum[n];
    auto F = [&](double x) {
        const double u = std::clamp(x, 0.0, 1.0) * n;
        const int k = std::min(static_cast<int>(u), n - 1);
        return cum[k] + (u - k) * (cum[k + 1] - cum[k]);
    };
    std::sort(xs.begin(), xs.end());
    const double N = static_cast<double>(xs.size());
    double D = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double v = F(xs[k]);
        D = std::max({D, (k + 1) / N - v, v - k / N});
    }
    return D;
}

struct PushforwardReport {
    double cdf_distance = 0.0;
    long points = 0;
    int burn_in = 0, horizon = 0;
    double final_fiber_spread = 0.0;  // max |y - ybar| at the end of the runs
};

// Orbits of F started at (x, y) with x ~ mu_{f,phi} and y uniform. The base
// coordinate is produced backwards by the sampler (see MuSampler), the fibre
// forwards. The x-values at times burn_in .. burn_in + horizon - 1 are pooled
// and compared with mu_{f,phi}.
inline PushforwardReport pushforward_check(const SkewSystem& s, const MuSampler& sampler, const Eigen::VectorXd& mu,
                                           long samples, int burn_in, int horizon, std::uint64_t seed,
                                           int threads = 0) {
    PushforwardReport r;
    r.burn_in = burn_in;
    r.horizon = horizon;
    std::vector<double> pool(std::size_t(samples) * horizon);
    const long blocks = (samples + kSampleBlock - 1) / kSampleBlock;
    std::vector<double> spread(blocks, 0.0);
    parallel_blocks(blocks, threads, [&](long b) {
        auto rng = block_rng(seed, b);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        std::vector<double> xs;
        const long end = std::min(samples, (b + 1) * kSampleBlock);
        for (long k = b * kSampleBlock; k < end; ++k) {
            sampler.orbit(rng, burn_in + horizon, xs);
            double y = U(rng);
            for (int j = 0; j < burn_in + horizon; ++j) {
                if (j >= burn_in) pool[std::size_t(k) * horizon + (j - burn_in)] = xs[j];
                y = s.fiber(xs[j], y);
            }
            spread[b] = std::max(spread[b], std::abs(y - s.fixed_point()));
        }
    });
    r.points = static_cast<long>(pool.size());
    r.final_fiber_spread = *std::max_element(spread.begin(), spread.end());
    r.cdf_distance = cdf_distance(pool, mu);
    return r;
}

struct SkewStatsParams {
    long samples = 100000;  // orbits for the correlation estimates
    int burn_in = 100;
    int lag_max = 20;
    long clt_samples = 10000;
    int birkhoff_n = 1000;
    int batches = 10;
    std::uint64_t seed = 1;
    int threads = 0;
};

struct SkewStats {
    double mean = 0.0;
    std::vector<double> correlations, std_errors;
    double tau_F = 0.0, tau_F_se = NAN;
    int fit_points = 0;
    double sigma2_F = 0.0;       // correlation series, truncated at the fit range
    double tail_bound = 0.0;
    double sigma2_batch = NAN;   // variance of normalised Birkhoff sums
    double sigma2_batch_se = NAN;
    double ks_F = NAN;
    bool degenerate = false;     // zero variance: no CLT run
};

// Fit restricted to the leading run of correlations exceeding three
// standard errors.
inline DecayFit fit_decay_mc(const std::vector<double>& c, const std::vector<double>& se) {
    std::vector<double> trimmed{c[0]};
    for (std::size_t n = 1; n < c.size() && std::abs(c[n]) > 3.0 * se[n]; ++n) trimmed.push_back(c[n]);
    trimmed.push_back(0.0);
    return fit_decay(trimmed, 0.0);
}

// Log-linear fit over the fixed lags 1..m.
inline DecayFit fit_decay_window(const std::vector<double>& c, int m) {
    std::vector<double> trimmed(c.begin(), c.begin() + std::min<std::size_t>(m + 1, c.size()));
    trimmed.push_back(0.0);
    return fit_decay(trimmed, 0.0);
}

// Autocorrelations of obs along F-orbits after mu-start and burn-in, a
// fitted rate, the Green-Kubo sum, and an empirical CLT against it.
inline SkewStats skew_decay_and_clt(const SkewSystem& s, const MuSampler& sampler, const SkewObservable& obs,
                                    const SkewStatsParams& p) {
    SkewStats r;
    const int L = p.lag_max;
    const long blocks = (p.samples + kSampleBlock - 1) / kSampleBlock;
    // Per-block sums: z_0..z_L, and products z_n z_0.
    std::vector<std::vector<double>> sz(blocks, std::vector<double>(L + 1, 0.0)), szz = sz, szz2 = sz;
    std::vector<double> sz0(blocks, 0.0);
    parallel_blocks(blocks, p.threads, [&](long b) {
        auto rng = block_rng(p.seed, b);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        std::vector<double> xs, z(L + 1);
        const long end = std::min(p.samples, (b + 1) * kSampleBlock);
        for (long k = b * kSampleBlock; k < end; ++k) {
            sampler.orbit(rng, p.burn_in + L, xs);
            double y = U(rng);
            for (int j = 0; j < p.burn_in + L + 1; ++j) {
                if (j >= p.burn_in) z[j - p.burn_in] = obs(xs[j], y);
                if (j < p.burn_in + L) y = s.fiber(xs[j], y);
            }
            for (int n = 0; n <= L; ++n) {
                sz[b][n] += z[n];
                szz[b][n] += z[n] * z[0];
                szz2[b][n] += z[n] * z[n] * z[0] * z[0];
            }
        }
    });
    auto reduce = [&](long b0, long b1, std::vector<double>& c, std::vector<double>& se) {
        long cnt = std::min(p.samples, b1 * kSampleBlock) - b0 * kSampleBlock;
        double m = 0.0;
        for (long b = b0; b < b1; ++b)
            for (int n = 0; n <= L; ++n) m += sz[b][n];
        m /= double(cnt) * (L + 1);
        c.assign(L + 1, 0.0);
        se.assign(L + 1, 0.0);
        for (int n = 0; n <= L; ++n) {
            double a = 0.0, q = 0.0, s0 = 0.0, sn = 0.0;
            for (long b = b0; b < b1; ++b) {
                a += szz[b][n];
                q += szz2[b][n];
                s0 += sz[b][0];
                sn += sz[b][n];
            }
            const double exy = a / cnt;
            // Per-lag means keep the estimate valid for transient (no burn-in) runs.
            c[n] = exy - (s0 / cnt) * (sn / cnt);
            se[n] = std::sqrt(std::max(q / cnt - exy * exy, 0.0) / std::max<long>(cnt - 1, 1));
        }
        return m;
    };
    r.mean = reduce(0, blocks, r.correlations, r.std_errors);
    const DecayFit f = fit_decay_mc(r.correlations, r.std_errors);
    r.tau_F = f.tau;
    r.fit_points = f.points;
    double s2 = r.correlations[0];
    for (int n = 1; n <= f.points; ++n) s2 += 2.0 * r.correlations[n];
    r.sigma2_F = s2;
    r.tail_bound = f.tau < 1.0 ? 2.0 * f.K * std::pow(f.tau, f.points + 1) / (1.0 - f.tau) : INFINITY;

    // Batch means standard error of tau_F. Every batch is fitted over the
    // lag window chosen on the full sample, so the batches estimate the
    // same quantity as tau_F.
    if (p.batches >= 2 && blocks >= p.batches && f.points >= 2) {
        std::vector<double> taus;
        for (int g = 0; g < p.batches; ++g) {
            std::vector<double> c, se;
            reduce(blocks * g / p.batches, blocks * (g + 1) / p.batches, c, se);
            taus.push_back(fit_decay_window(c, f.points).tau);
        }
        double m = 0.0, v = 0.0;
        for (double t : taus) m += t;
        m /= taus.size();
        for (double t : taus) v += (t - m) * (t - m);
        r.tau_F_se = std::sqrt(v / (taus.size() - 1) / taus.size());
    }

    if (!(r.sigma2_F > 1e-12)) {
        r.degenerate = true;
        return r;
    }
    const long cb = (p.clt_samples + kSampleBlock - 1) / kSampleBlock;
    std::vector<double> sums(p.clt_samples);
    const double scale = 1.0 / std::sqrt(double(p.birkhoff_n));
    parallel_blocks(cb, p.threads, [&](long b) {
        auto rng = block_rng(p.seed ^ 0xc17c17c1ULL, b);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        std::vector<double> xs;
        const long end = std::min(p.clt_samples, (b + 1) * kSampleBlock);
        for (long k = b * kSampleBlock; k < end; ++k) {
            sampler.orbit(rng, p.burn_in + p.birkhoff_n, xs);
            double y = U(rng), S = 0.0;
            for (int j = 0; j < p.burn_in + p.birkhoff_n; ++j) {
                if (j >= p.burn_in) S += obs(xs[j], y) - r.mean;
                y = s.fiber(xs[j], y);
            }
            sums[k] = S * scale;
        }
    });
    double m = 0.0, v = 0.0;
    for (double z : sums) m += z;
    m /= sums.size();
    for (double z : sums) v += (z - m) * (z - m);
    r.sigma2_batch = v / (sums.size() - 1);
    r.sigma2_batch_se = r.sigma2_batch * std::sqrt(2.0 / (sums.size() - 1));
    r.ks_F = ks_normal(sums, r.sigma2_F);
    return r;
}

}  // namespace rpf
