#pragma once

// Correlation decay, Green-Kubo variance, empirical CLT, Gibbs ratios at
// hyperbolic times and the entropy identity.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rpf/hyperbolic.hpp"
#include "rpf/parallel.hpp"
#include "rpf/transfer.hpp"

namespace rpf {

using PointFn = std::function<double(double)>;

struct CorrelationSeries {
    int n_max = 0;
    std::vector<double> values;  // C_0 .. C_{n_max}
    double tau_hat = 0.0;
    double K_hat = 0.0;
    double fit_quality = 1.0;  // R^2 of the log-linear fit
    int fit_points = 0;        // indices 1..fit_points entered the fit
    double mean_phi = 0.0, mean_psi = 0.0;
};

struct DecayFit {
    double tau = 0.0, K = 0.0, r2 = 1.0;
    int points = 0;
};

// Least squares of log|C_n| against n over n = 1, 2, ... up to the first
// value at or below the noise floor. K is the smallest constant with
// |C_n| <= K tau^n on the fitted range. Fewer than two usable values means
// the decay is faster than anything resolvable: tau = 0.
inline DecayFit fit_decay(const std::vector<double>& c, double floor) {
    DecayFit f;
    int m = 0;
    while (m + 1 < static_cast<int>(c.size()) && std::abs(c[m + 1]) > floor) ++m;
    f.points = m;
    if (m < 2) {
        f.K = m == 1 ? std::abs(c[1]) : 0.0;
        return f;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int n = 1; n <= m; ++n) {
        const double y = std::log(std::abs(c[n]));
        sx += n;
        sy += y;
        sxx += double(n) * n;
        sxy += n * y;
        syy += y * y;
    }
    const double cov = sxy - sx * sy / m, vx = sxx - sx * sx / m, vy = syy - sy * sy / m;
    const double slope = cov / vx;
    f.tau = std::exp(slope);
    f.r2 = vy > 0.0 ? cov * cov / (vx * vy) : 1.0;
    for (int n = 1; n <= m; ++n) f.K = std::max(f.K, std::abs(c[n]) / std::pow(f.tau, n));
    return f;
}

// C_n = sum_i phi_i [(L/lambda)^n (psi h)]_i nu_i - (int phi dmu)(int psi dmu).
inline CorrelationSeries correlation(const SpectralData& d, const DiscretizedOperator& op, const GridFunction& phi_obs,
                                     const GridFunction& psi_obs, int n_max, double noise_floor = 1e-13) {
    CorrelationSeries s;
    s.n_max = n_max;
    s.mean_phi = phi_obs.values().dot(d.mu);
    s.mean_psi = psi_obs.values().dot(d.mu);
    const Eigen::VectorXd w = phi_obs.values().cwiseProduct(d.nu);
    Eigen::VectorXd g = psi_obs.values().cwiseProduct(d.h.values());
    const double mm = s.mean_phi * s.mean_psi;
    s.values.reserve(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        s.values.push_back(w.dot(g) - mm);
        if (n < n_max) g = op.matrix() * g / d.lambda;
    }
    const DecayFit f = fit_decay(s.values, noise_floor);
    s.tau_hat = f.tau;
    s.K_hat = f.K;
    s.fit_quality = f.r2;
    s.fit_points = f.points;
    return s;
}

struct CltReport {
    double sigma2 = 0.0;
    int truncation = 0;  // n*
    double tail_bound = 0.0;
    double ks_distance = NAN;
    long sample_count = 0;
    int birkhoff_length = 0;
    double tau_hat = 0.0;
    double K_hat = 0.0;
    double mean = 0.0;
    std::vector<double> correlations;
};

// sigma^2 = C_0 + 2 sum_{n=1}^{n*} C_n for the centred observable, with n*
// the first index whose geometric tail K tau^{n*+1}/(1 - tau) is below
// tail_tol. The bound is reported; it is not added to the sum.
inline CltReport clt_variance(const SpectralData& d, const DiscretizedOperator& op, const GridFunction& phi_obs,
                              int n_max = 200, double tail_tol = 1e-10, double noise_floor = 1e-13) {
    CltReport r;
    r.mean = phi_obs.values().dot(d.mu);
    const GridFunction psi(phi_obs.kind(), phi_obs.values().array() - r.mean);
    CorrelationSeries c = correlation(d, op, psi, psi, n_max, noise_floor);
    if (!(c.tau_hat < 1.0)) throw DivergentSeries("fitted correlation rate is not below 1");
    auto tail = [&](int n) { return c.K_hat * std::pow(c.tau_hat, n + 1) / (1.0 - c.tau_hat); };
    int nstar = std::max(c.fit_points, 1);
    while (tail(nstar) >= tail_tol) {
        ++nstar;
        if (nstar > 100000) throw DivergentSeries("correlation tail not below tolerance within 1e5 terms");
    }
    if (nstar > n_max) c = correlation(d, op, psi, psi, nstar, noise_floor);
    double s = c.values[0];
    for (int n = 1; n <= nstar; ++n) s += 2.0 * c.values[n];
    r.sigma2 = s;
    r.truncation = nstar;
    r.tail_bound = std::max(tail(nstar), noise_floor);
    r.tau_hat = c.tau_hat;
    r.K_hat = c.K_hat;
    r.correlations.assign(c.values.begin(), c.values.begin() + std::min<std::size_t>(c.values.size(), nstar + 1));
    return r;
}

// Draws points from mu and runs orbits backwards: given x_{k+1} = w, the
// preimage y_b is chosen with probability proportional to
// exp(phi(y_b)) h(y_b). A backward path x_n, ..., x_0 is distributed as a
// forward orbit started in mu, and inverse branches are contractions, so
// long orbits stay accurate in floating point (forward doubling orbits
// collapse to 0 after about 50 steps).
//
// Branch probabilities and inverse-branch starting guesses are tabulated on
// a uniform grid in w and interpolated linearly; the chosen preimage is then
// polished to full precision. The probability interpolation error is
// O(table^-2), far below Monte-Carlo noise at the default size.
class MuSampler {
public:
    static constexpr int max_degree = 8;

    MuSampler(const DiscretizedOperator& op, const SpectralData& d, int table = 1 << 16)
        : map_(op.map_ptr()), n_(op.resolution()), table_(table), deg_(op.map().degree()) {
        if (deg_ > max_degree) throw ConfigError("backward sampler supports at most 8 branches");
        cdf_.resize(n_);
        double acc = 0.0;
        for (int i = 0; i < n_; ++i) cdf_[i] = (acc += std::max(d.mu[i], 0.0));
        for (double& c : cdf_) c /= acc;
        cdf_.back() = 1.0;
        const Potential& pot = op.potential();
        guess_.assign(std::size_t(deg_) * (table_ + 1), 0.0);
        cum_.assign(std::size_t(deg_) * (table_ + 1), 0.0);
        for (int k = 0; k <= table_; ++k) {
            const double w = double(k) / table_;
            double p[max_degree], tot = 0.0;
            for (int b = 0; b < deg_; ++b) {
                const double y = map_->branches()[b].invert(w);
                guess_[std::size_t(b) * (table_ + 1) + k] = y;
                p[b] = std::max(std::exp(pot.eval(y, b)) * d.h.eval(y), 0.0);
                tot += p[b];
            }
            double c = 0.0;
            for (int b = 0; b < deg_; ++b) cum_[std::size_t(k) * deg_ + b] = (c += p[b] / tot);
        }
    }

    const PiecewiseMap& map() const { return *map_; }

    // x ~ mu: inverse CDF over cells, uniform within the cell.
    template <class Rng>
    double draw(Rng& rng) const {
        std::uniform_real_distribution<double> U(0.0, 1.0);
        const double u = U(rng);
        const int i = static_cast<int>(std::lower_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
        return (std::min(i, n_ - 1) + U(rng)) / n_;
    }

    template <class Rng>
    double step_back(double w, Rng& rng) const {
        const double pos = std::clamp(w, 0.0, 1.0) * table_;
        const int k = std::min(static_cast<int>(pos), table_ - 1);
        const double fr = pos - k;
        std::uniform_real_distribution<double> U(0.0, 1.0);
        const double u = U(rng);
        const double* c0 = &cum_[std::size_t(k) * deg_];
        const double* c1 = c0 + deg_;
        int b = 0;
        while (b + 1 < deg_ && u >= c0[b] + fr * (c1[b] - c0[b])) ++b;
        const double* g = &guess_[std::size_t(b) * (table_ + 1)];
        return map_->branches()[b].invert(w, g[k] + fr * (g[k + 1] - g[k]));
    }

    // xs[0..length] with xs[0] ~ mu and f(xs[k]) = xs[k+1].
    template <class Rng>
    void orbit(Rng& rng, int length, std::vector<double>& xs) const {
        xs.resize(length + 1);
        xs[length] = draw(rng);
        for (int k = length - 1; k >= 0; --k) xs[k] = step_back(xs[k + 1], rng);
    }

private:
    MapPtr map_;
    int n_;
    int table_;
    int deg_;
    std::vector<double> cdf_;
    std::vector<double> guess_;  // [branch][node]
    std::vector<double> cum_;    // [node][branch] cumulative probabilities
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Kolmogorov-Smirnov distance between a sample and N(0, sigma2). Sorts in place.
inline double ks_normal(std::vector<double>& z, double sigma2) {
    std::sort(z.begin(), z.end());
    const double s = std::sqrt(sigma2);
    const double N = static_cast<double>(z.size());
    double D = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double F = normal_cdf(z[k] / s);
        D = std::max({D, (k + 1) / N - F, F - k / N});
    }
    return D;
}

struct EmpiricalClt {
    double ks_distance = 0.0;
    long samples = 0;
    int birkhoff_length = 0;
    double sample_variance = 0.0;  // of the normalised sums
    std::vector<double> sums;      // normalised Birkhoff sums, sorted
};

inline constexpr long kSampleBlock = 1024;

// Normalised Birkhoff sums (1/sqrt n) sum_{j<n} (obs(f^j x) - mean) over
// `samples` mu-distributed starts, against N(0, sigma2).
inline EmpiricalClt clt_empirical(const MuSampler& sampler, const PointFn& obs, double mean, double sigma2,
                                  long samples, int birkhoff_n, std::uint64_t seed, int threads = 0) {
    if (!(sigma2 > 0.0)) throw PreconditionError("empirical CLT needs a positive limiting variance");
    EmpiricalClt r;
    r.samples = samples;
    r.birkhoff_length = birkhoff_n;
    r.sums.assign(samples, 0.0);
    const long blocks = (samples + kSampleBlock - 1) / kSampleBlock;
    const double scale = 1.0 / std::sqrt(double(birkhoff_n));
    parallel_blocks(blocks, threads, [&](long b) {
        auto rng = block_rng(seed, b);
        const long end = std::min(samples, (b + 1) * kSampleBlock);
        for (long s = b * kSampleBlock; s < end; ++s) {
            double x = sampler.draw(rng);
            double S = 0.0;
            for (int k = 0; k < birkhoff_n; ++k) {
                x = sampler.step_back(x, rng);
                S += obs(x) - mean;
            }
            r.sums[s] = S * scale;
        }
    });
    double m = 0.0, v = 0.0;
    for (double z : r.sums) m += z;
    m /= samples;
    for (double z : r.sums) v += (z - m) * (z - m);
    r.sample_variance = v / std::max<long>(samples - 1, 1);
    r.ks_distance = ks_normal(r.sums, sigma2);
    return r;
}

struct McCorrelation {
    std::vector<double> values, std_errors;
    long samples = 0;
};

// E[(phi(x_n) - m_phi)(psi(x_0) - m_psi)] over independent mu-orbits, with
// the supplied means treated as exact.
inline McCorrelation mc_correlation(const MuSampler& sampler, const PointFn& phi, const PointFn& psi, double m_phi,
                                    double m_psi, int n_max, long samples, std::uint64_t seed, int threads = 0) {
    const long blocks = (samples + kSampleBlock - 1) / kSampleBlock;
    std::vector<std::vector<double>> s1(blocks, std::vector<double>(n_max + 1, 0.0)), s2 = s1;
    parallel_blocks(blocks, threads, [&](long b) {
        auto rng = block_rng(seed, b);
        std::vector<double> xs;
        const long end = std::min(samples, (b + 1) * kSampleBlock);
        for (long s = b * kSampleBlock; s < end; ++s) {
            sampler.orbit(rng, n_max, xs);
            const double a = psi(xs[0]) - m_psi;
            for (int n = 0; n <= n_max; ++n) {
                const double z = (phi(xs[n]) - m_phi) * a;
                s1[b][n] += z;
                s2[b][n] += z * z;
            }
        }
    });
    McCorrelation r;
    r.samples = samples;
    for (int n = 0; n <= n_max; ++n) {
        double a = 0.0, q = 0.0;
        for (long b = 0; b < blocks; ++b) {
            a += s1[b][n];
            q += s2[b][n];
        }
        const double mean = a / samples;
        const double var = std::max(q / samples - mean * mean, 0.0) * samples / std::max<long>(samples - 1, 1);
        r.values.push_back(mean);
        r.std_errors.push_back(std::sqrt(var / samples));
    }
    return r;
}

struct GibbsEntry {
    double x = 0.0;
    int n = 0;
    double ball_measure = 0.0;
    double ratio = 0.0;
};

struct GibbsReport {
    double min_ratio = INFINITY, max_ratio = 0.0;
    int points_used = 0, points_rejected = 0;
    std::vector<GibbsEntry> entries;

    // max/min over entries with n in [n_lo, n_hi].
    double spread(int n_lo, int n_hi) const {
        double lo = INFINITY, hi = 0.0;
        for (const auto& e : entries)
            if (e.n >= n_lo && e.n <= n_hi) {
                lo = std::min(lo, e.ratio);
                hi = std::max(hi, e.ratio);
            }
        return hi > 0.0 ? hi / lo : NAN;
    }
};

// For each sampled x passing the non-uniform expansion proxy and each
// hyperbolic time n <= horizon, B is the pullback of B(f^n x, epsilon) along
// the itinerary of x, and the ratio is nu(B) / exp(S_n phi(x) - n log lambda).
//
// B is far below grid scale for moderate n, and nu is singular with respect
// to Lebesgue measure unless phi is cohomologous to -log|f'|, so cell masses
// cannot be prorated over B directly. Instead nu(B) is transported to level
// n with the eigenmeasure relation
//   nu(B) = lambda^{-n} int_{B(f^n x, eps)} exp(S_n phi(g^n w)) dnu(w),
// where g^n is the inverse branch along the itinerary; the integral is a sum
// over the cells meeting the ball, boundary cells prorated linearly.
inline GibbsReport gibbs_check(const PiecewiseMap& f, const Potential& pot, const SpectralData& d,
                               const std::vector<double>& sample, double epsilon, int horizon, double sigma,
                               int proxy_horizon = 2000) {
    GibbsReport r;
    const SpaceKind kind = f.space().kind;
    const int ncell = static_cast<int>(d.nu.size());
    const double loglam = std::log(d.lambda);
    for (double x : sample) {
        const OrbitExpansionTrace t = make_trace(f, x, std::max(horizon, proxy_horizon));
        if (!sigma_membership_proxy(t, sigma)) {
            ++r.points_rejected;
            continue;
        }
        ++r.points_used;
        double S = 0.0;
        for (int n = 1; n <= horizon; ++n) {
            S += pot.eval(t.points[n - 1], t.branches[n - 1]);
            if (!is_hyperbolic_time(t, n, sigma)) continue;
            double a = t.points[n] - epsilon, b = t.points[n] + epsilon;
            if (kind == SpaceKind::interval) {
                a = std::max(a, 0.0);
                b = std::min(b, 1.0);
            }
            const long ka = static_cast<long>(std::floor(a * ncell));
            const long kb = static_cast<long>(std::floor(b * ncell));
            double integral = 0.0;
            for (long k = ka; k <= kb; ++k) {
                const double lo = std::max(a, double(k) / ncell), hi = std::min(b, double(k + 1) / ncell);
                if (!(hi > lo)) continue;
                const double frac = (hi - lo) * ncell;
                double w = 0.5 * (lo + hi), s = 0.0;
                for (int j = n - 1; j >= 0; --j) {
                    const Preimage y = f.local_inverse(t.branches[j], w);
                    s += pot.eval(f.space().wrap(y.y), t.branches[j]);
                    w = y.y;
                }
                integral += frac * d.nu[static_cast<int>(((k % ncell) + ncell) % ncell)] * std::exp(s);
            }
            GibbsEntry e;
            e.x = x;
            e.n = n;
            e.ball_measure = integral * std::exp(-n * loglam);
            e.ratio = e.ball_measure / std::exp(S - n * loglam);
            r.min_ratio = std::min(r.min_ratio, e.ratio);
            r.max_ratio = std::max(r.max_ratio, e.ratio);
            r.entries.push_back(e);
        }
    }
    return r;
}

struct EntropyResult {
    double entropy = 0.0;
    double defect = 0.0;
    double integral_phi = 0.0;
};

// h_mu = log lambda - int phi dmu.
inline EntropyResult entropy_identity(const SpectralData& d, const DiscretizedOperator& op) {
    EntropyResult r;
    r.integral_phi = op.potential().on_grid(op.kind(), op.resolution()).values().dot(d.mu);
    r.entropy = std::log(d.lambda) - r.integral_phi;
    r.defect = std::abs(r.entropy + r.integral_phi - std::log(d.lambda));
    return r;
}

}  // namespace rpf
