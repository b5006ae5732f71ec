#include <gtest/gtest.h>

#include <random>

#include "rpf/statistics.hpp"

using namespace rpf;

namespace {

GridFunction sample(SpaceKind k, int n, const PointFn& f) { return GridFunction::sample(k, n, f); }

const PointFn cos2pi = [](double x) { return std::cos(2 * M_PI * x); };

}  // namespace

TEST(FitDecay, RecoversSyntheticGeometricSeries) {
    std::vector<double> c;
    for (int n = 0; n <= 30; ++n) c.push_back(3.0 * std::pow(0.6, n));
    const DecayFit f = fit_decay(c, 1e-13);
    EXPECT_NEAR(f.tau, 0.6, 1e-12);
    EXPECT_NEAR(f.K, 3.0, 1e-10);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    EXPECT_EQ(f.points, 30);
    // Values at the floor end the fitted run.
    c[5] = 0.0;
    EXPECT_EQ(fit_decay(c, 1e-13).points, 4);
    EXPECT_EQ(fit_decay({1.0, 0.0, 0.0}, 1e-13).tau, 0.0);
}

// For the doubling map with Lebesgue measure, cos 2 pi x is orthogonal to
// its iterates: C_0 = 1/2 and C_n = 0.
TEST(Correlation, DoublingCosineIsUncorrelated) {
    DiscretizedOperator op(make_doubling(), Potential::constant(0.0), 4096);
    const SpectralData d = power_iterate(op);
    const GridFunction g = sample(SpaceKind::circle, 4096, cos2pi);
    const CorrelationSeries s = correlation(d, op, g, g, 20);
    EXPECT_NEAR(s.values[0], 0.5, 1e-12);
    for (int n = 1; n <= 20; ++n) EXPECT_NEAR(s.values[n], 0.0, 1e-12);
    const CltReport r = clt_variance(d, op, g);
    EXPECT_NEAR(r.sigma2, 0.5, 1e-10);
}

// x on the interval under the doubling-like linear map with uniform
// measure: C_n = 2^{-n}/12 and sigma^2 = 1/12 (1 + 2) = 1/4.
TEST(Correlation, LinearMapIdentityObservableClosedForm) {
    const MapPtr f = make_piecewise_linear({0.0, 0.5, 1.0}, SpaceKind::interval);
    DiscretizedOperator op(f, Potential::constant(0.0), 4096);
    const SpectralData d = power_iterate(op);
    const GridFunction g = sample(SpaceKind::interval, 4096, [](double x) { return x; });
    const CorrelationSeries s = correlation(d, op, g, g, 10);
    for (int n = 0; n <= 10; ++n) EXPECT_NEAR(s.values[n], std::pow(0.5, n) / 12.0, 2e-7) << n;
    EXPECT_NEAR(s.tau_hat, 0.5, 1e-3);
    EXPECT_NEAR(clt_variance(d, op, g).sigma2, 0.25, 1e-6);
}

TEST(Correlation, CoboundaryHasSmallVariance) {
    const MapPtr f = make_perturbed_expanding(0.3);
    DiscretizedOperator op(f, Potential::geometric(f, 0.5), 8192);
    const SpectralData d = power_iterate(op);
    const GridFunction g = sample(SpaceKind::circle, 8192, [&](double x) { return cos2pi(f->evaluate(x)) - cos2pi(x); });
    EXPECT_LT(std::abs(clt_variance(d, op, g).sigma2), 1e-6);
}

TEST(Correlation, IntermittentRateTracksGap) {
    const MapPtr f = make_intermittent(0.5);
    DiscretizedOperator op(f, Potential::geometric(f, 0.1), 2048);
    const SpectralData d = power_iterate(op);
    const GridFunction g = sample(SpaceKind::interval, 2048, cos2pi);
    const CorrelationSeries s = correlation(d, op, g, g, 60);
    EXPECT_LE(s.tau_hat, d.gap_ratio + 0.05);
    for (int n = 1; n <= 60; ++n) EXPECT_LE(std::abs(s.values[n]), s.K_hat * std::pow(s.tau_hat, n) * 1.000001 + 1e-13);
}

TEST(Normal, CdfAndKs) {
    EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
    EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
    // Exact mid-quantiles have KS distance 1/(2N).
    std::vector<double> z;
    const int N = 1000;
    for (int k = 0; k < N; ++k) {
        double lo = -10, hi = 10, target = (k + 0.5) / N;
        for (int it = 0; it < 100; ++it) {
            const double m = 0.5 * (lo + hi);
            (normal_cdf(m) < target ? lo : hi) = m;
        }
        z.push_back(0.5 * (lo + hi));
    }
    EXPECT_NEAR(ks_normal(z, 1.0), 0.5 / N, 1e-9);
}

TEST(MuSampler, BackwardStepsInvertTheMapAndDrawsFollowMu) {
    const MapPtr f = make_intermittent(0.5);
    DiscretizedOperator op(f, Potential::geometric(f, 0.1), 1024);
    const SpectralData d = power_iterate(op);
    const MuSampler s(op, d, 1 << 12);
    std::mt19937_64 rng(4);
    std::vector<double> xs;
    s.orbit(rng, 50, xs);
    for (int k = 0; k < 50; ++k) EXPECT_NEAR(f->evaluate(xs[k]), xs[k + 1], 1e-12);
    // Empirical mass of [0, 0.25) against mu.
    double target = 0.0;
    for (int i = 0; i < 256; ++i) target += d.mu[i];
    int hits = 0;
    const int M = 200000;
    for (int k = 0; k < M; ++k) hits += s.draw(rng) < 0.25;
    EXPECT_NEAR(double(hits) / M, target, 5.0 * std::sqrt(target * (1 - target) / M));
}

// The backward chain is stationary: after one step the time-0 marginal is mu again.
TEST(MuSampler, OneStepPreservesMu) {
    const MapPtr f = make_intermittent(0.5);
    DiscretizedOperator op(f, Potential::geometric(f, 0.1), 1024);
    const SpectralData d = power_iterate(op);
    const MuSampler s(op, d, 1 << 12);
    std::mt19937_64 rng(9);
    double target = 0.0;
    for (int i = 0; i < 256; ++i) target += d.mu[i];
    int hits = 0;
    const int M = 200000;
    for (int k = 0; k < M; ++k) hits += s.step_back(s.draw(rng), rng) < 0.25;
    EXPECT_NEAR(double(hits) / M, target, 5.0 * std::sqrt(target * (1 - target) / M));
}

TEST(Clt, EmpiricalAgreesAndIsThreadIndependent) {
    DiscretizedOperator op(make_doubling(), Potential::constant(0.0), 1024);
    const SpectralData d = power_iterate(op);
    const MuSampler s(op, d, 1 << 12);
    const EmpiricalClt a = clt_empirical(s, cos2pi, 0.0, 0.5, 5000, 500, 7, 1);
    const EmpiricalClt b = clt_empirical(s, cos2pi, 0.0, 0.5, 5000, 500, 7, 3);
    EXPECT_EQ(a.sums, b.sums);
    EXPECT_LT(a.ks_distance, 0.03);
    EXPECT_NEAR(a.sample_variance, 0.5, 0.05);
    EXPECT_THROW(clt_empirical(s, cos2pi, 0.0, 0.0, 10, 10, 1), PreconditionError);
}

TEST(McCorrelation, MatchesSpectralWithinStandardErrors) {
    const MapPtr f = make_intermittent(0.5);
    DiscretizedOperator op(f, Potential::geometric(f, 0.1), 2048);
    const SpectralData d = power_iterate(op);
    const GridFunction g = sample(SpaceKind::interval, 2048, cos2pi);
    const CorrelationSeries c = correlation(d, op, g, g, 6);
    const MuSampler s(op, d, 1 << 14);
    const McCorrelation m = mc_correlation(s, cos2pi, cos2pi, c.mean_phi, c.mean_psi, 6, 100000, 21, 2);
    for (int n = 0; n <= 6; ++n) EXPECT_LE(std::abs(m.values[n] - c.values[n]), 4.0 * m.std_errors[n]) << n;
}

// nu is Lebesgue and the Gibbs weight is 2^{-n}; the pulled-back ball has
// measure 2 epsilon 2^{-n}, so the ratio is exactly 2 epsilon.
TEST(Gibbs, DoublingRatioIsTwoEpsilon) {
    const MapPtr f = make_doubling();
    DiscretizedOperator op(f, Potential::constant(0.0), 1024);
    const SpectralData d = power_iterate(op);
    const GibbsReport g = gibbs_check(*f, Potential::constant(0.0), d, {0.1, 0.37, 0.71}, 0.125, 20, 0.9, 200);
    EXPECT_EQ(g.points_used, 3);
    EXPECT_EQ(g.entries.size(), 60u);
    EXPECT_NEAR(g.min_ratio, 0.25, 1e-12);
    EXPECT_NEAR(g.max_ratio, 0.25, 1e-12);
}

TEST(Gibbs, NeutralPointIsRejected) {
    const MapPtr f = make_intermittent(0.5);
    DiscretizedOperator op(f, Potential::geometric(f, 0.1), 512);
    const SpectralData d = power_iterate(op);
    const GibbsReport g = gibbs_check(*f, Potential::geometric(f, 0.1), d, {0.0}, 0.1, 10, 0.9, 200);
    EXPECT_EQ(g.points_rejected, 1);
    EXPECT_TRUE(g.entries.empty());
}

TEST(Entropy, DoublingConstantPotential) {
    for (double c : {0.0, 0.7, -1.2}) {
        DiscretizedOperator op(make_doubling(), Potential::constant(c), 256);
        const EntropyResult e = entropy_identity(power_iterate(op), op);
        EXPECT_NEAR(e.entropy, std::log(2.0), 1e-13);
        EXPECT_LT(e.defect, 1e-13);
    }
}
