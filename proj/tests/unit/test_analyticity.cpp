#include <gtest/gtest.h>

#include "rpf/analyticity.hpp"

using namespace rpf;

TEST(Sweep, DoublingPressureIsLinear) {
    const MapPtr f = make_doubling();
    const ParameterSweep s = sweep(f, geometric_family(f), -0.5, 0.5, 21, 256);
    for (const auto& p : s.points) {
        ASSERT_TRUE(p.converged);
        EXPECT_NEAR(p.pressure, (1.0 - p.t) * std::log(2.0), 1e-12);
        EXPECT_LE(p.lower_bound, p.lambda * (1 + 1e-14));
        EXPECT_GE(p.upper_bound, p.lambda * (1 - 1e-14));
    }
    for (double v : s.differences[2]) EXPECT_LT(std::abs(v), 1e-10);
    const GridFunction dphi = GridFunction::sample(SpaceKind::circle, 256, [](double) { return -std::log(2.0); });
    EXPECT_LT(derivative_check(s, dphi.values()).max_defect, 1e-12);
}

TEST(Sweep, WarmAndColdAgree) {
    const MapPtr f = make_intermittent(0.5);
    const ParameterSweep w = sweep(f, geometric_family(f), -0.1, 0.1, 5, 256, true);
    const ParameterSweep c = sweep(f, geometric_family(f), -0.1, 0.1, 5, 256, false, "geometric", 2);
    for (std::size_t i = 0; i < w.points.size(); ++i) EXPECT_NEAR(w.points[i].pressure, c.points[i].pressure, 1e-12);
    EXPECT_EQ(w.h_step_norm.size(), 4u);
    EXPECT_THROW(sweep(f, geometric_family(f), 0.1, -0.1, 5, 64), ConfigError);
}

TEST(Differences, ExactOnPolynomials) {
    auto cubic = [](double t) { return 2.0 * t * t * t - t + 1.0; };
    EXPECT_NEAR(centred_difference(cubic, 0.3, 0.01, 1), 6.0 * 0.09 - 1.0 + 2.0 * 0.0001, 1e-9);
    EXPECT_NEAR(centred_difference(cubic, 0.3, 0.01, 2), 12.0 * 0.3, 1e-7);
    EXPECT_NEAR(centred_difference(cubic, 0.3, 0.01, 3), 12.0, 1e-4);
    EXPECT_NEAR(centred_difference([](double t) { return t * t * t * t; }, 0.0, 0.1, 4), 24.0, 1e-9);
    EXPECT_THROW(centred_difference(cubic, 0.0, 0.1, 5), ConfigError);
}

TEST(Smoothness, AnalyticCurvePassesKinkFails) {
    const SmoothnessCertificate s = smoothness_certificate([](double t) { return std::log(1.0 + std::exp(t)); }, 0.1);
    EXPECT_TRUE(s.all_pass());
    const SmoothnessCertificate k = kinked_control();
    EXPECT_FALSE(k.orders[1].passes);
    EXPECT_NEAR(k.orders[1].ratio, 0.5, 1e-12);
    EXPECT_FALSE(k.all_pass());
}

TEST(Smoothness, SweepCurveLookup) {
    const MapPtr f = make_doubling();
    const ParameterSweep s = sweep(f, geometric_family(f), -0.1, 0.1, 21, 128);
    EXPECT_NEAR(sweep_curve(s)(0.05), 0.95 * std::log(2.0), 1e-12);
    EXPECT_THROW(sweep_curve(s)(0.055), ConfigError);
    EXPECT_TRUE(smoothness_certificate(s, 0.0, {0.04, 0.02, 0.01}).all_pass());
}

TEST(Derivative, RichardsonOfSignedDefects) {
    DerivativeCheck a, b, c;
    for (auto* d : {&a, &b, &c}) {
        d->t = {0.0};
        d->dP_formula = {1.0};
    }
    // Offset 1e-5 plus c dt^2 with c = 2, for dt = 0.04, 0.02, 0.01.
    a.dP_fd = {1.0 + 1e-5 + 2 * 0.0016};
    b.dP_fd = {1.0 + 1e-5 + 2 * 0.0004};
    c.dP_fd = {1.0 + 1e-5 + 2 * 0.0001};
    EXPECT_NEAR(derivative_richardson(a, b, c, 0.0), 4.0, 1e-9);
    EXPECT_TRUE(std::isnan(a.signed_defect_at(0.5)));
}

// On a gapped perturbation the Neumann series converges at the measured
// rate ||dL R0||, which is bounded by ||dL|| ||R0||.
TEST(ResolventSeries, GeometricConvergenceAndPreconditionFlag) {
    const MapPtr f = make_perturbed_expanding(0.3);
    const Potential phi0 = Potential::geometric(f, 0.5);
    const Potential psi = Potential::custom([](double x, int) { return std::cos(2 * M_PI * x); }, 1.0);
    DiscretizedOperator op(f, phi0, 128);
    const SpectralData d = power_iterate(op);
    const cd z = d.lambda + 0.5 * (1 - d.gap_ratio) * d.lambda * std::polar(1.0, 0.3);
    const SeriesCheck s = resolvent_series_check(f, phi0, psi, {0.0, 0.01, 0.03, 50.0}, 128, z);
    ASSERT_EQ(s.rows.size(), 4u);
    EXPECT_LT(s.rows[0].errors[0], 1e-13);
    for (int i = 1; i <= 2; ++i) {
        const SeriesRow& r = s.rows[i];
        ASSERT_TRUE(r.precondition_ok);
        EXPECT_LE(r.norm_T, r.norm_product * (1 + 1e-12));
        EXPECT_LT(r.errors.back(), 1e-12);
        EXPECT_LE(r.measured_ratio, r.norm_T * 1.1);
    }
    EXPECT_FALSE(s.rows[3].precondition_ok);
    EXPECT_TRUE(s.rows[3].errors.empty());
}

TEST(ProjectionIdentities, HoldThroughTheContour) {
    const MapPtr f = make_perturbed_expanding(0.3);
    DiscretizedOperator op(f, Potential::geometric(f, 0.5), 256);
    const SpectralData d = power_iterate(op);
    const ProjectionIdentities r = projection_identities(op, d);
    EXPECT_LT(r.lambda_defect, 1e-8);
    EXPECT_LT(r.h_defect, 1e-8);
    EXPECT_LT(r.nu_defect, 1e-8);
}
