#include <gtest/gtest.h>

#include <random>

#include "rpf/dynamics.hpp"

using namespace rpf;

TEST(PhaseSpace, CircleDistanceWrapsAround) {
    PhaseSpace c{SpaceKind::circle};
    EXPECT_NEAR(c.distance(0.05, 0.95), 0.1, 1e-15);
    EXPECT_DOUBLE_EQ(c.distance(0.2, 0.7), 0.5);
    EXPECT_DOUBLE_EQ(c.diameter(), 0.5);
    PhaseSpace i{SpaceKind::interval};
    EXPECT_NEAR(i.distance(0.05, 0.95), 0.9, 1e-15);
    EXPECT_DOUBLE_EQ(c.wrap(1.25), 0.25);
    EXPECT_DOUBLE_EQ(c.wrap(-0.25), 0.75);
    EXPECT_DOUBLE_EQ(i.wrap(1.5), 1.0);
}

TEST(Doubling, MatchesClosedForm) {
    const MapPtr f = make_doubling();
    EXPECT_EQ(f->degree(), 2);
    EXPECT_DOUBLE_EQ(f->theta(), 0.5);
    for (double x : {0.0, 0.1, 0.3, 0.5, 0.74, 0.999}) {
        EXPECT_DOUBLE_EQ(f->evaluate(x), std::fmod(2.0 * x, 1.0));
        EXPECT_DOUBLE_EQ(f->derivative(x), 2.0);
    }
    const auto pre = f->preimages(0.3);
    ASSERT_EQ(pre.size(), 2u);
    EXPECT_DOUBLE_EQ(pre[0].y, 0.15);
    EXPECT_DOUBLE_EQ(pre[1].y, 0.65);
}

TEST(Intermittent, BranchesAreFullAndNeutralAtZero) {
    for (double beta : {0.5, 0.3}) {
        const MapPtr f = make_intermittent(beta);
        const Branch& b0 = f->branches()[0];
        EXPECT_NEAR(b0.forward(0.5), 1.0, 1e-15);
        EXPECT_DOUBLE_EQ(b0.forward(0.0), 0.0);
        EXPECT_DOUBLE_EQ(f->derivative(0.0), 1.0);
        EXPECT_DOUBLE_EQ(f->theta(), 1.0);
        // Derivative against a centred difference.
        for (double x : {0.05, 0.2, 0.4}) {
            const double h = 1e-6;
            EXPECT_NEAR(f->derivative(x), (b0.forward(x + h) - b0.forward(x - h)) / (2 * h), 1e-7);
        }
    }
    EXPECT_THROW(make_intermittent(1.0), ConfigError);
    EXPECT_THROW(make_intermittent(0.0), ConfigError);
}

TEST(Intermittent, InverseBranchesRoundTrip) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (double beta : {0.5, 0.3, 0.8}) {
        const MapPtr f = make_intermittent(beta);
        for (int k = 0; k < 500; ++k) {
            const double w = U(rng);
            for (const Preimage& p : f->preimages(w)) {
                EXPECT_EQ(f->branch_of(p.y), p.branch);
                EXPECT_NEAR(f->branches()[p.branch].forward(p.y), w, 1e-12);
            }
        }
    }
}

TEST(PerturbedExpanding, ThetaAndDerivative) {
    const MapPtr f = make_perturbed_expanding(0.3);
    EXPECT_DOUBLE_EQ(f->theta(), 1.0 / 1.7);
    EXPECT_NEAR(f->sampled_theta(1 << 12), 1.0 / 1.7, 1e-9);
    EXPECT_NEAR(f->evaluate(0.25), std::fmod(0.5 + 0.3 / (2 * M_PI), 1.0), 1e-15);
    for (double w : {0.0, 0.3, 0.9})
        for (const Preimage& p : f->preimages(w)) EXPECT_NEAR(f->evaluate(p.y), w, 1e-12);
    EXPECT_THROW(make_perturbed_expanding(1.0), ConfigError);
}

TEST(PiecewiseLinear, UnevenBranchesAndOrientation) {
    const MapPtr f = make_piecewise_linear({0.0, 0.25, 1.0}, SpaceKind::interval, {false, true});
    EXPECT_DOUBLE_EQ(f->theta(), 0.75);
    EXPECT_DOUBLE_EQ(f->evaluate(0.125), 0.5);
    EXPECT_DOUBLE_EQ(f->evaluate(0.25), 1.0);
    EXPECT_DOUBLE_EQ(f->evaluate(1.0), 0.0);
    EXPECT_DOUBLE_EQ(f->derivative(0.5), -4.0 / 3.0);
    EXPECT_THROW(make_piecewise_linear({0.0, 0.5, 1.0}, SpaceKind::circle, {false, true}), ConfigError);
    EXPECT_THROW(make_piecewise_linear({0.0, 0.6, 0.5, 1.0}, SpaceKind::interval), ConfigError);
    EXPECT_THROW(make_piecewise_linear({0.0, 1.0}, SpaceKind::interval), ConfigError);
}

TEST(LocalInverse, CircleLiftIsContinuousAcrossZero) {
    const MapPtr f = make_doubling();
    // Inverse branch 1 near w = 0 continues below zero without jumping.
    const Preimage a = f->local_inverse(1, 0.01), b = f->local_inverse(1, -0.01);
    EXPECT_NEAR(a.y - b.y, 0.01, 1e-15);
    EXPECT_EQ(f->branch_of(f->space().wrap(b.y)), b.branch);
    for (double w : {-0.3, 0.2, 1.1})
        for (int br = 0; br < 2; ++br) {
            const Preimage p = f->local_inverse(br, w);
            EXPECT_NEAR(2.0 * p.y, w + br, 1e-14);
        }
}

TEST(IntervalSet, BallsWrapOnTheCircle) {
    PhaseSpace c{SpaceKind::circle};
    const IntervalSet s = IntervalSet::ball(c, 0.05, 0.1);
    ASSERT_EQ(s.pieces().size(), 2u);
    EXPECT_NEAR(s.length(), 0.2, 1e-15);
    EXPECT_TRUE(IntervalSet::ball(c, 0.3, 0.6).covers(SpaceKind::circle));
    PhaseSpace i{SpaceKind::interval};
    const IntervalSet t = IntervalSet::ball(i, 0.05, 0.1);
    EXPECT_NEAR(t.length(), 0.15, 1e-15);
    EXPECT_TRUE(t.pieces()[0].lo_closed);
}

TEST(IntervalSet, DoublingImageDoublesLength) {
    const MapPtr f = make_doubling();
    const IntervalSet s = IntervalSet::ball(f->space(), 0.3, 0.05);
    EXPECT_NEAR(s.image(*f).length(), 0.2, 1e-15);
    // An open half-circle maps onto the circle minus one point.
    const IntervalSet h = IntervalSet::ball(f->space(), 0.4, 0.25).image(*f);
    EXPECT_FALSE(h.covers(SpaceKind::circle));
    EXPECT_TRUE(h.image(*f).covers(SpaceKind::circle));
}

// Open arcs of length 2 delta double under the doubling map, so the mixing
// time is the least n with 2 delta 2^n > 1.
TEST(MixingTime, DoublingClosedForm) {
    const MapPtr f = make_doubling();
    for (double delta : {0.25, 0.1, 0.03, 0.01}) {
        int expect = 0;
        while (!(2.0 * delta * std::pow(2.0, expect) > 1.0)) ++expect;
        EXPECT_EQ(mixing_time(*f, delta, 256).n_tilde, expect) << "delta " << delta;
    }
}

TEST(MixingTime, IntermittentIsFiniteAndMonotoneInDelta) {
    const MapPtr f = make_intermittent(0.5);
    const int a = mixing_time(*f, 0.25, 256).n_tilde;
    const int b = mixing_time(*f, 0.05, 256).n_tilde;
    EXPECT_GE(a, 1);
    EXPECT_GE(b, a);
    EXPECT_THROW(mixing_time(*f, 0.001, 64, 3), NotMixingWithinCap);
}
