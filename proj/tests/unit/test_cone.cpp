#include <gtest/gtest.h>

#include <random>

#include "rpf/cone.hpp"

using namespace rpf;

namespace {

GridFunction member(std::mt19937_64& rng, SpaceKind kind, int n, const ConeParams& p, double frac) {
    return random_cone_member(rng, kind, n, p, frac * p.k);
}

}  // namespace

TEST(Cone, MembershipRatio) {
    const ConeParams p{5.0, 0.25, 0.5};
    EXPECT_TRUE(cone_membership(GridFunction(SpaceKind::circle, 128, 3.0), p).member);
    EXPECT_EQ(cone_membership(GridFunction(SpaceKind::circle, 128, 3.0), p).ratio, 0.0);
    EXPECT_FALSE(cone_membership(GridFunction(SpaceKind::circle, 128, -1.0), p).member);
    std::mt19937_64 rng(1);
    const GridFunction g = member(rng, SpaceKind::circle, 256, p, 0.5);
    EXPECT_NEAR(cone_membership(g, p).ratio, 2.5, 1e-6);
}

TEST(Cone, DefaultK) {
    EXPECT_DOUBLE_EQ(default_cone_k(0.0, 0.0, 2, 6), 640.0);
    EXPECT_DOUBLE_EQ(default_cone_k(3.0, 0.0, 2, 1), 60.0);
}

TEST(Theta, ScalingInvarianceAndBoundary) {
    const ConeParams p{10.0, 0.25, 0.5};
    std::mt19937_64 rng(2);
    const GridFunction a = member(rng, SpaceKind::circle, 256, p, 0.4);
    const GridFunction b(SpaceKind::circle, a.values() * 3.7);
    EXPECT_NEAR(theta_distance(a, b, p).theta, 0.0, 1e-12);
    const GridFunction edge = member(rng, SpaceKind::circle, 256, p, 1.0);
    EXPECT_THROW(theta_distance(a, edge, p), BoundaryOfCone);
}

TEST(Theta, MetricProperties) {
    const ConeParams p{10.0, 0.25, 0.5};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.1, 0.8);
    for (int t = 0; t < 15; ++t) {
        const GridFunction a = member(rng, SpaceKind::interval, 256, p, U(rng));
        const GridFunction b = member(rng, SpaceKind::interval, 256, p, U(rng));
        const GridFunction c = member(rng, SpaceKind::interval, 256, p, U(rng));
        const double ab = theta_distance(a, b, p).theta, ba = theta_distance(b, a, p).theta;
        EXPECT_NEAR(ab, ba, 1e-9 * (1 + ab));
        const double ac = theta_distance(a, c, p).theta, bc = theta_distance(b, c, p).theta;
        EXPECT_LE(ac, ab + bc + 1e-9);
        // Larger k means a larger cone and a smaller distance.
        const ConeParams q{20.0, 0.25, 0.5};
        EXPECT_LE(theta_distance(a, b, q).theta, ab + 1e-12);
    }
}

// The ratio at z with the pair term negligible is psi(z)/phi(z), so the
// extremes A and B bracket the pointwise ratio range.
TEST(Theta, SandwichInequality) {
    const ConeParams p{10.0, 0.25, 0.5};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.1, 0.8);
    for (int t = 0; t < 40; ++t) {
        const GridFunction a = member(rng, SpaceKind::circle, 256, p, U(rng));
        const GridFunction b = member(rng, SpaceKind::circle, 256, p, U(rng));
        const ThetaResult r = theta_distance(a, b, p);
        const Eigen::ArrayXd q = b.values().array() / a.values().array();
        EXPECT_LE(r.A, q.minCoeff() * (1 + 1e-12));
        EXPECT_GE(r.B, q.maxCoeff() * (1 - 1e-12));
    }
}

TEST(Cone, SupInfBoundOnMembers) {
    const ConeParams p{50.0, 0.1, 0.5};
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const GridFunction g = member(rng, SpaceKind::interval, 512, p, 0.9);
        EXPECT_TRUE(sup_inf_bound_check(g, p, 1.0).pass);
    }
}

TEST(Cone, DoublingInvarianceAndContraction) {
    const MapPtr f = make_doubling();
    DiscretizedOperator op(f, Potential::constant(0.0), 512);
    const ConeParams p{640.0, 0.25, 0.5};
    const double lambda_hat = (63.0 / 8.0 + 0.45) / 64.0;
    const InvarianceResult inv = cone_invariance_check(op, p, 6, 8, lambda_hat, 1);
    EXPECT_TRUE(inv.all_mapped);
    EXPECT_LE(inv.worst_ratio, lambda_hat * 1.1);
    const ContractionResult c = contraction_check(op, p, 6, 8, 2);
    EXPECT_TRUE(c.passes());
    EXPECT_LT(c.max_observed_factor, 1.0);
}
