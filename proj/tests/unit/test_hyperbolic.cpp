#include <gtest/gtest.h>

#include <random>

#include "rpf/hyperbolic.hpp"

using namespace rpf;

namespace {

// Direct definition: n is hyperbolic iff for every 1 <= k < n the product of
// |Df|^{-1} over the last k orbit points before time n is <= sigma^{k/2}.
bool brute_force(const PiecewiseMap& f, const OrbitExpansionTrace& t, int n, double sigma) {
    for (int k = 1; k < n; ++k) {
        double prod = 1.0;
        for (int j = n - k; j < n; ++j) prod /= std::abs(f.derivative(t.points[j], t.branches[j]));
        if (prod > std::pow(sigma, 0.5 * k) * (1 + 1e-12)) return false;
    }
    return true;
}

}  // namespace

TEST(HyperbolicTimes, SuffixSumsMatchBruteForce) {
    const MapPtr f = make_intermittent(0.5);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int o = 0; o < 10; ++o) {
        const OrbitExpansionTrace t = make_trace(*f, U(rng), 200);
        for (int n = 1; n <= 200; ++n) EXPECT_EQ(is_hyperbolic_time(t, n, 0.9), brute_force(*f, t, n, 0.9));
    }
}

TEST(HyperbolicTimes, DoublingEveryTime) {
    const MapPtr f = make_doubling();
    const OrbitExpansionTrace t = make_trace(*f, 0.1234, 300);
    EXPECT_EQ(hyperbolic_times(t, 0.9).size(), 300u);
    EXPECT_DOUBLE_EQ(hyperbolic_time_density(t, 0.9), 1.0);
    EXPECT_TRUE(sigma_membership_proxy(t, 0.9));
}

TEST(HyperbolicTimes, NeutralFixedPointHasOnlyTimeOne) {
    const MapPtr f = make_intermittent(0.5);
    const OrbitExpansionTrace t = make_trace(*f, 0.0, 300);
    const std::vector<int> h = hyperbolic_times(t, 0.9);
    ASSERT_EQ(h.size(), 1u);
    EXPECT_EQ(h[0], 1);
    EXPECT_FALSE(sigma_membership_proxy(t, 0.9));
}

TEST(HyperbolicTimes, FirstTimeAndMissingTimes) {
    const MapPtr f = make_doubling();
    EXPECT_EQ(first_hyperbolic_time_at_least(*f, 0.9, 4, {0.3}, 100), 4);
    // 2^{-1} > 0.1^{1/2}: no window can contract fast enough.
    EXPECT_THROW(first_hyperbolic_time_at_least(*f, 0.1, 2, {0.3}, 100), NoHyperbolicTime);
}

TEST(Gamma, FormulaAndStarViolation) {
    EXPECT_NEAR(gamma_constant(0.9, 0.5, 2, 4), 0.2025, 1e-15);
    EXPECT_NEAR(gamma_constant(0.8, 1.0, 1, 5), std::pow(0.8, 1.5) * 0.8, 1e-15);
    EXPECT_THROW(gamma_constant(0.9, 1.2, 1, 2), StarViolation);
}

// Pre-balls at hyperbolic times contract backwards at rate sigma^{k/2}, at
// the default cone radius and at a radius small enough for distortion to
// vanish.
TEST(Preball, ContractionAtEveryHyperbolicTime) {
    for (const MapPtr& f : {make_doubling(), make_intermittent(0.5)}) {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        int checked = 0;
        for (int o = 0; o < 10; ++o) {
            const OrbitExpansionTrace t = make_trace(*f, U(rng), 60);
            for (int n : hyperbolic_times(t, 0.9))
                for (double delta : {0.25, 1e-6}) {
                    const PreballCheck c = preball_contraction(*f, t, n, 0.9, delta);
                    EXPECT_TRUE(c.passes()) << "n " << n << " delta " << delta << " ratio " << c.worst_ratio;
                    ++checked;
                }
        }
        EXPECT_GT(checked, 10);
    }
}
