#include <gtest/gtest.h>

#include <random>

#include "rpf/transfer.hpp"

using namespace rpf;

TEST(Grid, StencilInterpolatesLinearFunctionsExactly) {
    const GridFunction g = GridFunction::sample(SpaceKind::interval, 64, [](double x) { return 2.0 * x + 1.0; });
    for (double y : {0.1, 0.37, 0.5, 0.9})
        EXPECT_NEAR(g.eval(y), 2.0 * y + 1.0, 1e-14);
    // End cells extrapolate as constants.
    EXPECT_DOUBLE_EQ(g.eval(0.0), g[0]);
    const GridFunction c = GridFunction::sample(SpaceKind::circle, 64, [](double x) { return x; });
    // Periodic wrap between the last and first centre.
    EXPECT_NEAR(c.eval(0.0), 0.5 * (c[63] + c[0]), 1e-15);
}

TEST(Transfer, DoublingConstantPotentialIsExact) {
    DiscretizedOperator op(make_doubling(), Potential::constant(0.0), 1 << 12);
    const SpectralData d = power_iterate(op);
    EXPECT_NEAR(d.lambda, 2.0, 1e-12);
    EXPECT_NEAR(d.h.min(), 1.0, 1e-12);
    EXPECT_NEAR(d.h.max(), 1.0, 1e-12);
    EXPECT_NEAR(d.nu.maxCoeff() * 4096, 1.0, 1e-9);
    EXPECT_NEAR(d.nu.minCoeff() * 4096, 1.0, 1e-9);
    EXPECT_LT(d.residuals.eigen_h, 1e-12);
    EXPECT_LT(d.residuals.eigen_nu, 1e-12);
    EXPECT_NEAR(d.pressure(), std::log(2.0), 1e-12);
    EXPECT_NEAR(d.mu.sum(), 1.0, 1e-12);
}

// P(-log|f'|) = 0 for full-branch expanding maps: lambda = 1.
TEST(Transfer, GeometricPotentialAtTOneHasUnitEigenvalue) {
    const MapPtr lin = make_piecewise_linear({0.0, 0.3, 1.0}, SpaceKind::interval, {false, true});
    DiscretizedOperator a(lin, Potential::geometric(lin, 1.0), 1024);
    EXPECT_NEAR(power_iterate(a).lambda, 1.0, 1e-12);
    const MapPtr per = make_perturbed_expanding(0.3);
    DiscretizedOperator b(per, Potential::geometric(per, 1.0), 2048);
    EXPECT_NEAR(power_iterate(b).lambda, 1.0, 1e-6);
}

// For piecewise linear maps sum_b |Df_b|^{-t} is the exact pressure kernel:
// lambda(t) = sum_b len_b^t with h = 1.
TEST(Transfer, PiecewiseLinearPressureClosedForm) {
    const MapPtr f = make_piecewise_linear({0.0, 0.3, 1.0}, SpaceKind::circle);
    for (double t : {-0.5, 0.0, 0.4, 2.0}) {
        DiscretizedOperator op(f, Potential::geometric(f, t), 512);
        EXPECT_NEAR(power_iterate(op).lambda, std::pow(0.3, t) + std::pow(0.7, t), 1e-11) << "t " << t;
    }
}

TEST(Transfer, ApplyModesAgree) {
    const MapPtr f = make_intermittent(0.5);
    DiscretizedOperator op(f, Potential::geometric(f, 0.1), 512);
    const GridFunction psi =
        GridFunction::sample(SpaceKind::interval, 512, [](double x) { return 1.0 + 0.5 * std::cos(3 * x); });
    const GridFunction a = op.apply(psi), b = op.apply(psi, ApplyMode::matrix);
    EXPECT_LT((a.values() - b.values()).cwiseAbs().maxCoeff(), 1e-13);
    // n-step histories versus iterating the one-step operator differ by
    // interpolation error only. Constant extrapolation in the end cells makes
    // the sup gap first order in 1/n; away from them it is second order.
    struct Gap {
        double sup, mean;
    };
    auto gap = [&](int n) {
        DiscretizedOperator o(f, Potential::geometric(f, 0.1), n);
        const GridFunction p =
            GridFunction::sample(SpaceKind::interval, n, [](double x) { return 1.0 + 0.5 * std::cos(3 * x); });
        const GridFunction h = o.apply_n(p, 4, PowerMethod::histories);
        const GridFunction it = o.apply_n(p, 4, PowerMethod::iterated);
        const Eigen::VectorXd d = (h.values() - it.values()).cwiseAbs() / h.max();
        return Gap{d.maxCoeff(), d.mean()};
    };
    const Gap coarse = gap(256), fine = gap(1024);
    EXPECT_LT(coarse.sup, 1e-3);
    EXPECT_LT(fine.sup, coarse.sup / 3.0);
    EXPECT_LT(fine.mean, coarse.mean / 8.0);
    EXPECT_THROW(op.apply_n(psi, 21, PowerMethod::histories), BranchExplosion);
}

// L((u o f) g) = u L(g), exactly on preimage histories.
TEST(Transfer, PullOutProperty) {
    const MapPtr f = make_perturbed_expanding(0.2);
    DiscretizedOperator op(f, Potential::geometric(f, 0.7), 256);
    auto u = [](double x) { return 2.0 + std::sin(2 * M_PI * x); };
    auto g = [](double x) { return 1.0 + x * x; };
    const GridFunction lhs = op.apply_histories(1, [&](double y) { return u(f->evaluate(y)) * g(y); });
    const GridFunction lg = op.apply_histories(1, g);
    for (int i = 0; i < 256; ++i) EXPECT_NEAR(lhs[i], u(op.center(i)) * lg[i], 1e-12);
}

TEST(Transfer, EigenRelationsAndBounds) {
    const MapPtr f = make_intermittent(0.5);
    DiscretizedOperator op(f, Potential::geometric(f, 0.1), 2048);
    const SpectralData d = power_iterate(op);
    EXPECT_LT(d.residuals.eigen_h, 1e-11);
    EXPECT_LT(d.residuals.eigen_nu, 1e-11);
    EXPECT_NEAR(d.nu.sum(), 1.0, 1e-14);
    EXPECT_NEAR(d.h.values().dot(d.nu), 1.0, 1e-14);
    EXPECT_GT(d.h.min(), 0.0);
    EXPECT_GE(d.nu.minCoeff(), 0.0);
    // Dual pairing: nu(L psi) = lambda nu(psi).
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Eigen::VectorXd psi(2048);
    for (auto& v : psi) v = U(rng);
    EXPECT_NEAR(d.nu.dot(op.apply(psi)), d.lambda * d.nu.dot(psi), 1e-11);
    // deg e^{inf phi} <= lambda <= deg e^{sup phi}.
    EXPECT_GE(d.lambda, 2.0 * std::pow(2.5, -0.1));
    EXPECT_LE(d.lambda, 2.0);
    EXPECT_LT(d.gap_ratio, 1.0);
}

TEST(Transfer, WarmStartReachesTheSameEigendata) {
    const MapPtr f = make_intermittent(0.5);
    DiscretizedOperator a(f, Potential::geometric(f, 0.1), 512), b(f, Potential::geometric(f, 0.12), 512);
    const SpectralData da = power_iterate(a);
    PowerOptions o;
    o.warm_start = da.h.values();
    o.warm_nu = da.nu;
    const SpectralData warm = power_iterate(b, o), cold = power_iterate(b);
    EXPECT_NEAR(warm.lambda, cold.lambda, 1e-12);
    EXPECT_LT((warm.h.values() - cold.h.values()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(warm.iterations, cold.iterations);
}
