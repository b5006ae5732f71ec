#pragma once

// Uniform cell-centred grids and piecewise-linear grid functions.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>

#include "rpf/dynamics.hpp"

namespace rpf {

struct Stencil {
    int j0, j1;
    double w0, w1;
};

inline double cell_center(int i, int n) { return (i + 0.5) / n; }

// Linear interpolation between cell centres. Periodic on the circle; on the
// interval the end cells extrapolate as constants, which keeps weights >= 0.
inline Stencil stencil(SpaceKind kind, int n, double y) {
    const double u = y * n - 0.5;
    double fl = std::floor(u);
    double frac = u - fl;
    long long j = static_cast<long long>(fl);
    if (kind == SpaceKind::circle) {
        const long long jj = ((j % n) + n) % n;
        return {static_cast<int>(jj), static_cast<int>((jj + 1) % n), 1.0 - frac, frac};
    }
    if (j < 0) return {0, 0, 1.0, 0.0};
    if (j >= n - 1) return {n - 1, n - 1, 1.0, 0.0};
    return {static_cast<int>(j), static_cast<int>(j + 1), 1.0 - frac, frac};
}

class GridFunction {
public:
    GridFunction() = default;
    GridFunction(SpaceKind kind, Eigen::VectorXd values) : kind_(kind), v_(std::move(values)) {}
    GridFunction(SpaceKind kind, int n, double c) : kind_(kind), v_(Eigen::VectorXd::Constant(n, c)) {}

    static GridFunction sample(SpaceKind kind, int n, const std::function<double(double)>& f) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = f(cell_center(i, n));
        return {kind, std::move(v)};
    }

    SpaceKind kind() const { return kind_; }
    int resolution() const { return static_cast<int>(v_.size()); }
    const Eigen::VectorXd& values() const { return v_; }
    Eigen::VectorXd& values() { return v_; }
    double operator[](int i) const { return v_[i]; }
    double center(int i) const { return cell_center(i, resolution()); }

    double eval(double y) const {
        const Stencil s = stencil(kind_, resolution(), y);
        return s.w0 * v_[s.j0] + s.w1 * v_[s.j1];
    }

    double min() const { return v_.minCoeff(); }
    double max() const { return v_.maxCoeff(); }

private:
    SpaceKind kind_ = SpaceKind::circle;
    Eigen::VectorXd v_;
};

// Distance between centres i and j of an n-cell grid.
inline double grid_distance(SpaceKind kind, int n, int i, int j) {
    int d = std::abs(i - j);
    if (kind == SpaceKind::circle) d = std::min(d, n - d);
    return double(d) / n;
}

// max |v_i - v_j| / d(i,j)^alpha over pairs with 0 < d < radius. Pairs closer
// than one grid spacing do not exist, so the floor is automatic.
inline double grid_holder_seminorm(SpaceKind kind, const Eigen::VectorXd& v, double alpha, double radius) {
    const int n = static_cast<int>(v.size());
    const double max_sep = kind == SpaceKind::circle ? n / 2 : n - 1;
    // Largest index offset with offset/n < radius.
    double lim = std::isinf(radius) ? max_sep : std::ceil(radius * n) - 1.0;
    if (!std::isinf(radius) && (lim + 1.0) / n < radius) lim += 1.0;
    const int kmax = static_cast<int>(std::min(lim, max_sep));
    std::vector<double> inv_pow(kmax + 1, 0.0);
    for (int k = 1; k <= kmax; ++k) inv_pow[k] = std::pow(double(k) / n, -alpha);
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int k = 1; k <= kmax; ++k) {
            int j = i + k;
            if (kind == SpaceKind::circle) j %= n;
            else if (j >= n) break;
            best = std::max(best, std::abs(v[i] - v[j]) * inv_pow[k]);
        }
    }
    return best;
}

inline double grid_holder_seminorm(const GridFunction& g, double alpha, double radius) {
    return grid_holder_seminorm(g.kind(), g.values(), alpha, radius);
}

}  // namespace rpf
