#pragma once

// Collocation discretization of the transfer operator and its leading
// eigendata.

#include <Eigen/Sparse>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "rpf/dynamics.hpp"
#include "rpf/grid.hpp"
#include "rpf/potential.hpp"

namespace rpf {

enum class ApplyMode { collocation, matrix };
enum class PowerMethod { automatic, histories, iterated };

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class DiscretizedOperator {
public:
    static constexpr double history_cap = double(1 << 20);

    DiscretizedOperator(MapPtr map, Potential pot, int resolution)
        : map_(std::move(map)), pot_(std::move(pot)), n_(resolution) {
        if (n_ < 2) throw ConfigError("resolution must be at least 2");
        const int deg = map_->degree();
        pre_y_.resize(std::size_t(n_) * deg);
        pre_w_.resize(std::size_t(n_) * deg);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(std::size_t(n_) * deg * 2);
        for (int i = 0; i < n_; ++i) {
            const auto pre = map_->preimages(cell_center(i, n_));
            for (int b = 0; b < deg; ++b) {
                const double y = pre[b].y;
                const double w = std::exp(pot_.eval(y, b));
                pre_y_[std::size_t(i) * deg + b] = y;
                pre_w_[std::size_t(i) * deg + b] = w;
                const Stencil s = stencil(kind(), n_, y);
                trip.emplace_back(i, s.j0, w * s.w0);
                if (s.w1 != 0.0) trip.emplace_back(i, s.j1, w * s.w1);
            }
        }
        M_.resize(n_, n_);
        M_.setFromTriplets(trip.begin(), trip.end());
        M_.makeCompressed();
    }

    const PiecewiseMap& map() const { return *map_; }
    const MapPtr& map_ptr() const { return map_; }
    const Potential& potential() const { return pot_; }
    int resolution() const { return n_; }
    SpaceKind kind() const { return map_->space().kind; }
    const SparseMatrix& matrix() const { return M_; }
    double center(int i) const { return cell_center(i, n_); }

    // Preimage y_b of centre i and its weight exp(phi(y_b)).
    double preimage(int i, int b) const { return pre_y_[std::size_t(i) * map_->degree() + b]; }
    double weight(int i, int b) const { return pre_w_[std::size_t(i) * map_->degree() + b]; }

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return M_ * v; }

    GridFunction apply(const GridFunction& psi, ApplyMode mode = ApplyMode::collocation) const {
        check(psi);
        if (mode == ApplyMode::matrix) return {kind(), M_ * psi.values()};
        const int deg = map_->degree();
        Eigen::VectorXd out(n_);
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (int b = 0; b < deg; ++b) s += weight(i, b) * psi.eval(preimage(i, b));
            out[i] = s;
        }
        return {kind(), std::move(out)};
    }

    // L^n by enumerating n-step inverse histories with exact Birkhoff
    // weights, or by iterating the one-step operator.
    GridFunction apply_n(const GridFunction& psi, int n, PowerMethod method = PowerMethod::automatic) const {
        check(psi);
        if (n < 1) throw ConfigError("apply_n needs n >= 1");
        const double branches = std::pow(double(map_->degree()), n);
        if (method == PowerMethod::automatic) method = branches <= history_cap ? PowerMethod::histories
                                                                               : PowerMethod::iterated;
        if (method == PowerMethod::iterated) {
            Eigen::VectorXd v = psi.values();
            for (int k = 0; k < n; ++k) v = M_ * v;
            return {kind(), std::move(v)};
        }
        if (branches > history_cap) throw BranchExplosion("deg^n exceeds the history budget 2^20");
        return apply_histories(n, [&psi](double y) { return psi.eval(y); });
    }

    // sum over y in f^{-n}(x_i) of exp(S_n phi(y)) g(y), for any point function g.
    GridFunction apply_histories(int n, const std::function<double(double)>& g) const {
        const int deg = map_->degree();
        Eigen::VectorXd out(n_);
        std::vector<double> cur, acc, nxt, nacc;
        for (int i = 0; i < n_; ++i) {
            cur.assign(1, center(i));
            acc.assign(1, 0.0);
            for (int level = 0; level < n; ++level) {
                nxt.clear();
                nacc.clear();
                for (std::size_t k = 0; k < cur.size(); ++k) {
                    for (int b = 0; b < deg; ++b) {
                        const double y = level == 0 ? preimage(i, b) : map_->branches()[b].invert(cur[k]);
                        nxt.push_back(y);
                        nacc.push_back(acc[k] + pot_.eval(y, b));
                    }
                }
                cur.swap(nxt);
                acc.swap(nacc);
            }
            double s = 0.0;
            for (std::size_t k = 0; k < cur.size(); ++k) s += std::exp(acc[k]) * g(cur[k]);
            out[i] = s;
        }
        return {kind(), std::move(out)};
    }

private:
    void check(const GridFunction& psi) const {
        if (psi.resolution() != n_) throw ConfigError("grid function resolution does not match operator");
    }

    MapPtr map_;
    Potential pot_;
    int n_;
    std::vector<double> pre_y_, pre_w_;
    SparseMatrix M_;
};

struct Residuals {
    double eigen_h = 0.0;
    double eigen_nu = 0.0;
};

struct SpectralData {
    double lambda = 0.0;
    GridFunction h;
    Eigen::VectorXd nu;
    Eigen::VectorXd mu;
    double gap_ratio = 0.0;
    int iterations = 0;
    Residuals residuals;

    double pressure() const { return std::log(lambda); }
    int resolution() const { return h.resolution(); }
    double integrate_nu(const Eigen::VectorXd& psi) const { return psi.dot(nu); }
    double integrate_mu(const Eigen::VectorXd& psi) const { return psi.dot(mu); }
};

struct PowerOptions {
    double tol = 1e-13;
    int max_iter = 20000;
    std::optional<Eigen::VectorXd> warm_start;  // initial h guess
    std::optional<Eigen::VectorXd> warm_nu;     // initial nu guess
    int gap_iters = 600;
    int gap_window = 300;
};

inline Residuals eigen_residuals(const DiscretizedOperator& op, const SpectralData& d) {
    Residuals r;
    const Eigen::VectorXd& h = d.h.values();
    r.eigen_h = (op.matrix() * h - d.lambda * h).cwiseAbs().maxCoeff() / h.cwiseAbs().maxCoeff();
    r.eigen_nu = (op.matrix().transpose() * d.nu - d.lambda * d.nu).lpNorm<1>();
    return r;
}

// Geometric-mean growth of the operator restricted to the nu-annihilator,
// divided by lambda. Averaging log norms over a window handles complex pairs.
inline double deflated_gap_ratio(const DiscretizedOperator& op, double lambda, const Eigen::VectorXd& h,
                                 const Eigen::VectorXd& nu, int iters, int window) {
    std::mt19937_64 rng(0x5eed5eedULL);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::VectorXd v(h.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = U(rng);
    v -= nu.dot(v) * h;
    v /= v.cwiseAbs().maxCoeff();
    double logsum = 0.0;
    int count = 0;
    for (int k = 0; k < iters; ++k) {
        Eigen::VectorXd w = op.matrix() * v;
        w -= nu.dot(w) * h;
        const double nrm = w.cwiseAbs().maxCoeff();
        if (!(nrm > 1e-300)) return 0.0;
        if (k >= iters - window) {
            logsum += std::log(nrm);
            ++count;
        }
        v = w / nrm;
    }
    return std::min(std::exp(logsum / count) / lambda, 1.0);
}

inline SpectralData power_iterate(const DiscretizedOperator& op, const PowerOptions& o = {}) {
    const SparseMatrix& M = op.matrix();
    const int n = op.resolution();
    SpectralData d;

    Eigen::VectorXd psi = o.warm_start ? *o.warm_start : Eigen::VectorXd::Ones(n);
    psi /= psi.cwiseAbs().maxCoeff();
    double s_prev = 0.0;
    bool ok = false;
    int it = 0;
    for (; it < o.max_iter; ++it) {
        Eigen::VectorXd w = M * psi;
        const double s = w.cwiseAbs().maxCoeff();
        w /= s;
        const double diff = (w - psi).cwiseAbs().maxCoeff();
        psi.swap(w);
        if (diff < o.tol && std::abs(s - s_prev) < o.tol * s) {
            ok = true;
            break;
        }
        s_prev = s;
    }
    if (!ok) throw NoConvergence("right eigenvector: no convergence after " + std::to_string(it) + " iterations");

    Eigen::VectorXd nu = o.warm_nu ? *o.warm_nu : Eigen::VectorXd::Constant(n, 1.0 / n);
    nu /= nu.sum();
    ok = false;
    int jt = 0;
    s_prev = 0.0;
    for (; jt < o.max_iter; ++jt) {
        Eigen::VectorXd w = M.transpose() * nu;
        const double s = w.sum();
        w /= s;
        const double diff = (w - nu).lpNorm<1>();
        nu.swap(w);
        if (diff < o.tol && std::abs(s - s_prev) < o.tol * s) {
            ok = true;
            break;
        }
        s_prev = s;
    }
    if (!ok) throw NoConvergence("left eigenvector: no convergence after " + std::to_string(jt) + " iterations");

    d.lambda = nu.dot(M * psi) / nu.dot(psi);
    psi /= psi.dot(nu);
    d.h = GridFunction(op.kind(), psi);
    d.nu = nu;
    d.mu = psi.cwiseProduct(nu);
    d.iterations = std::max(it, jt) + 1;
    d.gap_ratio = deflated_gap_ratio(op, d.lambda, psi, nu, o.gap_iters, o.gap_window);
    d.residuals = eigen_residuals(op, d);
    return d;
}

}  // namespace rpf
