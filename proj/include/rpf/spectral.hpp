#pragma once

// Spectral splitting, contraction on the nu-annihilator, the contour
// eigenprojection and a branch-history pressure estimate.

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <complex>
#include <random>
#include <vector>

#include "rpf/transfer.hpp"

namespace rpf {

using cd = std::complex<double>;
using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;

struct Split {
    GridFunction psi0, psi1;
};

inline Split split(const SpectralData& d, const GridFunction& psi) {
    const double c = psi.values().dot(d.nu);
    Eigen::VectorXd p1 = c * d.h.values();
    return {GridFunction(psi.kind(), psi.values() - p1), GridFunction(psi.kind(), p1)};
}

// Smooth random test function: a trigonometric field with decaying modes.
inline Eigen::VectorXd random_field(std::mt19937_64& rng, int n, int modes = 16) {
    std::normal_distribution<double> N01(0.0, 1.0);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 0.0);
    for (int m = 0; m < modes; ++m) {
        const double a = N01(rng) / (m + 1), b = N01(rng) / (m + 1);
        for (int i = 0; i < n; ++i) {
            const double x = cell_center(i, n);
            v[i] += a * std::cos(2.0 * M_PI * m * x) + b * std::sin(2.0 * M_PI * (m + 1) * x);
        }
    }
    return v;
}

// Growth of (L/lambda)^n on E0 = {psi : sum psi_i nu_i = 0}.
struct E0Contraction {
    double max_ratio = 0.0;   // max ||(L/lambda)^n psi0|| / ||psi0||
    double per_step = 0.0;    // max_ratio^(1/n)
    int n = 0;
};

inline E0Contraction e0_contraction(const SpectralData& d, const DiscretizedOperator& op, int trials, int n,
                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    E0Contraction r;
    r.n = n;
    for (int t = 0; t < trials; ++t) {
        Eigen::VectorXd v = random_field(rng, op.resolution());
        v -= v.dot(d.nu) * d.h.values();
        const double n0 = v.cwiseAbs().maxCoeff();
        if (n0 == 0.0) continue;
        for (int k = 0; k < n; ++k) {
            v = op.matrix() * v / d.lambda;
            // E0 is invariant; re-projecting only removes the rounding
            // component along h, which would otherwise never decay.
            v -= v.dot(d.nu) * d.h.values();
        }
        r.max_ratio = std::max(r.max_ratio, v.cwiseAbs().maxCoeff() / n0);
    }
    r.per_step = n > 0 ? std::pow(r.max_ratio, 1.0 / n) : 0.0;
    return r;
}

// Resolvent (zI - M)^{-1} for many shifts z. Up to 2^12 cells the matrix is
// reduced once to Hessenberg form M = Q H Q^T and every shift costs one
// O(n^2) elimination; above that a BiCGSTAB solve on the sparse matrix is
// used.
class Resolvent {
public:
    static constexpr int dense_limit = 1 << 12;
    static constexpr double tol = 1e-10;

    explicit Resolvent(const SparseMatrix& M) : M_(M), n_(static_cast<int>(M.rows())) {
        if (n_ <= dense_limit) {
            Eigen::MatrixXd D = Eigen::MatrixXd(M);
            Eigen::HessenbergDecomposition<Eigen::MatrixXd> hd(D);
            H_ = hd.matrixH();
            Q_ = hd.matrixQ();
            scale_ = H_.cwiseAbs().maxCoeff();
        }
    }

    int size() const { return n_; }

    // Solves (zI - M) X = B column by column.
    MatrixXcd solve(cd z, const MatrixXcd& B) const {
        MatrixXcd X = n_ <= dense_limit ? solve_dense(z, B) : solve_iterative(z, B);
        // A-posteriori residual check on the original sparse matrix.
        for (Eigen::Index c = 0; c < B.cols(); ++c) {
            const VectorXcd r = z * X.col(c) - M_.cast<cd>() * X.col(c) - B.col(c);
            const double rb = B.col(c).cwiseAbs().maxCoeff();
            if (rb > 0.0 && !(r.cwiseAbs().maxCoeff() <= tol * rb * std::max(1.0, std::abs(z))))
                throw ResolventSingular("resolvent residual too large at z = " + std::to_string(z.real()) + " + " +
                                        std::to_string(z.imag()) + "i");
        }
        return X;
    }

private:
    MatrixXcd solve_dense(cd z, const MatrixXcd& B) const {
        const int n = n_;
        MatrixXcd A = -H_.cast<cd>();
        A.diagonal().array() += z;
        MatrixXcd Y = Q_.transpose().cast<cd>() * B;
        for (int k = 0; k + 1 < n; ++k) {
            if (std::abs(A(k + 1, k)) > std::abs(A(k, k))) {
                A.row(k).segment(k, n - k).swap(A.row(k + 1).segment(k, n - k));
                Y.row(k).swap(Y.row(k + 1));
            }
            if (A(k, k) == cd(0.0)) throw ResolventSingular("zero pivot in Hessenberg elimination");
            const cd l = A(k + 1, k) / A(k, k);
            if (l != cd(0.0)) {
                A.row(k + 1).segment(k + 1, n - k - 1) -= l * A.row(k).segment(k + 1, n - k - 1);
                Y.row(k + 1) -= l * Y.row(k);
            }
            A(k + 1, k) = 0.0;
        }
        for (int k = 0; k < n; ++k)
            if (!(std::abs(A(k, k)) > 1e-14 * scale_)) throw ResolventSingular("near-zero pivot in resolvent solve");
        const MatrixXcd U = A.triangularView<Eigen::Upper>().solve(Y);
        return Q_.cast<cd>() * U;
    }

    MatrixXcd solve_iterative(cd z, const MatrixXcd& B) const {
        Eigen::SparseMatrix<cd> A = -M_.cast<cd>();
        Eigen::SparseMatrix<cd> I(n_, n_);
        I.setIdentity();
        A += z * I;
        Eigen::BiCGSTAB<Eigen::SparseMatrix<cd>> solver;
        solver.setTolerance(1e-12);
        solver.setMaxIterations(20000);
        solver.compute(A);
        MatrixXcd X(n_, B.cols());
        for (Eigen::Index c = 0; c < B.cols(); ++c) {
            X.col(c) = solver.solve(B.col(c));
            if (solver.info() != Eigen::Success) throw ResolventSingular("iterative resolvent solve failed");
        }
        return X;
    }

    SparseMatrix M_;
    int n_;
    Eigen::MatrixXd H_, Q_;
    double scale_ = 1.0;
};

// E = (1/2 pi i) \oint (zI - M)^{-1} dz on a circle about lambda, by the
// trapezoid rule with `nodes` points.
class ContourProjector {
public:
    ContourProjector(std::shared_ptr<const Resolvent> R, double center, double radius, int nodes)
        : R_(std::move(R)), c_(center), r_(radius), q_(nodes) {}

    double center() const { return c_; }
    double radius() const { return r_; }
    int nodes() const { return q_; }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& B) const {
        MatrixXcd acc = MatrixXcd::Zero(B.rows(), B.cols());
        const MatrixXcd Bc = B.cast<cd>();
        for (int q = 0; q < q_; ++q) {
            const cd e = std::polar(1.0, 2.0 * M_PI * q / q_);
            acc += (r_ * e) * R_->solve(c_ + r_ * e, Bc);
        }
        return (acc / double(q_)).real();
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
        Eigen::MatrixXd B = v;
        return apply(B).col(0);
    }

private:
    std::shared_ptr<const Resolvent> R_;
    double c_, r_;
    int q_;
};

// Columns 1, x, cos 2 pi x, sin 2 pi x and one seeded random field.
inline Eigen::MatrixXd projector_test_basis(int n, std::uint64_t seed = 17) {
    Eigen::MatrixXd B(n, 5);
    std::mt19937_64 rng(seed);
    const Eigen::VectorXd rf = random_field(rng, n);
    for (int i = 0; i < n; ++i) {
        const double x = cell_center(i, n);
        B(i, 0) = 1.0;
        B(i, 1) = x;
        B(i, 2) = std::cos(2.0 * M_PI * x);
        B(i, 3) = std::sin(2.0 * M_PI * x);
        B(i, 4) = rf[i];
    }
    return B;
}

struct EigenprojectionResult {
    std::string method = "contour";
    int quad_points = 0;
    double radius = 0.0;
    double idempotency_defect = 0.0;
    double agreement_defect = 0.0;
    double commutation_defect = 0.0;  // ||L E psi - E L psi|| / (lambda ||psi||)
    Eigen::MatrixXd basis, projected;
    std::shared_ptr<const ContourProjector> projector;
};

inline Eigen::MatrixXd direct_projection(const SpectralData& d, const Eigen::MatrixXd& B) {
    return d.h.values() * (d.nu.transpose() * B);
}

inline EigenprojectionResult eigenprojection_contour(const DiscretizedOperator& op, const SpectralData& d,
                                                     int quad_points,
                                                     std::shared_ptr<const Resolvent> R = nullptr,
                                                     const Eigen::MatrixXd* basis = nullptr) {
    if (!(d.gap_ratio < 1.0)) throw ResolventSingular("no spectral gap: contour undefined");
    if (!R) R = std::make_shared<Resolvent>(op.matrix());
    const Eigen::MatrixXd B = basis ? *basis : projector_test_basis(op.resolution());
    double radius = (1.0 - d.gap_ratio) * d.lambda / 2.0;
    EigenprojectionResult res;
    Eigen::MatrixXd EB;
    std::shared_ptr<ContourProjector> P;
    for (int attempt = 0;; ++attempt) {
        try {
            P = std::make_shared<ContourProjector>(R, d.lambda, radius, quad_points);
            EB = P->apply(B);
            break;
        } catch (const ResolventSingular&) {
            if (attempt > 0) throw;
            radius *= 0.5;
        }
    }
    const Eigen::MatrixXd EEB = P->apply(EB);
    const Eigen::MatrixXd DB = direct_projection(d, B);
    const Eigen::MatrixXd LEB = op.matrix() * EB;
    const Eigen::MatrixXd ELB = P->apply(Eigen::MatrixXd(op.matrix() * B));
    for (Eigen::Index c = 0; c < B.cols(); ++c) {
        const double s = B.col(c).cwiseAbs().maxCoeff();
        res.idempotency_defect = std::max(res.idempotency_defect, (EEB.col(c) - EB.col(c)).cwiseAbs().maxCoeff() / s);
        res.agreement_defect = std::max(res.agreement_defect, (EB.col(c) - DB.col(c)).cwiseAbs().maxCoeff() / s);
        res.commutation_defect =
            std::max(res.commutation_defect, (LEB.col(c) - ELB.col(c)).cwiseAbs().maxCoeff() / (d.lambda * s));
    }
    res.quad_points = quad_points;
    res.radius = radius;
    res.basis = B;
    res.projected = EB;
    res.projector = P;
    return res;
}

// (1/n) log sum over the deg^n n-step preimages y of x0 of exp(S_n phi(y)).
inline double pressure_via_separated_sets(const PiecewiseMap& f, const Potential& pot, int n, double x0 = 0.5) {
    if (std::pow(double(f.degree()), n) > double(1 << 20))
        throw BranchExplosion("deg^n exceeds the history budget 2^20");
    std::vector<double> cur{f.space().wrap(x0)}, acc{0.0}, nxt, nacc;
    for (int level = 0; level < n; ++level) {
        nxt.clear();
        nacc.clear();
        for (std::size_t k = 0; k < cur.size(); ++k)
            for (int b = 0; b < f.degree(); ++b) {
                const double y = f.branches()[b].invert(cur[k]);
                nxt.push_back(y);
                nacc.push_back(acc[k] + pot.eval(y, b));
            }
        cur.swap(nxt);
        acc.swap(nacc);
    }
    const double m = *std::max_element(acc.begin(), acc.end());
    double s = 0.0;
    for (double a : acc) s += std::exp(a - m);
    return (m + std::log(s)) / n;
}

}  // namespace rpf
