#pragma once

// Parameter sweeps of the leading eigendata along one-parameter potential
// families, finite-difference smoothness probes, the Neumann series of the
// perturbed resolvent, and the eigenprojection identities for (lambda, h, nu).
//
// Nothing here certifies analyticity. The probes establish that the computed
// curves behave like smooth functions at the tested orders and resolutions,
// and a kinked control curve is provided to show the probes can fail.

#include <Eigen/LU>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rpf/parallel.hpp"
#include "rpf/spectral.hpp"
#include "rpf/statistics.hpp"

namespace rpf {

struct SweepPoint {
    double t = 0.0;
    bool converged = false;
    std::string error;
    double lambda = NAN, pressure = NAN, gap_ratio = NAN;
    double lower_bound = NAN, upper_bound = NAN;  // deg e^{inf phi}, deg e^{sup phi} over preimages
    double nu_sum = NAN, h_nu = NAN;
    int iterations = 0;
    Eigen::VectorXd h, nu, mu;
};

struct ParameterSweep {
    std::string family;
    int resolution = 0;
    double dt = 0.0;
    bool warm_start = true;
    std::vector<SweepPoint> points;
    std::array<std::vector<double>, 5> differences;  // [r]: forward differences of P divided by dt^r
    std::vector<double> h_step_norm, nu_tv_step, mu_tv_step;  // between points i and i+1

    std::vector<double> t_values() const {
        std::vector<double> t;
        for (const auto& p : points) t.push_back(p.t);
        return t;
    }
    std::vector<double> pressures() const {
        std::vector<double> v;
        for (const auto& p : points) v.push_back(p.pressure);
        return v;
    }
};

using PotentialFamilyFn = std::function<Potential(double)>;

inline PotentialFamilyFn geometric_family(MapPtr f) {
    return [f](double t) { return Potential::geometric(f, t); };
}

namespace detail {

inline void fill_point(SweepPoint& p, const DiscretizedOperator& op, const SpectralData& d) {
    p.converged = true;
    p.lambda = d.lambda;
    p.pressure = d.pressure();
    p.gap_ratio = d.gap_ratio;
    p.iterations = d.iterations;
    p.h = d.h.values();
    p.nu = d.nu;
    p.mu = d.mu;
    p.nu_sum = d.nu.sum();
    p.h_nu = d.h.values().dot(d.nu);
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i < op.resolution(); ++i)
        for (int b = 0; b < op.map().degree(); ++b) {
            const double l = std::log(op.weight(i, b));
            lo = std::min(lo, l);
            hi = std::max(hi, l);
        }
    p.lower_bound = op.map().degree() * std::exp(lo);
    p.upper_bound = op.map().degree() * std::exp(hi);
}

}  // namespace detail

// Power iteration at `steps` equally spaced t in [t_min, t_max]. With
// warm_start each run starts from the previous (h, nu); otherwise runs are
// independent and spread over threads. Failures are recorded per point.
inline ParameterSweep sweep(MapPtr f, const PotentialFamilyFn& family, double t_min, double t_max, int steps,
                            int resolution, bool warm_start = true, const std::string& label = "geometric",
                            int threads = 0) {
    if (steps < 1 || t_max < t_min) throw ConfigError("sweep needs steps >= 1 and t_min <= t_max");
    if (t_min == t_max) steps = 1;
    ParameterSweep s;
    s.family = label;
    s.resolution = resolution;
    s.warm_start = warm_start;
    s.dt = steps > 1 ? (t_max - t_min) / (steps - 1) : 0.0;
    s.points.resize(steps);
    for (int i = 0; i < steps; ++i) s.points[i].t = steps > 1 ? t_min + i * s.dt : t_min;

    auto run = [&](int i, const PowerOptions& o) {
        SweepPoint& p = s.points[i];
        try {
            DiscretizedOperator op(f, family(p.t), resolution);
            detail::fill_point(p, op, power_iterate(op, o));
        } catch (const NumericalError& e) {
            p.converged = false;
            p.error = std::string(e.kind()) + ": " + e.what();
        }
    };
    if (warm_start) {
        PowerOptions o;
        for (int i = 0; i < steps; ++i) {
            run(i, o);
            if (s.points[i].converged) {
                o.warm_start = s.points[i].h;
                o.warm_nu = s.points[i].nu;
            }
        }
    } else {
        parallel_blocks(steps, threads, [&](long i) { run(static_cast<int>(i), PowerOptions{}); });
    }

    const int m = static_cast<int>(s.points.size());
    for (int i = 0; i + 1 < m; ++i) {
        const SweepPoint &a = s.points[i], &b = s.points[i + 1];
        if (!a.converged || !b.converged) {
            s.h_step_norm.push_back(NAN);
            s.nu_tv_step.push_back(NAN);
            s.mu_tv_step.push_back(NAN);
            continue;
        }
        s.h_step_norm.push_back((b.h - a.h).cwiseAbs().maxCoeff());
        s.nu_tv_step.push_back(0.5 * (b.nu - a.nu).lpNorm<1>());
        s.mu_tv_step.push_back(0.5 * (b.mu - a.mu).lpNorm<1>());
    }
    std::vector<double> cur = s.pressures();
    for (int r = 1; r <= 4; ++r) {
        std::vector<double> nxt;
        for (std::size_t i = 0; i + 1 < cur.size(); ++i) nxt.push_back((cur[i + 1] - cur[i]) / s.dt);
        s.differences[r] = nxt;
        cur.swap(nxt);
    }
    return s;
}

struct DerivativeCheck {
    double max_defect = 0.0;
    std::vector<double> t, dP_fd, dP_formula;

    // Signed defect at parameter t (NaN when t is not an interior point).
    double signed_defect_at(double t0) const {
        for (std::size_t i = 0; i < t.size(); ++i)
            if (std::abs(t[i] - t0) < 1e-9) return dP_fd[i] - dP_formula[i];
        return NAN;
    }
};

// Centred difference of P against sum_i (d phi_t / dt)(x_i) mu_{t,i}.
inline DerivativeCheck derivative_check(const ParameterSweep& s, const Eigen::VectorXd& dphi_dt_grid) {
    DerivativeCheck r;
    const int m = static_cast<int>(s.points.size());
    if (m < 3) return r;
    for (int i = 1; i + 1 < m; ++i) {
        const SweepPoint &a = s.points[i - 1], &c = s.points[i], &b = s.points[i + 1];
        if (!a.converged || !b.converged || !c.converged) continue;
        const double fd = (b.pressure - a.pressure) / (2.0 * s.dt);
        const double fm = dphi_dt_grid.dot(c.mu);
        r.t.push_back(c.t);
        r.dP_fd.push_back(fd);
        r.dP_formula.push_back(fm);
        r.max_defect = std::max(r.max_defect, std::abs(fd - fm));
    }
    return r;
}

struct OrderVerdict {
    int order = 0;
    std::vector<double> deltas, values;  // D_r(delta) for each delta
    double ratio = NAN;                  // (D1 - D2) / (D2 - D3)
    double noise_floor = 0.0;
    bool at_noise_floor = false;
    bool passes = false;
};

struct SmoothnessCertificate {
    double center = 0.0;
    std::vector<OrderVerdict> orders;
    bool all_pass() const {
        for (const auto& o : orders)
            if (!o.passes) return false;
        return !orders.empty();
    }
};

// Centred difference quotient of order r (1..4) at t0 with spacing d.
inline double centred_difference(const std::function<double(double)>& P, double t0, double d, int r) {
    switch (r) {
        case 1: return (P(t0 + d) - P(t0 - d)) / (2.0 * d);
        case 2: return (P(t0 + d) - 2.0 * P(t0) + P(t0 - d)) / (d * d);
        case 3: return (P(t0 + 2 * d) - 2.0 * P(t0 + d) + 2.0 * P(t0 - d) - P(t0 - 2 * d)) / (2.0 * d * d * d);
        case 4:
            return (P(t0 + 2 * d) - 4.0 * P(t0 + d) + 6.0 * P(t0) - 4.0 * P(t0 - d) + P(t0 - 2 * d)) /
                   (d * d * d * d);
        default: throw ConfigError("difference order must be 1..4");
    }
}

// For a smooth curve every centred quotient has error c h^2 + O(h^4), so
// successive changes under halving shrink by about 4. An order passes when
// that ratio lies in [2, 8], or when both changes sit below the rounding
// floor implied by an absolute error eps_P in the curve values.
inline SmoothnessCertificate smoothness_certificate(const std::function<double(double)>& P, double t0,
                                                    std::vector<double> deltas = {0.02, 0.01, 0.005},
                                                    double eps_P = 1e-12) {
    static constexpr double stencil_mass[5] = {0.0, 1.0, 4.0, 3.0, 16.0};
    SmoothnessCertificate c;
    c.center = t0;
    for (int r = 1; r <= 4; ++r) {
        OrderVerdict v;
        v.order = r;
        v.deltas = deltas;
        for (double d : deltas) v.values.push_back(centred_difference(P, t0, d, r));
        const double d1 = v.values[0] - v.values[1], d2 = v.values[1] - v.values[2];
        v.ratio = d1 / d2;
        const double dmin = deltas.back();
        v.noise_floor = 4.0 * stencil_mass[r] * eps_P * 2.0 / std::pow(dmin, r);
        v.at_noise_floor = std::abs(d1) <= v.noise_floor && std::abs(d2) <= v.noise_floor;
        v.passes = v.at_noise_floor || (v.ratio >= 2.0 && v.ratio <= 8.0);
        c.orders.push_back(v);
    }
    return c;
}

// Curve lookup on a uniform sweep grid; throws when t is not a grid point.
inline std::function<double(double)> sweep_curve(const ParameterSweep& s) {
    return [&s](double t) {
        const double u = (t - s.points.front().t) / s.dt;
        const long k = std::lround(u);
        if (k < 0 || k >= static_cast<long>(s.points.size()) || std::abs(u - k) > 1e-6)
            throw ConfigError("smoothness probe needs t = " + std::to_string(t) + " on the sweep grid");
        if (!s.points[k].converged) throw NoConvergence("sweep point did not converge");
        return s.points[k].pressure;
    };
}

inline SmoothnessCertificate smoothness_certificate(const ParameterSweep& s, double t0,
                                                    std::vector<double> deltas = {0.02, 0.01, 0.005},
                                                    double eps_P = 1e-12) {
    return smoothness_certificate(sweep_curve(s), t0, std::move(deltas), eps_P);
}

// Richardson ratio of the signed derivative defect at t0 over three sweeps
// with spacings dt, dt/2, dt/4. A resolution-dependent offset in the
// formula side cancels in the differences; the centred difference itself
// contributes c dt^2, so the ratio should be close to 4.
inline double derivative_richardson(const DerivativeCheck& a, const DerivativeCheck& b, const DerivativeCheck& c,
                                    double t0) {
    const double da = a.signed_defect_at(t0), db = b.signed_defect_at(t0), dc = c.signed_defect_at(t0);
    return (da - db) / (db - dc);
}

// |t|: the order-2 probe must reject it.
inline SmoothnessCertificate kinked_control(std::vector<double> deltas = {0.02, 0.01, 0.005}) {
    return smoothness_certificate([](double t) { return std::abs(t); }, 0.0, std::move(deltas));
}

struct SeriesRow {
    double s = 0.0;
    bool precondition_ok = false;
    double norm_dL = 0.0, norm_R = 0.0;
    double norm_product = 0.0;  // ||dL|| ||R||
    double norm_T = 0.0;        // ||dL R||
    double measured_ratio = NAN;
    std::vector<double> errors;  // relative error after orders 0..max_order
};

struct SeriesCheck {
    cd z;
    std::vector<SeriesRow> rows;
};

// R(z, phi0 + s psi) = R0 sum_n (dL R0)^n with dL = L_s - L_0 and R0 =
// (z - L_0)^{-1}, compared with a direct solve on a test vector. Norms are
// matrix infinity norms. Values of s violating ||dL|| ||R0|| < 1 are
// flagged and no series is summed for them.
inline SeriesCheck resolvent_series_check(MapPtr f, const Potential& phi0, const Potential& psi,
                                          const std::vector<double>& radii, int resolution, cd z,
                                          int max_order = 40, const Eigen::VectorXd* test = nullptr) {
    DiscretizedOperator op0(f, phi0, resolution);
    const Eigen::MatrixXd M0 = Eigen::MatrixXd(op0.matrix());
    const int n = resolution;
    MatrixXcd A0 = -M0.cast<cd>();
    A0.diagonal().array() += z;
    const Eigen::PartialPivLU<MatrixXcd> lu0(A0);
    const MatrixXcd R0 = lu0.inverse();
    Eigen::VectorXd b = test ? *test : projector_test_basis(n).col(4);
    const VectorXcd bc = b.cast<cd>();
    auto inf_norm = [](const auto& M) { return M.cwiseAbs().rowwise().sum().maxCoeff(); };
    SeriesCheck out;
    out.z = z;
    for (double s : radii) {
        SeriesRow row;
        row.s = s;
        DiscretizedOperator ops(f, phi0.plus(psi, s), resolution);
        const Eigen::MatrixXd dL = Eigen::MatrixXd(ops.matrix()) - M0;
        const MatrixXcd T = dL.cast<cd>() * R0;
        row.norm_dL = inf_norm(dL);
        row.norm_R = inf_norm(R0);
        row.norm_product = row.norm_dL * row.norm_R;
        row.norm_T = inf_norm(T);
        row.precondition_ok = row.norm_product < 1.0;
        if (!row.precondition_ok) {
            out.rows.push_back(row);
            continue;
        }
        MatrixXcd As = -Eigen::MatrixXd(ops.matrix()).cast<cd>();
        As.diagonal().array() += z;
        const VectorXcd exact = Eigen::PartialPivLU<MatrixXcd>(As).solve(bc);
        const double scale = exact.cwiseAbs().maxCoeff();
        VectorXcd v = bc, acc = VectorXcd::Zero(n);
        for (int k = 0; k <= max_order; ++k) {
            acc += v;
            row.errors.push_back((exact - R0 * acc).cwiseAbs().maxCoeff() / scale);
            v = T * v;
        }
        // Geometric-mean ratio over orders whose error is above the rounding floor.
        int last = 0;
        while (last + 1 < static_cast<int>(row.errors.size()) && row.errors[last + 1] > 1e-13) ++last;
        const int first = std::min(2, last);
        if (last > first && row.errors[first] > 0.0)
            row.measured_ratio = std::pow(row.errors[last] / row.errors[first], 1.0 / (last - first));
        out.rows.push_back(row);
    }
    return out;
}

struct ProjectionIdentities {
    double lambda_quotient = NAN;
    double lambda_defect = NAN;  // relative
    double h_defect = NAN;       // ||E(1) - h||_inf / ||h||_inf
    double nu_defect = NAN;      // max_i |E(psi)_i / E(1)_i - nu(psi)| / ||psi||_inf
};

// lambda = eta(L E(1)) / eta(E(1)) with eta the uniform cell average,
// h = E(1), and nu(psi) = E(psi) / E(1) pointwise, all through the contour
// projector.
inline ProjectionIdentities projection_identities(const DiscretizedOperator& op, const SpectralData& d,
                                                  int quad_points = 64) {
    const int n = op.resolution();
    Eigen::MatrixXd B = projector_test_basis(n);
    const EigenprojectionResult e = eigenprojection_contour(op, d, quad_points, nullptr, &B);
    const Eigen::VectorXd E1 = e.projected.col(0);
    ProjectionIdentities r;
    r.lambda_quotient = (op.matrix() * E1).mean() / E1.mean();
    r.lambda_defect = std::abs(r.lambda_quotient - d.lambda) / d.lambda;
    r.h_defect = (E1 - d.h.values()).cwiseAbs().maxCoeff() / d.h.values().cwiseAbs().maxCoeff();
    r.nu_defect = 0.0;
    for (Eigen::Index c = 1; c < B.cols(); ++c) {
        const double target = d.nu.dot(B.col(c));
        const double scale = B.col(c).cwiseAbs().maxCoeff();
        for (int i = 0; i < n; ++i)
            r.nu_defect = std::max(r.nu_defect, std::abs(e.projected(i, c) / E1[i] - target) / scale);
    }
    return r;
}

}  // namespace rpf
