#pragma once

// Phase spaces, piecewise monotone maps with full branches, exact interval
// images and the mixing time of small balls.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "rpf/errors.hpp"

namespace rpf {

enum class SpaceKind { circle, interval };

inline const char* to_string(SpaceKind k) { return k == SpaceKind::circle ? "circle" : "interval"; }

struct PhaseSpace {
    SpaceKind kind = SpaceKind::circle;

    double diameter() const { return kind == SpaceKind::circle ? 0.5 : 1.0; }

    double distance(double x, double y) const {
        double d = std::abs(x - y);
        if (kind == SpaceKind::circle) {
            d = std::fmod(d, 1.0);
            d = std::min(d, 1.0 - d);
        }
        return d;
    }

    // Canonical representative: [0,1) for the circle, clamp to [0,1] otherwise.
    double wrap(double x) const {
        if (kind == SpaceKind::circle) {
            double r = x - std::floor(x);
            return r >= 1.0 ? 0.0 : r;
        }
        return std::clamp(x, 0.0, 1.0);
    }
};

struct Preimage {
    double y;
    int branch;
};

// One full monotone branch. `forward` maps the closed domain [lo, hi] onto
// [0,1]; ownership of points is half-open [lo, hi).
struct Branch {
    double lo = 0.0;
    double hi = 1.0;
    bool increasing = true;
    std::function<double(double)> forward;
    std::function<double(double)> derivative;
    std::function<double(double)> inverse;  // closed form when available

    static constexpr double tol_inv = 1e-12;
    static constexpr int max_iter = 200;

    // Safeguarded Newton with a bisection fallback; the bracket is the
    // closed domain, which monotonicity guarantees contains the root.
    double invert(double w, double guess = std::numeric_limits<double>::quiet_NaN()) const {
        if (inverse) return inverse(w);
        double a = lo, b = hi;
        double y = std::isnan(guess) ? lo + (hi - lo) * (increasing ? w : 1.0 - w)
                                     : std::clamp(guess, lo, hi);
        for (int it = 0; it < max_iter; ++it) {
            const double r = forward(y) - w;
            if (r == 0.0) return y;
            const bool above = increasing ? r > 0.0 : r < 0.0;
            (above ? b : a) = y;
            double yn = y - r / derivative(y);
            if (!(yn >= a && yn <= b)) yn = 0.5 * (a + b);
            const double step = std::abs(yn - y);
            y = yn;
            if (step <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(y)))
                break;
        }
        if (!(std::abs(forward(y) - w) <= tol_inv))
            throw SolverDivergence("branch inverse did not converge for target " + std::to_string(w));
        return y;
    }
};

class PiecewiseMap {
public:
    PiecewiseMap(std::string family, PhaseSpace space, std::vector<Branch> branches, double theta)
        : family_(std::move(family)), space_(space), branches_(std::move(branches)), theta_(theta) {
        if (branches_.empty()) throw ConfigError("map needs at least one branch");
        if (branches_.front().lo != 0.0 || branches_.back().hi != 1.0)
            throw ConfigError("branch domains must partition [0,1]");
        for (std::size_t i = 0; i + 1 < branches_.size(); ++i)
            if (branches_[i].hi != branches_[i + 1].lo || !(branches_[i].lo < branches_[i].hi))
                throw ConfigError("branch domains must be ordered, adjacent and nonempty");
        if (space_.kind == SpaceKind::circle)
            for (const auto& b : branches_)
                if (!b.increasing) throw ConfigError("circle maps need orientation preserving branches");
        if (!(theta_ > 0.0)) theta_ = sampled_theta(1 << 14);
    }

    const std::string& family() const { return family_; }
    const PhaseSpace& space() const { return space_; }
    const std::vector<Branch>& branches() const { return branches_; }
    int degree() const { return static_cast<int>(branches_.size()); }
    double theta() const { return theta_; }

    int branch_of(double x) const {
        auto it = std::upper_bound(branches_.begin(), branches_.end(), x,
                                   [](double v, const Branch& b) { return v < b.lo; });
        int j = static_cast<int>(it - branches_.begin()) - 1;
        return std::clamp(j, 0, degree() - 1);
    }

    double evaluate(double x) const {
        const int j = branch_of(x);
        return space_.wrap(branches_[j].forward(x));
    }

    double derivative(double x) const { return branches_[branch_of(x)].derivative(x); }
    double derivative(double x, int branch) const { return branches_[branch].derivative(x); }

    double log_inverse_derivative(double x) const { return -std::log(std::abs(derivative(x))); }

    std::vector<Preimage> preimages(double x) const {
        std::vector<Preimage> out;
        out.reserve(branches_.size());
        for (int j = 0; j < degree(); ++j) out.push_back({branches_[j].invert(x), j});
        return out;
    }

    // Inverse branch `b` continued to a neighbourhood of its image. On the
    // circle this is the inverse of the continuous lift, so arguments may
    // leave [0,1); the returned point is unwrapped and tagged with the
    // branch that owns its canonical representative.
    Preimage local_inverse(int b, double w) const {
        if (space_.kind == SpaceKind::interval) {
            return {branches_[b].invert(std::clamp(w, 0.0, 1.0)), b};
        }
        const double u = w + b;
        const double k = std::floor(u);
        double r = u - k;
        if (r >= 1.0) r = 0.0;
        const long long d = degree();
        const long long kk = static_cast<long long>(k);
        const long long q = ((kk % d) + d) % d;
        const long long c = (kk - q) / d;
        return {static_cast<double>(c) + branches_[q].invert(r), static_cast<int>(q)};
    }

    double sampled_theta(int samples) const {
        double t = 0.0;
        for (const auto& b : branches_)
            for (int i = 0; i <= samples; ++i) {
                const double x = b.lo + (b.hi - b.lo) * i / samples;
                t = std::max(t, 1.0 / std::abs(b.derivative(x)));
            }
        return t;
    }

private:
    std::string family_;
    PhaseSpace space_;
    std::vector<Branch> branches_;
    double theta_;
};

using MapPtr = std::shared_ptr<const PiecewiseMap>;

// ---------------------------------------------------------------- families

inline MapPtr make_doubling() {
    std::vector<Branch> br(2);
    for (int j = 0; j < 2; ++j) {
        br[j].lo = 0.5 * j;
        br[j].hi = 0.5 * (j + 1);
        br[j].forward = [j](double x) { return 2.0 * x - j; };
        br[j].derivative = [](double) { return 2.0; };
        br[j].inverse = [j](double w) { return 0.5 * (w + j); };
    }
    return std::make_shared<PiecewiseMap>("doubling", PhaseSpace{SpaceKind::circle}, std::move(br), 0.5);
}

// x(1 + 2^beta x^beta) on [0,1/2), 2x - 1 on [1/2,1]; neutral fixed point at 0.
inline MapPtr make_intermittent(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("intermittent map needs 0 < beta < 1");
    const double c = std::pow(2.0, beta);
    std::vector<Branch> br(2);
    br[0].lo = 0.0;
    br[0].hi = 0.5;
    if (beta == 0.5) {
        // sqrt is several times cheaper than pow and this is the default fixture.
        br[0].forward = [c](double x) { return x + c * x * std::sqrt(x); };
        br[0].derivative = [c](double x) { return 1.0 + 1.5 * c * std::sqrt(x); };
    } else {
        br[0].forward = [beta, c](double x) { return x + c * std::pow(x, 1.0 + beta); };
        br[0].derivative = [beta, c](double x) { return 1.0 + (1.0 + beta) * c * std::pow(x, beta); };
    }
    br[1].lo = 0.5;
    br[1].hi = 1.0;
    br[1].forward = [](double x) { return 2.0 * x - 1.0; };
    br[1].derivative = [](double) { return 2.0; };
    br[1].inverse = [](double w) { return 0.5 * (w + 1.0); };
    return std::make_shared<PiecewiseMap>("intermittent", PhaseSpace{SpaceKind::interval}, std::move(br), 1.0);
}

// Circle map with lift 2x + eps/(2 pi) sin(2 pi x).
inline MapPtr make_perturbed_expanding(double eps) {
    if (!(std::abs(eps) < 1.0)) throw ConfigError("perturbed_expanding needs |epsilon| < 1");
    constexpr double two_pi = 2.0 * M_PI;
    std::vector<Branch> br(2);
    for (int j = 0; j < 2; ++j) {
        br[j].lo = 0.5 * j;
        br[j].hi = 0.5 * (j + 1);
        br[j].forward = [eps, j](double x) { return 2.0 * x + eps / two_pi * std::sin(two_pi * x) - j; };
        br[j].derivative = [eps](double x) { return 2.0 + eps * std::cos(two_pi * x); };
    }
    return std::make_shared<PiecewiseMap>("perturbed_expanding", PhaseSpace{SpaceKind::circle}, std::move(br),
                                          1.0 / (2.0 - std::abs(eps)));
}

// Full linear branches between consecutive breakpoints 0 = c_0 < ... < c_m = 1.
inline MapPtr make_piecewise_linear(const std::vector<double>& breakpoints, SpaceKind kind,
                                    std::vector<bool> decreasing = {}) {
    if (breakpoints.size() < 3) throw ConfigError("piecewise linear map needs at least two branches");
    const std::size_t m = breakpoints.size() - 1;
    if (decreasing.empty()) decreasing.assign(m, false);
    if (decreasing.size() != m) throw ConfigError("orientation list length must match branch count");
    std::vector<Branch> br(m);
    double theta = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double a = breakpoints[j], b = breakpoints[j + 1];
        if (!(b > a)) throw ConfigError("breakpoints must be strictly increasing");
        const double s = 1.0 / (b - a);
        theta = std::max(theta, b - a);
        br[j].lo = a;
        br[j].hi = b;
        br[j].increasing = !decreasing[j];
        if (br[j].increasing) {
            br[j].forward = [a, s](double x) { return (x - a) * s; };
            br[j].derivative = [s](double) { return s; };
            br[j].inverse = [a, b](double w) { return a + (b - a) * w; };
        } else {
            br[j].forward = [b, s](double x) { return (b - x) * s; };
            br[j].derivative = [s](double) { return -s; };
            br[j].inverse = [a, b](double w) { return b - (b - a) * w; };
        }
    }
    return std::make_shared<PiecewiseMap>("custom_piecewise_linear", PhaseSpace{kind}, std::move(br), theta);
}

// ----------------------------------------------------------- interval sets

struct Piece {
    double lo, hi;
    bool lo_closed, hi_closed;
    bool empty() const { return lo > hi || (lo == hi && !(lo_closed && hi_closed)); }
};

// Finite union of intervals inside [0,1] (or [0,1) on the circle), kept
// sorted and merged.
class IntervalSet {
public:
    IntervalSet() = default;
    explicit IntervalSet(std::vector<Piece> p) : pieces_(std::move(p)) { normalize(); }

    const std::vector<Piece>& pieces() const { return pieces_; }

    void add(Piece p) {
        if (!p.empty()) pieces_.push_back(p);
    }

    void normalize() {
        std::erase_if(pieces_, [](const Piece& p) { return p.empty(); });
        std::sort(pieces_.begin(), pieces_.end(), [](const Piece& a, const Piece& b) {
            if (a.lo != b.lo) return a.lo < b.lo;
            return a.lo_closed && !b.lo_closed;
        });
        std::vector<Piece> out;
        for (const auto& p : pieces_) {
            if (!out.empty()) {
                Piece& c = out.back();
                const bool touch = p.lo < c.hi || (p.lo == c.hi && (c.hi_closed || p.lo_closed));
                if (touch) {
                    if (p.hi > c.hi) {
                        c.hi = p.hi;
                        c.hi_closed = p.hi_closed;
                    } else if (p.hi == c.hi) {
                        c.hi_closed = c.hi_closed || p.hi_closed;
                    }
                    continue;
                }
            }
            out.push_back(p);
        }
        pieces_ = std::move(out);
    }

    double length() const {
        double s = 0.0;
        for (const auto& p : pieces_) s += p.hi - p.lo;
        return s;
    }

    bool covers(SpaceKind kind) const {
        if (pieces_.size() != 1) return false;
        const Piece& p = pieces_.front();
        if (!(p.lo == 0.0 && p.lo_closed && p.hi == 1.0)) return false;
        return kind == SpaceKind::circle || p.hi_closed;
    }

    // Open ball of radius r about c.
    static IntervalSet ball(const PhaseSpace& sp, double c, double r) {
        IntervalSet s;
        if (sp.kind == SpaceKind::interval) {
            const double lo = c - r, hi = c + r;
            s.add({std::max(0.0, lo), std::min(1.0, hi), lo < 0.0, hi > 1.0});
        } else if (r > 0.5) {
            s.add({0.0, 1.0, true, false});
        } else if (r == 0.5) {
            const double a = sp.wrap(c + 0.5);
            s.add({0.0, a, true, false});
            s.add({a, 1.0, false, false});
            if (a == 0.0) s = IntervalSet({{0.0, 1.0, false, false}});
        } else {
            const double lo = c - r, hi = c + r;
            if (lo < 0.0) {
                s.add({lo + 1.0, 1.0, false, false});
                s.add({0.0, hi, true, false});
            } else if (hi > 1.0) {
                s.add({lo, 1.0, false, false});
                s.add({0.0, hi - 1.0, true, false});
            } else {
                s.add({lo, hi, false, false});
            }
        }
        s.normalize();
        return s;
    }

    // Exact forward image; pieces are split at branch boundaries and each
    // part is taken with its closure at the split points.
    IntervalSet image(const PiecewiseMap& f) const {
        IntervalSet out;
        const bool circle = f.space().kind == SpaceKind::circle;
        for (const auto& p : pieces_) {
            for (const auto& b : f.branches()) {
                Piece q{std::max(p.lo, b.lo), std::min(p.hi, b.hi),
                        p.lo >= b.lo ? p.lo_closed : true, p.hi <= b.hi ? p.hi_closed : true};
                if (q.empty()) continue;
                auto img = [&](double x) {
                    if (x == b.lo) return b.increasing ? 0.0 : 1.0;
                    if (x == b.hi) return b.increasing ? 1.0 : 0.0;
                    return std::clamp(b.forward(x), 0.0, 1.0);
                };
                Piece r{img(q.lo), img(q.hi), q.lo_closed, q.hi_closed};
                if (!b.increasing) r = {r.hi, r.lo, q.hi_closed, q.lo_closed};
                if (circle && r.hi >= 1.0) {
                    if (r.hi_closed) out.add({0.0, 0.0, true, true});
                    if (r.lo < 1.0) out.add({r.lo, 1.0, r.lo_closed, false});
                    else if (r.lo_closed) out.add({0.0, 0.0, true, true});
                } else {
                    out.add(r);
                }
            }
        }
        out.normalize();
        return out;
    }

private:
    std::vector<Piece> pieces_;
};

struct MixingTimeResult {
    int n_tilde = 0;
    std::vector<int> per_center;
    std::vector<double> centers;
};

// Smallest n with f^n(B(c, delta)) equal to the whole space for every test
// center c on a grid of `centers` points.
inline MixingTimeResult mixing_time(const PiecewiseMap& f, double delta, int centers = 1 << 10, int cap = 64) {
    if (!(delta > 0.0)) throw ConfigError("mixing_time needs delta > 0");
    MixingTimeResult res;
    const bool circle = f.space().kind == SpaceKind::circle;
    for (int i = 0; i < centers; ++i) {
        const double c = circle ? double(i) / centers : double(i) / (centers - 1);
        IntervalSet s = IntervalSet::ball(f.space(), c, delta);
        int n = 0;
        while (!s.covers(f.space().kind)) {
            if (++n > cap)
                throw NotMixingWithinCap("ball around " + std::to_string(c) + " does not cover within cap " +
                                         std::to_string(cap));
            s = s.image(f);
        }
        res.centers.push_back(c);
        res.per_center.push_back(n);
        res.n_tilde = std::max(res.n_tilde, n);
    }
    return res;
}

}  // namespace rpf
