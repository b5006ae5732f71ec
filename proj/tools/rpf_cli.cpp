// rpf: command-line front end for the transfer-operator library.
//
// Every subcommand writes <out>/<subcommand>.json (and CSV files where
// noted) atomically and echoes the JSON report on stdout.
// Exit codes: 0 success (including failing certificates), 2 configuration
// or usage error, 3 numerical failure with a JSON error report.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <unistd.h>

#include "rpf/rpf.hpp"

namespace fs = std::filesystem;
using namespace rpf;

namespace {

constexpr const char* kOutside = "outside certified class";
constexpr const char* kCertified = "certified";

void write_atomic(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
        if (!o) throw ConfigError("cannot write " + tmp.string());
        o << text;
        o.flush();
        if (!o) throw ConfigError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

// Full round-trip precision; NaN and infinity become empty cells.
std::string cell(double v) {
    if (!std::isfinite(v)) return "";
    std::ostringstream o;
    o << std::setprecision(17) << v;
    return o.str();
}

class Csv {
public:
    explicit Csv(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i) text_ += (i ? "," : "") + cols[i];
        text_ += "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
        text_ += "\n";
    }
    const std::string& text() const { return text_; }

private:
    std::string text_;
};

// nlohmann::json turns non-finite doubles into null; keep that explicit.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const SmallnessReport& r) {
    return {{"resolution", r.resolution},
            {"var_phi", num(r.var_phi)},
            {"holder_seminorm", num(r.holder_seminorm)},
            {"sigma", r.sigma},
            {"theta", r.theta},
            {"alpha", r.alpha},
            {"delta", r.delta},
            {"n_tilde_mix", r.n_tilde_mix},
            {"n_tilde_hyp", r.n_tilde_hyp},
            {"N", r.N},
            {"m", r.m},
            {"q", r.q},
            {"gamma", num(r.gamma)},
            {"lambda_hat", num(r.lambda_hat)},
            {"lambda_hat_plain", num(r.lambda_hat_plain)},
            {"remark_active", r.remark_active},
            {"passes_star", r.passes_star},
            {"passes_double_star", r.passes_double_star},
            {"passes_small_variation", r.passes_small_variation},
            {"note", r.note}};
}

struct Context {
    RunConfig cfg;
    std::string hash;
    std::string subcommand;
    MapPtr f;
    Potential pot;
    fs::path out;
    std::optional<SmallnessReport> report;
    std::string certificate_error;

    bool certified() const {
        return report && report->passes_star && report->passes_double_star && report->passes_small_variation;
    }

    CertifyOptions certify_options() const {
        CertifyOptions o;
        o.sigma = cfg.cone.sigma;
        o.alpha = cfg.cone.alpha;
        o.delta = cfg.cone.delta;
        o.q = cfg.cone.q;
        o.resolution = cfg.resolution;
        o.seed = cfg.seed;
        return o;
    }

    // Certificates are evaluated for every subcommand; a failure to compute
    // them is recorded rather than aborting a non-certify run.
    void certify(bool rethrow) {
        try {
            report = certify_smallness(*f, pot, certify_options());
        } catch (const NumericalError& e) {
            if (rethrow) throw;
            certificate_error = std::string(e.kind()) + ": " + e.what();
        }
    }

    json header() const {
        json j;
        j["subcommand"] = subcommand;
        j["version"] = version();
        j["config_hash"] = hash;
        j["seed"] = cfg.seed;
        j["config"] = to_json(cfg);
        json c;
        if (report) {
            c["passes_star"] = report->passes_star;
            c["passes_double_star"] = report->passes_double_star;
            c["passes_small_variation"] = report->passes_small_variation;
            c["lambda_hat"] = num(report->lambda_hat);
        } else {
            c["error"] = certificate_error;
        }
        c["certified"] = certified();
        j["certificates"] = c;
        j["label"] = certified() ? kCertified : kOutside;
        return j;
    }

    void emit(const json& j) const {
        const std::string text = j.dump(2) + "\n";
        write_atomic(out / (subcommand + ".json"), text);
        std::cout << text;
    }

    void emit_csv(const std::string& name, const Csv& c) const { write_atomic(out / name, c.text()); }
};

SpectralData solve(const DiscretizedOperator& op) { return power_iterate(op); }

json spectral_json(const DiscretizedOperator& op, const SpectralData& d) {
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i < op.resolution(); ++i)
        for (int b = 0; b < op.map().degree(); ++b) {
            lo = std::min(lo, op.weight(i, b));
            hi = std::max(hi, op.weight(i, b));
        }
    const double deg = op.map().degree();
    return {{"lambda", d.lambda},
            {"pressure", d.pressure()},
            {"gap_ratio", d.gap_ratio},
            {"iterations", d.iterations},
            {"resolution", op.resolution()},
            {"residuals", {{"eigen_h", d.residuals.eigen_h}, {"eigen_nu", d.residuals.eigen_nu}}},
            {"spectral_bounds",
             {{"lower", deg * lo},
              {"upper", deg * hi},
              {"hold", deg * lo * (1 - 1e-12) <= d.lambda && d.lambda <= deg * hi * (1 + 1e-12)}}}};
}

void cmd_pressure(Context& c, bool fields) {
    DiscretizedOperator op(c.f, c.pot, c.cfg.resolution);
    const SpectralData d = solve(op);
    json j = c.header();
    j.update(spectral_json(op, d));
    if (fields) {
        Csv csv({"x", "h", "nu_weight", "mu_weight"});
        for (int i = 0; i < op.resolution(); ++i)
            csv.row({cell(op.center(i)), cell(d.h[i]), cell(d.nu[i]), cell(d.mu[i])});
        c.emit_csv("equilibrium.csv", csv);
    }
    c.emit(j);
}

void cmd_gap(Context& c) {
    DiscretizedOperator op(c.f, c.pot, c.cfg.resolution);
    const SpectralData d = solve(op);
    json j = c.header();
    j["lambda"] = d.lambda;
    j["gap_ratio"] = d.gap_ratio;
    j["pressure_spectral"] = d.pressure();
    j["pressure_separated"] = pressure_via_separated_sets(*c.f, c.pot, 16);
    const E0Contraction e0 = e0_contraction(d, op, 8, 40, c.cfg.seed);
    j["e0_contraction_per_step"] = e0.per_step;
    const EigenprojectionResult e = eigenprojection_contour(op, d, 64);
    j["quad_points"] = e.quad_points;
    j["contour_radius"] = e.radius;
    j["idempotency_defect"] = e.idempotency_defect;
    j["agreement_defect"] = e.agreement_defect;
    j["commutation_defect"] = e.commutation_defect;
    c.emit(j);
}

ConeParams cone_params(const Context& c, int N) {
    ConeParams p{c.cfg.cone.k, c.cfg.cone.delta, c.cfg.cone.alpha};
    if (p.k <= 0.0) {
        const GridFunction g = c.pot.on_grid(c.f->space().kind, c.cfg.resolution);
        p.k = default_cone_k(grid_holder_seminorm(g, p.alpha, p.delta), g.min(), c.f->degree(), N);
    }
    return p;
}

void cmd_cone(Context& c) {
    const int N = c.cfg.cone.N > 0 ? c.cfg.cone.N : (c.report ? c.report->N : 0);
    if (N < 1) throw ConfigError("cone-check needs cone.N or a computable smallness report");
    const ConeParams p = cone_params(c, N);
    const double lam_hat = c.report ? c.report->lambda_hat : INFINITY;
    DiscretizedOperator op(c.f, c.pot, c.cfg.resolution);
    const InvarianceResult inv = cone_invariance_check(op, p, N, c.cfg.cone.trials, lam_hat, c.cfg.seed);
    const ContractionResult con = contraction_check(op, p, N, c.cfg.cone.pairs, c.cfg.seed + 1);
    json j = c.header();
    j["k"] = p.k;
    j["delta"] = p.delta;
    j["alpha"] = p.alpha;
    j["N"] = N;
    j["lambda_hat"] = num(lam_hat);
    j["all_mapped"] = inv.all_mapped;
    j["worst_ratio"] = inv.worst_ratio;
    j["delta_diam"] = num(con.delta_diam);
    j["max_observed_factor"] = num(con.max_observed_factor);
    j["contraction_passes"] = con.passes();
    Csv csv({"pair", "theta_before", "theta_after", "factor"});
    for (std::size_t i = 0; i < con.theta_before.size(); ++i) {
        const double b = con.theta_before[i], a = con.theta_after[i];
        csv.row({std::to_string(i), cell(b), cell(a), cell(b > 0.0 ? a / b : NAN)});
    }
    c.emit_csv("cone_pairs.csv", csv);
    c.emit(j);
}

void cmd_hyptimes(Context& c) {
    const double sigma = c.cfg.cone.sigma;
    const int horizon = c.cfg.horizons.hyperbolic;
    auto rng = block_rng(c.cfg.seed, 0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Csv csv({"orbit", "n", "is_hyperbolic", "prefix_average"});
    double dmin = INFINITY, dmax = 0.0, dsum = 0.0;
    int proxy_pass = 0;
    for (int o = 0; o < c.cfg.samples.orbits; ++o) {
        const OrbitExpansionTrace t = make_trace(*c.f, U(rng), horizon);
        int count = 0;
        for (int n = 1; n <= horizon; ++n) {
            const bool h = is_hyperbolic_time(t, n, sigma);
            count += h;
            csv.row({std::to_string(o), std::to_string(n), h ? "1" : "0", cell(t.prefix_avg[n - 1])});
        }
        const double dens = double(count) / horizon;
        dmin = std::min(dmin, dens);
        dmax = std::max(dmax, dens);
        dsum += dens;
        proxy_pass += sigma_membership_proxy(t, sigma);
    }
    json j = c.header();
    j["sigma"] = sigma;
    j["horizon"] = horizon;
    j["orbits"] = c.cfg.samples.orbits;
    j["n_tilde_mix"] = mixing_time(*c.f, c.cfg.cone.delta).n_tilde;
    j["density_mean"] = c.cfg.samples.orbits > 0 ? dsum / c.cfg.samples.orbits : 0.0;
    j["density_min"] = num(dmin);
    j["density_max"] = dmax;
    j["proxy_pass_fraction"] = c.cfg.samples.orbits > 0 ? double(proxy_pass) / c.cfg.samples.orbits : 0.0;
    c.emit_csv("hyptimes.csv", csv);
    c.emit(j);
}

void cmd_decay(Context& c) {
    DiscretizedOperator op(c.f, c.pot, c.cfg.resolution);
    const SpectralData d = solve(op);
    const PointFn obs = build_observable(c.cfg.observable, c.f);
    const GridFunction g = GridFunction::sample(op.kind(), op.resolution(), obs);
    const int n_max = c.cfg.horizons.correlation;
    const CorrelationSeries s = correlation(d, op, g, g, n_max);
    std::optional<McCorrelation> mc;
    if (c.cfg.samples.mc > 0) {
        const MuSampler sampler(op, d);
        mc = mc_correlation(sampler, obs, obs, s.mean_phi, s.mean_psi, n_max, c.cfg.samples.mc, c.cfg.seed,
                            c.cfg.threads);
    }
    Csv csv({"n", "C_n", "mc_value", "mc_std_error"});
    for (int n = 0; n <= n_max; ++n)
        csv.row({std::to_string(n), cell(s.values[n]), mc ? cell(mc->values[n]) : "",
                 mc ? cell(mc->std_errors[n]) : ""});
    json j = c.header();
    j["observable"] = c.cfg.observable;
    j["K_hat"] = s.K_hat;
    j["tau_hat"] = s.tau_hat;
    j["fit_quality"] = s.fit_quality;
    j["fit_points"] = s.fit_points;
    j["gap_ratio"] = d.gap_ratio;
    j["mc_samples"] = c.cfg.samples.mc;
    c.emit_csv("decay.csv", csv);
    c.emit(j);
}

void cmd_clt(Context& c) {
    DiscretizedOperator op(c.f, c.pot, c.cfg.resolution);
    const SpectralData d = solve(op);
    const PointFn obs = build_observable(c.cfg.observable, c.f);
    const GridFunction g = GridFunction::sample(op.kind(), op.resolution(), obs);
    const CltReport r = clt_variance(d, op, g);
    json j = c.header();
    j["observable"] = c.cfg.observable;
    j["sigma2"] = r.sigma2;
    j["truncation"] = r.truncation;
    j["tail_bound"] = r.tail_bound;
    j["K_hat"] = r.K_hat;
    j["tau_hat"] = r.tau_hat;
    j["mean"] = r.mean;
    j["ks_distance"] = nullptr;
    j["samples"] = c.cfg.samples.clt;
    j["birkhoff_length"] = c.cfg.horizons.birkhoff;
    if (r.sigma2 > 1e-12 && c.cfg.samples.clt > 0) {
        const MuSampler sampler(op, d);
        const EmpiricalClt e = clt_empirical(sampler, obs, r.mean, r.sigma2, c.cfg.samples.clt,
                                             c.cfg.horizons.birkhoff, c.cfg.seed, c.cfg.threads);
        j["ks_distance"] = e.ks_distance;
        j["sample_variance"] = e.sample_variance;
    } else if (!(r.sigma2 > 1e-12)) {
        j["note"] = "degenerate variance: empirical CLT skipped";
    }
    Csv csv({"n", "C_n"});
    for (std::size_t n = 0; n < r.correlations.size(); ++n) csv.row({std::to_string(n), cell(r.correlations[n])});
    c.emit_csv("clt.csv", csv);
    c.emit(j);
}

void cmd_gibbs(Context& c) {
    DiscretizedOperator op(c.f, c.pot, c.cfg.resolution);
    const SpectralData d = solve(op);
    auto rng = block_rng(c.cfg.seed, 0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> sample(c.cfg.samples.orbits);
    for (double& x : sample) x = U(rng);
    const int H = c.cfg.horizons.gibbs;
    const GibbsReport g = gibbs_check(*c.f, c.pot, d, sample, c.cfg.cone.epsilon, H, c.cfg.cone.sigma);
    json j = c.header();
    j["epsilon"] = c.cfg.cone.epsilon;
    j["horizon"] = H;
    j["sigma"] = c.cfg.cone.sigma;
    j["min_ratio"] = num(g.min_ratio);
    j["max_ratio"] = num(g.max_ratio);
    j["spread"] = num(g.max_ratio / g.min_ratio);
    j["spread_first_half"] = num(g.spread(1, H / 2));
    j["spread_second_half"] = num(g.spread(H / 2 + 1, H));
    j["points_used"] = g.points_used;
    j["points_rejected"] = g.points_rejected;
    Csv csv({"x", "n", "ball_measure", "ratio"});
    for (const auto& e : g.entries) csv.row({cell(e.x), std::to_string(e.n), cell(e.ball_measure), cell(e.ratio)});
    c.emit_csv("gibbs.csv", csv);
    c.emit(j);
}

json certificate_json(const SmoothnessCertificate& s) {
    json rows = json::array();
    for (const auto& o : s.orders) {
        json v = json::array();
        for (double x : o.values) v.push_back(num(x));
        rows.push_back({{"order", o.order},
                        {"deltas", o.deltas},
                        {"values", v},
                        {"ratio", num(o.ratio)},
                        {"noise_floor", o.noise_floor},
                        {"at_noise_floor", o.at_noise_floor},
                        {"passes", o.passes}});
    }
    return {{"center", s.center}, {"all_pass", s.all_pass()}, {"orders", rows}};
}

void cmd_analyticity(Context& c) {
    const SweepSpec& a = c.cfg.analyticity;
    const ParameterSweep s =
        sweep(c.f, geometric_family(c.f), a.t_min, a.t_max, a.steps, c.cfg.resolution, a.warm_start, "geometric",
              c.cfg.threads);
    const int n = c.cfg.resolution;
    const MapPtr f = c.f;
    const GridFunction dphi =
        GridFunction::sample(f->space().kind, n, [&](double x) { return -std::log(std::abs(f->derivative(x))); });
    const DerivativeCheck dc = derivative_check(s, dphi.values());

    Csv csv({"t", "lambda", "pressure", "gap_ratio", "dP_fd", "dP_formula", "h_step_norm", "nu_tv_step"});
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        const SweepPoint& p = s.points[i];
        double fd = NAN, fm = NAN;
        for (std::size_t k = 0; k < dc.t.size(); ++k)
            if (dc.t[k] == p.t) {
                fd = dc.dP_fd[k];
                fm = dc.dP_formula[k];
            }
        csv.row({cell(p.t), cell(p.lambda), cell(p.pressure), cell(p.gap_ratio), cell(fd), cell(fm),
                 i < s.h_step_norm.size() ? cell(s.h_step_norm[i]) : "",
                 i < s.nu_tv_step.size() ? cell(s.nu_tv_step[i]) : ""});
    }

    json j = c.header();
    j["resolution"] = n;
    j["dt"] = s.dt;
    j["warm_start"] = a.warm_start;
    int failed = 0;
    for (const auto& p : s.points) failed += !p.converged;
    j["failed_points"] = failed;
    j["derivative_max_defect"] = dc.max_defect;

    // Smoothness probes at the sweep midpoint with spacings 4dt, 2dt, dt.
    const int mid = static_cast<int>(s.points.size()) / 2;
    if (mid >= 8 && s.dt > 0.0) {
        try {
            const double t0 = s.points[mid].t;
            j["smoothness"] = certificate_json(smoothness_certificate(s, t0, {4 * s.dt, 2 * s.dt, s.dt}));
        } catch (const NumericalError& e) {
            j["smoothness"] = {{"error", e.what()}};
        }
    } else {
        j["smoothness"] = {{"error", "sweep too short: need at least 17 points"}};
    }
    j["kinked_control"] = certificate_json(kinked_control());

    if (a.identities) {
        json ids = json::array();
        for (double t : {a.t_min, a.t_max}) {
            DiscretizedOperator op(c.f, Potential::geometric(c.f, t), n);
            const SpectralData d = solve(op);
            const ProjectionIdentities r = projection_identities(op, d);
            ids.push_back({{"t", t},
                           {"lambda_quotient", r.lambda_quotient},
                           {"lambda_defect", r.lambda_defect},
                           {"h_defect", r.h_defect},
                           {"nu_defect", r.nu_defect}});
        }
        j["projection_identities"] = ids;
    }
    c.emit_csv("analyticity.csv", csv);
    c.emit(j);
}

void cmd_skew(Context& c) {
    const SkewSpec& k = c.cfg.skew;
    const SkewSystem sys(c.f, k.fiber_rate, k.fiber_amplitude, k.fiber_fixed_point);
    const SkewPotential Phi = build_skew_potential(c.pot, k.fiber_potential_amplitude);
    const Potential phi = induce_potential(sys, Phi, c.pot.alpha());
    DiscretizedOperator op(c.f, phi, c.cfg.resolution);
    const SpectralData d = solve(op);
    const MuSampler sampler(op, d);
    const FiberChecks fc = fiber_checks(sys);
    const VariationCheck vc = variation_check(sys, Phi);
    const PushforwardReport pf = pushforward_check(sys, sampler, d.mu, c.cfg.samples.skew, c.cfg.horizons.burn_in,
                                                   c.cfg.horizons.pushforward, c.cfg.seed, c.cfg.threads);
    SkewStatsParams p;
    p.samples = c.cfg.samples.skew;
    p.burn_in = c.cfg.horizons.burn_in;
    p.lag_max = c.cfg.horizons.correlation;
    p.clt_samples = c.cfg.samples.clt;
    p.birkhoff_n = c.cfg.horizons.birkhoff;
    p.seed = c.cfg.seed;
    p.threads = c.cfg.threads;
    const SkewStats st = skew_decay_and_clt(sys, sampler, build_skew_observable(k.observable), p);

    json j = c.header();
    j["observable"] = k.observable;
    j["fiber"] = {{"lipschitz", fc.lipschitz},
                  {"fixed_defect", fc.fixed_defect},
                  {"line_defect", fc.line_defect},
                  {"contraction_ok", fc.contraction_ok},
                  {"fixed_ok", fc.fixed_ok}};
    j["variation"] = {{"var_phi", vc.var_phi}, {"var_Phi", vc.var_Phi}, {"holds", vc.holds()}};
    j["cdf_distance"] = pf.cdf_distance;
    j["burn_in"] = pf.burn_in;
    j["pushforward_horizon"] = pf.horizon;
    j["mean"] = st.mean;
    j["tau_F"] = st.tau_F;
    j["tau_F_se"] = num(st.tau_F_se);
    j["sigma2_F"] = st.sigma2_F;
    j["tail_bound"] = num(st.tail_bound);
    j["sigma2_batch"] = num(st.sigma2_batch);
    j["sigma2_batch_se"] = num(st.sigma2_batch_se);
    j["ks_F"] = num(st.ks_F);
    j["degenerate"] = st.degenerate;
    // Base-only observables reduce to the base system; report its spectral values.
    if (k.observable == "x" || k.observable == "cos2pi_x") {
        const PointFn base = k.observable == "x" ? PointFn([](double x) { return x; })
                                                 : PointFn([](double x) { return std::cos(2.0 * M_PI * x); });
        const GridFunction g = GridFunction::sample(op.kind(), op.resolution(), base);
        const CltReport r = clt_variance(d, op, g);
        j["base_tau"] = r.tau_hat;
        j["base_sigma2"] = r.sigma2;
        // The same log-linear fit restricted to the lags behind tau_F.
        const CorrelationSeries bc = correlation(d, op, g, g, p.lag_max);
        j["base_tau_same_window"] = st.fit_points >= 2 ? json(fit_decay_window(bc.values, st.fit_points).tau) : json(nullptr);
        j["fit_points"] = st.fit_points;
    }
    Csv csv({"n", "C_n", "std_error"});
    for (std::size_t n = 0; n < st.correlations.size(); ++n)
        csv.row({std::to_string(n), cell(st.correlations[n]), cell(st.std_errors[n])});
    c.emit_csv("skew.csv", csv);
    c.emit(j);
}

void cmd_certify(Context& c) {
    json j = c.header();
    j["report"] = to_json(*c.report);
    c.emit(j);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transfer operators and equilibrium states for non-uniformly expanding interval maps"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version()));

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> resolution, threads;
    std::optional<std::string> out;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--seed", seed, "RNG seed (overrides config and RPF_SEED)");
    app.add_option("--resolution", resolution, "grid resolution (overrides config and RPF_RESOLUTION)");
    app.add_option("--out", out, "output directory (overrides config and RPF_OUT)");
    app.add_option("--threads", threads, "worker threads (overrides config and RPF_THREADS)");

    const std::vector<std::pair<std::string, std::string>> subs = {
        {"pressure", "leading eigenvalue and pressure"},
        {"equilibrium", "eigendata with h, nu and mu fields as CSV"},
        {"gap", "spectral gap and contour eigenprojection"},
        {"cone-check", "cone invariance and projective contraction"},
        {"hyptimes", "hyperbolic times along sampled orbits"},
        {"decay", "correlation decay"},
        {"clt", "Green-Kubo variance and empirical CLT"},
        {"gibbs", "Gibbs ratios at hyperbolic times"},
        {"analyticity", "parameter sweep and smoothness probes"},
        {"skew", "skew-product statistics"},
        {"certify", "smallness certificates"}};
    for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    Context c;
    c.subcommand = app.get_subcommands().front()->get_name();
    try {
        c.cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        apply_env_overrides(c.cfg);
        if (seed) c.cfg.seed = *seed;
        if (resolution) c.cfg.resolution = *resolution;
        if (out) c.cfg.output_dir = *out;
        if (threads) c.cfg.threads = *threads;
        c.cfg = config_from_json(to_json(c.cfg));  // re-validate after overrides
        set_default_threads(c.cfg.threads);
        c.hash = config_hash(c.cfg);
        c.out = c.cfg.output_dir;
        c.f = build_map(c.cfg.map);
        c.pot = build_potential(c.cfg.potential, c.f);
        build_observable(c.cfg.observable, c.f);
        build_skew_observable(c.cfg.skew.observable);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        c.certify(c.subcommand == "certify");
        const std::string& s = c.subcommand;
        if (s == "pressure") cmd_pressure(c, false);
        else if (s == "equilibrium") cmd_pressure(c, true);
        else if (s == "gap") cmd_gap(c);
        else if (s == "cone-check") cmd_cone(c);
        else if (s == "hyptimes") cmd_hyptimes(c);
        else if (s == "decay") cmd_decay(c);
        else if (s == "clt") cmd_clt(c);
        else if (s == "gibbs") cmd_gibbs(c);
        else if (s == "analyticity") cmd_analyticity(c);
        else if (s == "skew") cmd_skew(c);
        else if (s == "certify") cmd_certify(c);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        const auto* ne = dynamic_cast<const NumericalError*>(&e);
        json j;
        j["subcommand"] = c.subcommand;
        j["version"] = version();
        j["config_hash"] = c.hash;
        j["seed"] = c.cfg.seed;
        j["error"] = ne ? ne->kind() : "PreconditionError";
        j["message"] = e.what();
        const std::string text = j.dump(2) + "\n";
        try {
            write_atomic(c.out / (c.subcommand + ".error.json"), text);
        } catch (const std::exception&) {
        }
        std::cout << text;
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
