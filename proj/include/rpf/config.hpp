#pragma once

// Run configuration: JSON round trip, environment overrides, fixture
// construction and a stable content hash.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rpf/dynamics.hpp"
#include "rpf/potential.hpp"
#include "rpf/skew.hpp"

#ifndef RPF_VERSION
#define RPF_VERSION "0.0.0"
#endif

namespace rpf {

using json = nlohmann::json;

inline const char* version() { return RPF_VERSION; }

struct MapSpec {
    std::string family = "doubling";  // doubling | intermittent | perturbed_expanding | custom_piecewise_linear
    double beta = 0.5;
    double epsilon = 0.0;
    std::vector<double> breakpoints;
    std::vector<bool> decreasing;
    std::string space = "circle";  // custom_piecewise_linear only
};

struct PotentialSpec {
    std::string family = "constant";  // constant | geometric
    double value = 0.0;
    double t = 0.0;
    double alpha = 0.5;
};

struct ConeSpec {
    double k = 0.0;  // 0 selects the default k
    double delta = 0.25;
    double alpha = 0.5;
    double sigma = 0.9;
    int q = 1;
    int N = 0;              // iterate count; 0 takes N from the smallness report
    int trials = 32;
    int pairs = 64;
    double epsilon = 0.125;  // Gibbs ball radius
};

struct Horizons {
    int hyperbolic = 500;
    int gibbs = 30;
    int correlation = 60;
    int birkhoff = 10000;
    int burn_in = 100;
    int pushforward = 10;
};

struct Samples {
    int orbits = 100;
    long clt = 100000;
    long mc = 1000000;
    long skew = 100000;
};

struct SweepSpec {
    double t_min = -0.2;
    double t_max = 0.2;
    int steps = 41;
    bool warm_start = true;
    bool identities = true;  // eigenprojection identities at the sweep endpoints
};

struct SkewSpec {
    double fiber_rate = 0.5;
    double fiber_amplitude = 0.0;
    double fiber_fixed_point = 0.0;
    double fiber_potential_amplitude = 0.0;  // Phi(x, y) = phi(x) + a sin(2 pi y)
    std::string observable = "x";            // x | cos2pi_x | sin2pi_y | constant
};

struct RunConfig {
    MapSpec map;
    PotentialSpec potential;
    int resolution = 4096;
    ConeSpec cone;
    Horizons horizons;
    Samples samples;
    std::string observable = "cos2pi";  // cos2pi | sin2pi | x | constant | coboundary_cos2pi
    SweepSpec analyticity;
    SkewSpec skew;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    int threads = 1;
};

namespace detail {

template <class T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : keys) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
    json j;
    j["map"] = {{"family", c.map.family},     {"beta", c.map.beta},   {"epsilon", c.map.epsilon},
                {"breakpoints", c.map.breakpoints}, {"decreasing", c.map.decreasing}, {"space", c.map.space}};
    j["potential"] = {{"family", c.potential.family},
                      {"value", c.potential.value},
                      {"t", c.potential.t},
                      {"alpha", c.potential.alpha}};
    j["resolution"] = c.resolution;
    j["cone"] = {{"k", c.cone.k},         {"delta", c.cone.delta},   {"alpha", c.cone.alpha}, {"sigma", c.cone.sigma},
                 {"q", c.cone.q},         {"N", c.cone.N},           {"trials", c.cone.trials},
                 {"pairs", c.cone.pairs}, {"epsilon", c.cone.epsilon}};
    j["horizons"] = {{"hyperbolic", c.horizons.hyperbolic}, {"gibbs", c.horizons.gibbs},
                     {"correlation", c.horizons.correlation}, {"birkhoff", c.horizons.birkhoff},
                     {"burn_in", c.horizons.burn_in},       {"pushforward", c.horizons.pushforward}};
    j["samples"] = {{"orbits", c.samples.orbits}, {"clt", c.samples.clt}, {"mc", c.samples.mc},
                    {"skew", c.samples.skew}};
    j["observable"] = c.observable;
    j["analyticity"] = {{"t_min", c.analyticity.t_min},
                        {"t_max", c.analyticity.t_max},
                        {"steps", c.analyticity.steps},
                        {"warm_start", c.analyticity.warm_start},
                        {"identities", c.analyticity.identities}};
    j["skew"] = {{"fiber_rate", c.skew.fiber_rate},
                 {"fiber_amplitude", c.skew.fiber_amplitude},
                 {"fiber_fixed_point", c.skew.fiber_fixed_point},
                 {"fiber_potential_amplitude", c.skew.fiber_potential_amplitude},
                 {"observable", c.skew.observable}};
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    return j;
}

inline RunConfig config_from_json(const json& j) {
    using detail::take;
    RunConfig c;
    try {
        detail::reject_unknown(j, {"map", "potential", "resolution", "cone", "horizons", "samples", "observable",
                                   "analyticity", "skew", "seed", "output_dir", "threads"},
                               "config");
        if (j.contains("map")) {
            const json& m = j["map"];
            detail::reject_unknown(m, {"family", "beta", "epsilon", "breakpoints", "decreasing", "space"}, "map");
            take(m, "family", c.map.family);
            take(m, "beta", c.map.beta);
            take(m, "epsilon", c.map.epsilon);
            take(m, "breakpoints", c.map.breakpoints);
            take(m, "decreasing", c.map.decreasing);
            take(m, "space", c.map.space);
        }
        if (j.contains("potential")) {
            const json& p = j["potential"];
            detail::reject_unknown(p, {"family", "value", "t", "alpha"}, "potential");
            take(p, "family", c.potential.family);
            take(p, "value", c.potential.value);
            take(p, "t", c.potential.t);
            take(p, "alpha", c.potential.alpha);
        }
        take(j, "resolution", c.resolution);
        if (j.contains("cone")) {
            const json& p = j["cone"];
            detail::reject_unknown(p, {"k", "delta", "alpha", "sigma", "q", "N", "trials", "pairs", "epsilon"},
                                   "cone");
            take(p, "k", c.cone.k);
            take(p, "delta", c.cone.delta);
            take(p, "alpha", c.cone.alpha);
            take(p, "sigma", c.cone.sigma);
            take(p, "q", c.cone.q);
            take(p, "N", c.cone.N);
            take(p, "trials", c.cone.trials);
            take(p, "epsilon", c.cone.epsilon);
            take(p, "pairs", c.cone.pairs);
        }
        if (j.contains("horizons")) {
            const json& p = j["horizons"];
            detail::reject_unknown(p, {"hyperbolic", "gibbs", "correlation", "birkhoff", "burn_in", "pushforward"},
                                   "horizons");
            take(p, "hyperbolic", c.horizons.hyperbolic);
            take(p, "gibbs", c.horizons.gibbs);
            take(p, "correlation", c.horizons.correlation);
            take(p, "birkhoff", c.horizons.birkhoff);
            take(p, "burn_in", c.horizons.burn_in);
            take(p, "pushforward", c.horizons.pushforward);
        }
        if (j.contains("samples")) {
            const json& p = j["samples"];
            detail::reject_unknown(p, {"orbits", "clt", "mc", "skew"}, "samples");
            take(p, "orbits", c.samples.orbits);
            take(p, "clt", c.samples.clt);
            take(p, "mc", c.samples.mc);
            take(p, "skew", c.samples.skew);
        }
        take(j, "observable", c.observable);
        if (j.contains("analyticity")) {
            const json& p = j["analyticity"];
            detail::reject_unknown(p, {"t_min", "t_max", "steps", "warm_start", "identities"}, "analyticity");
            take(p, "t_min", c.analyticity.t_min);
            take(p, "t_max", c.analyticity.t_max);
            take(p, "steps", c.analyticity.steps);
            take(p, "warm_start", c.analyticity.warm_start);
            take(p, "identities", c.analyticity.identities);
        }
        if (j.contains("skew")) {
            const json& p = j["skew"];
            detail::reject_unknown(p,
                                   {"fiber_rate", "fiber_amplitude", "fiber_fixed_point", "fiber_potential_amplitude",
                                    "observable"},
                                   "skew");
            take(p, "fiber_rate", c.skew.fiber_rate);
            take(p, "fiber_amplitude", c.skew.fiber_amplitude);
            take(p, "fiber_fixed_point", c.skew.fiber_fixed_point);
            take(p, "fiber_potential_amplitude", c.skew.fiber_potential_amplitude);
            take(p, "observable", c.skew.observable);
        }
        take(j, "seed", c.seed);
        take(j, "output_dir", c.output_dir);
        take(j, "threads", c.threads);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.resolution < 16) throw ConfigError("resolution must be at least 16");
    if (c.threads < 1) throw ConfigError("threads must be at least 1");
    if (!(c.cone.delta > 0.0) || !(c.cone.alpha > 0.0 && c.cone.alpha <= 1.0) || c.cone.k < 0.0)
        throw ConfigError("cone parameters need delta > 0, 0 < alpha <= 1 and k >= 0");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

// Environment overrides with prefix RPF_: SEED, RESOLUTION, OUT, THREADS.
inline void apply_env_overrides(RunConfig& c, const char* prefix = "RPF_") {
    auto get = [&](const char* name) -> const char* { return std::getenv((std::string(prefix) + name).c_str()); };
    try {
        if (const char* v = get("SEED")) c.seed = std::stoull(v);
        if (const char* v = get("RESOLUTION")) c.resolution = std::stoi(v);
        if (const char* v = get("OUT")) c.output_dir = v;
        if (const char* v = get("THREADS")) c.threads = std::stoi(v);
    } catch (const std::exception&) {
        throw ConfigError("malformed RPF_ environment override");
    }
}

// 64-bit FNV-1a over the canonical (key-sorted, compact) JSON text.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Identifies the computation: output_dir and threads do not change any
// number and are left out.
inline std::string config_hash(const RunConfig& c) {
    json j = to_json(c);
    j.erase("output_dir");
    j.erase("threads");
    std::ostringstream o;
    o << std::hex;
    o.width(16);
    o.fill('0');
    o << fnv1a(j.dump());
    return o.str();
}

inline MapPtr build_map(const MapSpec& m) {
    if (m.family == "doubling") return make_doubling();
    if (m.family == "intermittent") return make_intermittent(m.beta);
    if (m.family == "perturbed_expanding") return make_perturbed_expanding(m.epsilon);
    if (m.family == "custom_piecewise_linear") {
        SpaceKind kind;
        if (m.space == "circle") kind = SpaceKind::circle;
        else if (m.space == "interval") kind = SpaceKind::interval;
        else throw ConfigError("map.space must be circle or interval");
        return make_piecewise_linear(m.breakpoints, kind, m.decreasing);
    }
    throw ConfigError("unknown map family '" + m.family + "'");
}

inline Potential build_potential(const PotentialSpec& p, const MapPtr& f) {
    if (p.family == "constant") return Potential::constant(p.value, p.alpha);
    if (p.family == "geometric") return Potential::geometric(f, p.t, p.alpha);
    throw ConfigError("unknown potential family '" + p.family + "'");
}

// Observables by name; `coboundary_cos2pi` is u o f - u with u = cos 2 pi x.
inline std::function<double(double)> build_observable(const std::string& name, const MapPtr& f) {
    if (name == "cos2pi") return [](double x) { return std::cos(2.0 * M_PI * x); };
    if (name == "sin2pi") return [](double x) { return std::sin(2.0 * M_PI * x); };
    if (name == "x") return [](double x) { return x; };
    if (name == "constant") return [](double) { return 1.0; };
    if (name == "coboundary_cos2pi")
        return [f](double x) { return std::cos(2.0 * M_PI * f->evaluate(x)) - std::cos(2.0 * M_PI * x); };
    throw ConfigError("unknown observable '" + name + "'");
}

inline SkewObservable build_skew_observable(const std::string& name) {
    if (name == "x") return [](double x, double) { return x; };
    if (name == "cos2pi_x") return [](double x, double) { return std::cos(2.0 * M_PI * x); };
    if (name == "sin2pi_y") return [](double, double y) { return std::sin(2.0 * M_PI * y); };
    if (name == "constant") return [](double, double) { return 1.0; };
    throw ConfigError("unknown skew observable '" + name + "'");
}

// Phi(x, y) = phi(x) + a sin(2 pi y) for the base potential phi.
inline SkewPotential build_skew_potential(const Potential& base, double a) {
    return [base, a](double x, double y, int b) { return base.eval(x, b) + a * std::sin(2.0 * M_PI * y); };
}

}  // namespace rpf
