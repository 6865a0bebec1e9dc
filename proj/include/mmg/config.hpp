#pragma once

///
/// \file config.hpp
///
/// JSON run configuration. Parsing is strict: unknown keys and wrongly
/// typed values raise ConfigError naming the field. Serialization writes
/// every field with its resolved value, so parse(serialize(c)) == c.
///
/// {
///   "problem":    {"builtin": "rl-linear", "params": {"n": 2, "kappa": 1.1, "a": 2}}
///                 or {"generic": {"name", "d", "n", "m", "p", "s", "ell", "f", "h"}},
///   "domain":     {"lo": [-1, -1], "hi": [1, 1]},
///   "degree":     6,
///   "quadrature": 0,
///   "solver":     {"tol_F_l1", "max_iter", "backend", "rank_cutoff", "damping",
///                  "divergence_factor", "stall_limit"},
///   "rom":        {"gain": {"kind", "c", "mu", "G", "margin"}, "w0", "r0", "x0"},
///   "simulation": {"t0", "t_end", "method", "abs_tol", "rel_tol", "fixed_step",
///                  "steady_window_fraction", "output_dt", "min_step"},
///   "residual":   {"lo", "hi", "q"},
///   "output_dir": "out"
/// }
///

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmg/errors.hpp"
#include "mmg/newton.hpp"
#include "mmg/polynomial.hpp"
#include "mmg/problem.hpp"
#include "mmg/quadrature.hpp"
#include "mmg/rom.hpp"
#include "mmg/simulator.hpp"

namespace mmg {

using json = nlohmann::ordered_json;

class ConfigError : public Error
{
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(field)
    {
    }
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct ProblemConfig
{
    std::string builtin; ///< empty when generic is set
    std::map<std::string, double> params;
    std::optional<PolynomialProblemSpec> generic;
};

struct GainConfig
{
    /// default: test3 for rl-linear, test4 for rl-vdp, stabilizing otherwise
    std::string kind = "default";
    double c = 10.0;
    double mu = 0.25;
    double margin = 0.5;
    std::vector<std::vector<double>> G;
};

struct RomConfig
{
    GainConfig gain;
    std::vector<double> w0;
    std::vector<double> r0;
    std::vector<double> x0; ///< empty means zero
};

struct ResidualConfig
{
    BoxDomain W;
    int q = 20;
};

struct RunConfig
{
    ProblemConfig problem;
    BoxDomain domain;
    int degree = 6;
    int quadrature = 0; ///< 0 selects the default order
    SolverOptions solver;
    RomConfig rom;
    SimConfig simulation;
    ResidualConfig residual;
    std::string output_dir = "out";
};

namespace detail {

inline const std::map<std::string, std::map<std::string, double>>& builtin_defaults()
{
    static const std::map<std::string, std::map<std::string, double>> table = {
        {"test1", {{"a", 2.0}}},
        {"cart-pendulum", {{"a1", 2.0}, {"a2", 3.0}, {"k", -2.0 / 3.0}}},
        {"rl-linear", {{"n", 2.0}, {"kappa", 1.1}, {"a", 2.0}}},
        {"rl-vdp", {{"n", 2.0}, {"kappa", 1.1}, {"mu", 0.25}}},
    };
    return table;
}

inline std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

inline void require_object(const json& j, const std::string& path)
{
    if (!j.is_object())
        throw ConfigError(path, "expected an object");
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed)
{
    require_object(j, path);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k))
            throw ConfigError(join(path, k), "unknown key");
}

inline double get_number(const json& j, const std::string& path)
{
    if (!j.is_number())
        throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline int get_int(const json& j, const std::string& path)
{
    if (!j.is_number_integer())
        throw ConfigError(path, "expected an integer");
    const auto v = j.get<long long>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ConfigError(path, "integer out of range");
    return static_cast<int>(v);
}

inline std::string get_string(const json& j, const std::string& path)
{
    if (!j.is_string())
        throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

inline std::vector<double> get_vector(const json& j, const std::string& path)
{
    if (!j.is_array())
        throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k)
        out.push_back(get_number(j[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

template <class F>
void opt(const json& j, const char* key, const std::string& path, F&& assign)
{
    if (j.contains(key))
        assign(j.at(key), join(path, key));
}

inline BoxDomain parse_box(const json& j, const std::string& path, std::initializer_list<const char*> extra = {})
{
    std::vector<const char*> keys{"lo", "hi"};
    keys.insert(keys.end(), extra.begin(), extra.end());
    require_object(j, path);
    for (const auto& [k, v] : j.items())
        if (std::find_if(keys.begin(), keys.end(), [&](const char* a) { return k == a; }) == keys.end())
            throw ConfigError(join(path, k), "unknown key");
    if (!j.contains("lo") || !j.contains("hi"))
        throw ConfigError(path, "needs both lo and hi");
    try {
        return BoxDomain(get_vector(j.at("lo"), join(path, "lo")), get_vector(j.at("hi"), join(path, "hi")));
    } catch (const InvalidArgument& e) {
        throw ConfigError(path, e.what());
    }
}

inline json box_json(const BoxDomain& b) { return json{{"lo", b.lo}, {"hi", b.hi}}; }

inline PolynomialMap parse_poly_map(const json& j, const std::string& path, int nvars)
{
    if (!j.is_array())
        throw ConfigError(path, "expected an array of components");
    PolynomialMap map;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string cp = path + "[" + std::to_string(i) + "]";
        if (!j[i].is_array())
            throw ConfigError(cp, "expected an array of terms");
        std::vector<Term> terms;
        for (std::size_t t = 0; t < j[i].size(); ++t) {
            const std::string tp = cp + "[" + std::to_string(t) + "]";
            check_keys(j[i][t], tp, {"exponents", "coefficient"});
            if (!j[i][t].contains("exponents") || !j[i][t].contains("coefficient"))
                throw ConfigError(tp, "needs exponents and coefficient");
            Term term;
            const auto& ex = j[i][t].at("exponents");
            if (!ex.is_array())
                throw ConfigError(join(tp, "exponents"), "expected an array of integers");
            for (std::size_t e = 0; e < ex.size(); ++e)
                term.exponents.push_back(get_int(ex[e], join(tp, "exponents") + "[" + std::to_string(e) + "]"));
            term.coefficient = get_number(j[i][t].at("coefficient"), join(tp, "coefficient"));
            terms.push_back(std::move(term));
        }
        try {
            map.emplace_back(nvars, std::move(terms));
        } catch (const InvalidArgument& e) {
            throw ConfigError(cp, e.what());
        }
    }
    return map;
}

inline json poly_map_json(const PolynomialMap& map)
{
    json out = json::array();
    for (const auto& p : map) {
        json comp = json::array();
        for (const auto& t : p.terms())
            comp.push_back(json{{"exponents", t.exponents}, {"coefficient", t.coefficient}});
        out.push_back(std::move(comp));
    }
    return out;
}

inline ProblemConfig parse_problem(const json& j, const std::string& path)
{
    check_keys(j, path, {"builtin", "params", "generic"});
    ProblemConfig pc;
    const bool has_builtin = j.contains("builtin");
    if (has_builtin == j.contains("generic"))
        throw ConfigError(path, "give exactly one of builtin or generic");
    if (has_builtin) {
        pc.builtin = get_string(j.at("builtin"), join(path, "builtin"));
        const auto& table = builtin_defaults();
        const auto it = table.find(pc.builtin);
        if (it == table.end())
            throw ConfigError(join(path, "builtin"),
                              "unknown problem '" + pc.builtin +
                                  "' (test1, cart-pendulum, rl-linear, rl-vdp)");
        pc.params = it->second;
        if (j.contains("params")) {
            const auto& p = j.at("params");
            require_object(p, join(path, "params"));
            for (const auto& [k, v] : p.items()) {
                const auto fp = join(join(path, "params"), k);
                if (!pc.params.count(k))
                    throw ConfigError(fp, "unknown parameter for " + pc.builtin);
                pc.params[k] = k == "n" ? get_int(v, fp) : get_number(v, fp);
            }
        }
        return pc;
    }
    if (j.contains("params"))
        throw ConfigError(join(path, "params"), "only valid with builtin");
    const auto& g = j.at("generic");
    const auto gp = join(path, "generic");
    check_keys(g, gp, {"name", "d", "n", "m", "p", "s", "ell", "f", "h"});
    for (const char* k : {"d", "n", "m", "p", "s", "ell", "f", "h"})
        if (!g.contains(k))
            throw ConfigError(join(gp, k), "missing");
    PolynomialProblemSpec spec;
    if (g.contains("name"))
        spec.name = get_string(g.at("name"), join(gp, "name"));
    spec.d = get_int(g.at("d"), join(gp, "d"));
    spec.n = get_int(g.at("n"), join(gp, "n"));
    spec.m = get_int(g.at("m"), join(gp, "m"));
    spec.p = get_int(g.at("p"), join(gp, "p"));
    if (spec.d < 1 || spec.n < 1 || spec.m < 1 || spec.p < 1)
        throw ConfigError(gp, "d, n, m, p must be positive");
    spec.s = parse_poly_map(g.at("s"), join(gp, "s"), spec.d);
    spec.ell = parse_poly_map(g.at("ell"), join(gp, "ell"), spec.d);
    spec.f = parse_poly_map(g.at("f"), join(gp, "f"), spec.n + spec.m);
    spec.h = parse_poly_map(g.at("h"), join(gp, "h"), spec.n);
    pc.generic = std::move(spec);
    return pc;
}

inline json problem_json(const ProblemConfig& pc)
{
    if (pc.generic) {
        const auto& s = *pc.generic;
        return json{{"generic",
                     {{"name", s.name},
                      {"d", s.d},
                      {"n", s.n},
                      {"m", s.m},
                      {"p", s.p},
                      {"s", poly_map_json(s.s)},
                      {"ell", poly_map_json(s.ell)},
                      {"f", poly_map_json(s.f)},
                      {"h", poly_map_json(s.h)}}}};
    }
    json params = json::object();
    for (const auto& [k, v] : pc.params) {
        if (k == "n")
            params[k] = static_cast<int>(v);
        else
            params[k] = v;
    }
    return json{{"builtin", pc.builtin}, {"params", params}};
}

} // namespace detail

inline Problem build_problem(const ProblemConfig& pc)
{
    try {
        if (pc.generic)
            return make_polynomial_problem(*pc.generic);
        const auto& p = pc.params;
        if (pc.builtin == "test1")
            return make_test1(p.at("a"));
        if (pc.builtin == "cart-pendulum")
            return make_cart_pendulum(p.at("a1"), p.at("a2"), p.at("k"));
        if (pc.builtin == "rl-linear")
            return make_rl_oscillator(static_cast<int>(p.at("n")), p.at("kappa"), p.at("a"));
        if (pc.builtin == "rl-vdp")
            return make_rl_vdp(static_cast<int>(p.at("n")), p.at("kappa"), p.at("mu"));
    } catch (const InvalidArgument& e) {
        throw ConfigError("problem", e.what());
    }
    throw ConfigError("problem.builtin", "unknown problem '" + pc.builtin + "'");
}

inline int problem_dim_d(const ProblemConfig& pc) { return pc.generic ? pc.generic->d : 2; }

/// FNV-1a (64 bit) of the canonical problem JSON, as 16 hex digits.
inline std::string problem_fingerprint(const ProblemConfig& pc)
{
    const std::string text = detail::problem_json(pc).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string problem_label(const ProblemConfig& pc)
{
    return pc.generic ? pc.generic->name : pc.builtin;
}

inline GainSpec resolve_gain(const RunConfig& cfg, const Problem& pb)
{
    const auto& g = cfg.rom.gain;
    std::string kind = g.kind;
    if (kind == "default") {
        if (cfg.problem.builtin == "rl-linear")
            kind = "test3";
        else if (cfg.problem.builtin == "rl-vdp")
            kind = "test4";
        else
            kind = "stabilizing";
    }
    if (kind == "test3")
        return GainSpec::test3(g.c);
    if (kind == "test4")
        return GainSpec::test4(g.mu, g.c);
    if (kind == "constant_matrix") {
        Matrix G(static_cast<Eigen::Index>(g.G.size()), g.G.empty() ? 0 : static_cast<Eigen::Index>(g.G[0].size()));
        for (std::size_t i = 0; i < g.G.size(); ++i) {
            if (g.G[i].size() != static_cast<std::size_t>(G.cols()))
                throw ConfigError("rom.gain.G", "rows have different lengths");
            for (std::size_t j = 0; j < g.G[i].size(); ++j)
                G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g.G[i][j];
        }
        return GainSpec::constant(std::move(G));
    }
    const auto lin = linearize(pb);
    return GainSpec::constant(stabilizing_gain(lin.S, lin.L, g.margin));
}

inline RunConfig parse_config(const json& j)
{
    using namespace detail;
    check_keys(j, "", {"problem", "domain", "degree", "quadrature", "solver", "rom", "simulation",
                       "residual", "output_dir"});
    if (!j.contains("problem"))
        throw ConfigError("problem", "missing");
    RunConfig cfg;
    cfg.problem = parse_problem(j.at("problem"), "problem");
    const int d = problem_dim_d(cfg.problem);

    cfg.domain = BoxDomain::symmetric(d, 1.0);
    opt(j, "domain", "", [&](const json& v, const std::string& p) { cfg.domain = parse_box(v, p); });
    if (cfg.domain.dim() != d)
        throw ConfigError("domain", "dimension differs from the generator dimension");
    opt(j, "degree", "", [&](const json& v, const std::string& p) { cfg.degree = get_int(v, p); });
    if (cfg.degree < 1)
        throw ConfigError("degree", "must be >= 1");
    opt(j, "quadrature", "", [&](const json& v, const std::string& p) { cfg.quadrature = get_int(v, p); });
    if (cfg.quadrature < 0 || cfg.quadrature > 256)
        throw ConfigError("quadrature", "must lie in [0, 256] (0 = default)");

    opt(j, "solver", "", [&](const json& s, const std::string& p) {
        check_keys(s, p, {"tol_F_l1", "max_iter", "backend", "rank_cutoff", "damping",
                          "divergence_factor", "stall_limit"});
        auto& o = cfg.solver;
        opt(s, "tol_F_l1", p, [&](const json& v, const std::string& q) { o.tol_F_l1 = get_number(v, q); });
        opt(s, "max_iter", p, [&](const json& v, const std::string& q) { o.max_iter = get_int(v, q); });
        opt(s, "backend", p, [&](const json& v, const std::string& q) {
            try {
                o.backend = parse_backend(get_string(v, q));
            } catch (const InvalidArgument& e) {
                throw ConfigError(q, e.what());
            }
        });
        opt(s, "rank_cutoff", p, [&](const json& v, const std::string& q) { o.rank_cutoff = get_number(v, q); });
        opt(s, "damping", p, [&](const json& v, const std::string& q) { o.damping = get_number(v, q); });
        opt(s, "divergence_factor", p, [&](const json& v, const std::string& q) {
            o.divergence_factor = v.is_null() ? std::numeric_limits<double>::infinity() : get_number(v, q);
        });
        opt(s, "stall_limit", p, [&](const json& v, const std::string& q) { o.stall_limit = get_int(v, q); });
        try {
            o.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(p, e.what());
        }
    });

    cfg.rom.w0 = {0.1, 0.2};
    cfg.rom.r0 = {0.0, 1.0};
    if (d != 2) {
        cfg.rom.w0.assign(static_cast<std::size_t>(d), 0.1);
        cfg.rom.r0.assign(static_cast<std::size_t>(d), 0.0);
    }
    opt(j, "rom", "", [&](const json& r, const std::string& p) {
        check_keys(r, p, {"gain", "w0", "r0", "x0"});
        opt(r, "gain", p, [&](const json& g, const std::string& q) {
            check_keys(g, q, {"kind", "c", "mu", "G", "margin"});
            auto& gc = cfg.rom.gain;
            opt(g, "kind", q, [&](const json& v, const std::string& f) { gc.kind = get_string(v, f); });
            static const std::set<std::string> kinds{"default", "test3", "test4", "constant_matrix", "stabilizing"};
            if (!kinds.count(gc.kind))
                throw ConfigError(join(q, "kind"), "unknown gain kind '" + gc.kind + "'");
            opt(g, "c", q, [&](const json& v, const std::string& f) { gc.c = get_number(v, f); });
            opt(g, "mu", q, [&](const json& v, const std::string& f) { gc.mu = get_number(v, f); });
            opt(g, "margin", q, [&](const json& v, const std::string& f) { gc.margin = get_number(v, f); });
            opt(g, "G", q, [&](const json& v, const std::string& f) {
                if (!v.is_array())
                    throw ConfigError(f, "expected an array of rows");
                gc.G.clear();
                for (std::size_t i = 0; i < v.size(); ++i)
                    gc.G.push_back(get_vector(v[i], f + "[" + std::to_string(i) + "]"));
            });
            if (gc.kind == "constant_matrix" && gc.G.empty())
                throw ConfigError(join(q, "G"), "required for constant_matrix gains");
        });
        opt(r, "w0", p, [&](const json& v, const std::string& q) { cfg.rom.w0 = get_vector(v, q); });
        opt(r, "r0", p, [&](const json& v, const std::string& q) { cfg.rom.r0 = get_vector(v, q); });
        opt(r, "x0", p, [&](const json& v, const std::string& q) { cfg.rom.x0 = get_vector(v, q); });
    });
    if (cfg.rom.w0.size() != static_cast<std::size_t>(d))
        throw ConfigError("rom.w0", "needs d entries");
    if (cfg.rom.r0.size() != static_cast<std::size_t>(d))
        throw ConfigError("rom.r0", "needs d entries");

    opt(j, "simulation", "", [&](const json& s, const std::string& p) {
        check_keys(s, p, {"t0", "t_end", "method", "abs_tol", "rel_tol", "fixed_step",
                          "steady_window_fraction", "output_dt", "min_step"});
        auto& c = cfg.simulation;
        opt(s, "t0", p, [&](const json& v, const std::string& q) { c.t0 = get_number(v, q); });
        opt(s, "t_end", p, [&](const json& v, const std::string& q) { c.t_end = get_number(v, q); });
        opt(s, "method", p, [&](const json& v, const std::string& q) {
            try {
                c.method = parse_method(get_string(v, q));
            } catch (const InvalidArgument& e) {
                throw ConfigError(q, e.what());
            }
        });
        opt(s, "abs_tol", p, [&](const json& v, const std::string& q) { c.abs_tol = get_number(v, q); });
        opt(s, "rel_tol", p, [&](const json& v, const std::string& q) { c.rel_tol = get_number(v, q); });
        opt(s, "fixed_step", p, [&](const json& v, const std::string& q) { c.fixed_step = get_number(v, q); });
        opt(s, "steady_window_fraction", p,
            [&](const json& v, const std::string& q) { c.steady_window_fraction = get_number(v, q); });
        opt(s, "output_dt", p, [&](const json& v, const std::string& q) { c.output_dt = get_number(v, q); });
        opt(s, "min_step", p, [&](const json& v, const std::string& q) { c.min_step = get_number(v, q); });
        try {
            c.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(p, e.what());
        }
    });

    cfg.residual.W = BoxDomain::symmetric(d, 0.7);
    opt(j, "residual", "", [&](const json& r, const std::string& p) {
        if (r.contains("lo") || r.contains("hi"))
            cfg.residual.W = parse_box(r, p, {"q"});
        else
            check_keys(r, p, {"q"});
        opt(r, "q", p, [&](const json& v, const std::string& q) { cfg.residual.q = get_int(v, q); });
    });
    if (cfg.residual.W.dim() != d)
        throw ConfigError("residual", "dimension differs from the generator dimension");
    if (cfg.residual.q < 1 || cfg.residual.q > 256)
        throw ConfigError("residual.q", "must lie in [1, 256]");

    opt(j, "output_dir", "", [&](const json& v, const std::string& p) { cfg.output_dir = get_string(v, p); });
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("", "cannot open config file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

inline json to_json(const RunConfig& cfg)
{
    using detail::box_json;
    const auto& o = cfg.solver;
    const auto& s = cfg.simulation;
    const auto& g = cfg.rom.gain;
    json gain{{"kind", g.kind}, {"c", g.c}, {"mu", g.mu}, {"margin", g.margin}};
    if (!g.G.empty())
        gain["G"] = g.G;
    json rom{{"gain", gain}, {"w0", cfg.rom.w0}, {"r0", cfg.rom.r0}};
    if (!cfg.rom.x0.empty())
        rom["x0"] = cfg.rom.x0;
    json residual = box_json(cfg.residual.W);
    residual["q"] = cfg.residual.q;
    return json{
        {"problem", detail::problem_json(cfg.problem)},
        {"domain", box_json(cfg.domain)},
        {"degree", cfg.degree},
        {"quadrature", cfg.quadrature},
        {"solver",
         {{"tol_F_l1", o.tol_F_l1},
          {"max_iter", o.max_iter},
          {"backend", to_string(o.backend)},
          {"rank_cutoff", o.rank_cutoff},
          {"damping", o.damping},
          {"divergence_factor", std::isfinite(o.divergence_factor) ? json(o.divergence_factor) : json()},
          {"stall_limit", o.stall_limit}}},
        {"rom", rom},
        {"simulation",
         {{"t0", s.t0},
          {"t_end", s.t_end},
          {"method", to_string(s.method)},
          {"abs_tol", s.abs_tol},
          {"rel_tol", s.rel_tol},
          {"fixed_step", s.fixed_step},
          {"steady_window_fraction", s.steady_window_fraction},
          {"output_dt", s.output_dt},
          {"min_step", s.min_step}}},
        {"residual", residual},
        {"output_dir", cfg.output_dir},
    };
}

} // namespace mmg
