#pragma once

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zeros.hpp"

namespace twistlab {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string fmt17(real x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17Lg", x);
    return buf;
}

inline std::string to_string(const rational& r) {
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t"), b = s.find_last_not_of(" \t");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

inline i64 parse_int(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw config_error(what + ": not an integer: '" + s + "'");
    }
}

inline real parse_real(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        long double v = std::stold(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw config_error(what + ": not a number: '" + s + "'");
    }
}

// Exact positive rational "p/q" or integer "p"; decimals are rejected.
inline rational parse_alpha(const std::string& s) {
    auto parts = split(s, '/');
    if (parts.empty() || parts.size() > 2) throw config_error("alpha: expected P/Q, got '" + s + "'");
    i64 p = parse_int(parts[0], "alpha");
    i64 q = parts.size() == 2 ? parse_int(parts[1], "alpha") : 1;
    if (q == 0) throw config_error("alpha: zero denominator");
    rational a(p, q);
    if (a <= rational(0)) throw config_error("alpha: must be positive, got '" + s + "'");
    return a;
}

// "re:im" pairs; a bare number is real.
inline cplx parse_point(const std::string& s) {
    auto parts = split(s, ':');
    if (parts.size() == 1) return {parse_real(parts[0], "point"), 0};
    if (parts.size() != 2) throw config_error("point: expected RE:IM, got '" + s + "'");
    return {parse_real(parts[0], "point"), parse_real(parts[1], "point")};
}

// Everything a command needs; filled from the config file, then from flags.
struct RunConfig {
    std::string command;
    std::string form = "ETA24";
    rational alpha{1, 12};
    std::vector<rational> alphas;  // residues; empty uses the form's default list
    real delta = 0.4L;
    std::vector<real> xgrid = {50, 100};
    real tol = -1;  // < 0 keeps each check's own tolerance
    std::vector<cplx> points;  // empty selects the command's default grid
    std::string target = "twist";
    i64 max_n = 49;
    real range_lo = -30, range_hi = -5;
    std::vector<real> T = {15, 30};
    real sigma = -1, tmin = 20, tmax = 200;

    real tolerance(real def) const { return tol > 0 ? tol : def; }

    void validate() const {
        auto names = preset_names();
        if (std::find(names.begin(), names.end(), form) == names.end()) throw config_error("form: unknown preset '" + form + "'");
        if (!(delta > 0 && delta <= 0.45L)) throw config_error("delta: must lie in (0, 0.45]");
        for (real X : xgrid)
            if (!(X > 1)) throw config_error("xgrid: every X must exceed 1");
        if (xgrid.empty()) throw config_error("xgrid: empty");
        if (!(range_lo < range_hi) || !(range_hi < 0)) throw config_error("range: need LO < HI < 0");
        for (real t : T)
            if (!(t > std::exp(1.0L))) throw config_error("T: every height must exceed e");
        if (!(tmin > 0) || tmax < 10 * tmin) throw config_error("tmin/tmax: need 0 < tmin and tmax >= 10 tmin");
        if (max_n < 1) throw config_error("max: must be positive");
        if (target != "F" && target != "Fstar" && target != "twist") throw config_error("target: one of F, Fstar, twist");
    }
};

// One verified relation at one point.
struct Record {
    std::string identity;
    nlohmann::json where = nlohmann::json::object();  // s, alpha, X, n, T, l ...
    nlohmann::json lhs, rhs;
    real residual = 0;
    real tolerance = 0;
    bool pass = true;
    nlohmann::json extra = nlohmann::json::object();
};

inline nlohmann::json jnum(real x) {
    if (!std::isfinite(x)) return nullptr;
    return static_cast<double>(x);
}
inline nlohmann::json jc(cplx z) { return nlohmann::json::array({jnum(z.real()), jnum(z.imag())}); }

inline nlohmann::json to_json(const Record& r, const std::string& command) {
    nlohmann::json j = r.extra;
    for (auto& [k, v] : r.where.items()) j[k] = v;
    j["command"] = command;
    j["identity"] = r.identity;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["residual"] = jnum(r.residual);
    j["tolerance"] = jnum(r.tolerance);
    j["pass"] = r.pass;
    return j;
}

// relative difference against max(1, |b|)
inline real rel1(cplx a, cplx b) { return std::abs(a - b) / std::max<real>(1, std::abs(b)); }
inline real relb(cplx a, cplx b) { return b == cplx(0, 0) ? std::abs(a) : std::abs(a - b) / std::abs(b); }

inline Record compare(std::string identity, nlohmann::json where, cplx lhs, cplx rhs, real residual, real tol) {
    Record r;
    r.identity = std::move(identity);
    r.where = std::move(where);
    r.lhs = jc(lhs);
    r.rhs = jc(rhs);
    r.residual = residual;
    r.tolerance = tol;
    r.pass = residual <= tol;
    return r;
}

inline Record scalar_check(std::string identity, nlohmann::json where, real lhs, real rhs, real residual, real tol, bool pass) {
    Record r;
    r.identity = std::move(identity);
    r.where = std::move(where);
    r.lhs = jnum(lhs);
    r.rhs = jnum(rhs);
    r.residual = residual;
    r.tolerance = tol;
    r.pass = pass;
    return r;
}

// Output of one command: records plus an optional command-specific table.
struct Suite {
    std::string command;
    std::vector<Record> records;
    std::vector<std::string> table_header;
    std::vector<std::vector<std::string>> table;

    bool pass() const {
        return std::all_of(records.begin(), records.end(), [](const Record& r) { return r.pass; });
    }
};

// Forms and twist contexts shared by every suite of one run.
class Session {
public:
    const HalfIntegralForm& form(const std::string& name) {
        auto it = forms_.find(name);
        if (it == forms_.end()) it = forms_.emplace(name, build_preset(name)).first;
        return it->second;
    }
    const TwistContext& context(const std::string& name, rational alpha) {
        auto key = std::make_pair(name, alpha);
        auto it = contexts_.find(key);
        if (it == contexts_.end()) it = contexts_.emplace(key, TwistContext(form(name), alpha)).first;
        return it->second;
    }

private:
    std::map<std::string, HalfIntegralForm> forms_;
    std::map<std::pair<std::string, rational>, TwistContext> contexts_;
};

// mean of (s - s0) f(s) over a circle of radius r around s0: the residue for a simple pole
template <class F>
cplx circle_average(F f, cplx s0, real r, int points = 16) {
    KahanSum acc;
    for (int j = 0; j < points; ++j) {
        cplx d = std::polar(r, 2 * kPi * (j + 0.5L) / points);
        acc.add(d * f(s0 + d));
    }
    return acc.value() / static_cast<real>(points);
}

// Exponent p of the least-squares fit log|D| = c + p log X + d / X.
inline real decay_exponent(const std::vector<real>& Xs, const std::vector<real>& ly) {
    real A[3][4] = {};
    for (size_t i = 0; i < Xs.size(); ++i) {
        real row[3] = {1, std::log(Xs[i]), 1 / Xs[i]};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) A[r][c] += row[r] * row[c];
            A[r][3] += row[r] * ly[i];
        }
    }
    for (int c = 0; c < 3; ++c)
        for (int r = c + 1; r < 3; ++r) {
            real f = A[r][c] / A[c][c];
            for (int k = c; k < 4; ++k) A[r][k] -= f * A[c][k];
        }
    real x[3];
    for (int r = 2; r >= 0; --r) {
        x[r] = A[r][3];
        for (int k = r + 1; k < 3; ++k) x[r] -= A[r][k] * x[k];
        x[r] /= A[r][r];
    }
    return x[1];
}

inline std::vector<cplx> default_fe_points() {
    return {{-1.5L, 0.5L}, {-1.5L, 8}, {-1.2L, -4}, {-1.0L, 10}, {-0.9L, -9},
            {-0.7L, 3},    {-0.6L, -1}, {-0.5L, 6},  {-0.4L, -7}, {-0.3L, 10}};
}

inline std::vector<cplx> default_strip_points() {
    return {{-0.5L, 1.3L}, {-0.45L, -2}, {-0.7L, 0.4L}, {-0.6L, 5}, {-0.75L, -3.5L}, {-0.5L, 8}};
}

inline std::vector<cplx> default_decay_points() {
    return {{-0.5L, 1.3L}, {-0.6L, -2}, {-0.45L, 4}, {-0.7L, 0.5L}, {-0.55L, -6}};
}

inline std::vector<rational> default_spectral_alphas(const std::string& form) {
    if (form == "ETA24") return {rational(1, 12), rational(5, 12), rational(7, 12), rational(11, 12)};
    if (form == "ETA8_CUBED") return {rational(1, 4), rational(3, 4), rational(5, 4)};
    return {rational(1, 2), rational(3, 2), rational(5, 2)};
}

inline rational default_nonspectral_alpha(const std::string& form) {
    if (form == "ETA24") return rational(1, 6);
    if (form == "ETA8_CUBED") return rational(1, 2);
    return rational(1, 6);
}

inline nlohmann::json at_s(cplx s) { return {{"s", jc(s)}}; }

// ---- suites ----

inline Suite run_forms(Session& ses, const RunConfig& cfg) {
    Suite out{"forms", {}, {"name", "N", "k", "kappa", "h", "hstar", "safe_abscissa"}, {}};
    for (const std::string& name : preset_names()) {
        const HalfIntegralForm& f = ses.form(name);
        LSeriesEvaluator ev(f);
        // the completed integral must not depend on the split point
        cplx s(0.3L, 1), sp = s + (f.kappa() - 1) / 2;
        real th = LSeriesEvaluator::split_angle(s.imag());
        cplx a = ev.Lambda(sp, false, 1, th).value, b = ev.Lambda(sp, false, 1.3L, th).value;
        Record r = compare("dual_phase_split_independence", {{"form", name}, {"s", jc(s)}}, a, b, relb(a, b),
                           cfg.tolerance(1e-9L));
        r.extra = {{"N", f.N()},
                   {"k", f.k()},
                   {"kappa", jnum(f.kappa())},
                   {"omega", jc(f.omega())},
                   {"epsilon", jc(f.dual_phase())},
                   {"h", ev.h()},
                   {"hstar", ev.hstar()},
                   {"mu", jnum(ev.mu())},
                   {"mu_star", jnum(ev.mu_star())},
                   {"safe_abscissa", jnum(ev.safe_abscissa())}};
        out.records.push_back(r);
        out.table.push_back({name, std::to_string(f.N()), std::to_string(f.k()), fmt17(f.kappa()), std::to_string(ev.h()),
                             std::to_string(ev.hstar()), fmt17(ev.safe_abscissa())});
    }
    return out;
}

inline Suite run_coeffs(Session& ses, const RunConfig& cfg) {
    Suite out{"coeffs", {}, {"n", "c(n)", "a(n)"}, {}};
    const HalfIntegralForm& f = ses.form(cfg.form);
    for (i64 n = 1; n <= cfg.max_n; ++n) {
        i64 c = f.fourier(n);
        real a = f.a(n);
        out.table.push_back({std::to_string(n), std::to_string(c), fmt17(a)});
        real back = a * std::exp((f.kappa() - 1) / 2 * std::log(static_cast<real>(n)));
        out.records.push_back(compare("coefficient_normalization", {{"form", cfg.form}, {"n", n}}, back,
                                      static_cast<real>(c), relb(back, static_cast<real>(c)), cfg.tolerance(1e-15L)));
    }
    return out;
}

inline Suite run_eval(Session& ses, const RunConfig& cfg) {
    Suite out{"eval", {}, {"s_re", "s_im", "value_re", "value_im", "error_estimate", "method"}, {}};
    std::vector<cplx> pts = cfg.points.empty() ? std::vector<cplx>{{2, 1}, {0.5L, 3}, {-0.5L, 2}} : cfg.points;
    for (cplx s : pts) {
        Record r;
        ComplexEval v;
        if (cfg.target == "twist") {
            const TwistContext& ctx = ses.context(cfg.form, cfg.alpha);
            if (s.real() >= sigma_plus(ctx)) {
                v = ctx.F_twist_direct(s, 1e-15L);
                cplx alt = ctx.F_twist_continued(s).value;
                r = compare("continued_vs_direct_twist", at_s(s), v.value, alt, relb(v.value, alt), cfg.tolerance(1e-8L));
            } else {
                v = ctx.F_twist_continued(s);
                cplx alt = ctx.fe_rhs(s).value;
                r = compare("twisted_functional_equation", at_s(s), v.value, alt, rel1(v.value, alt), cfg.tolerance(1e-6L));
            }
            r.where["alpha"] = to_string(cfg.alpha);
        } else {
            LSeriesEvaluator ev(ses.form(cfg.form));
            bool dual = cfg.target == "Fstar";
            if (s.real() >= ev.safe_abscissa()) {
                v = dual ? ev.Fstar_direct(s) : ev.F_direct(s);
                cplx alt = dual ? ev.Fstar_complete(s).value : ev.F_complete(s).value;
                r = compare("direct_vs_completed", at_s(s), v.value, alt, relb(v.value, alt), cfg.tolerance(1e-9L));
            } else {
                v = dual ? ev.Fstar_complete(s) : ev.F_complete(s);
                cplx alt = dual ? ev.Fstar_complete(s, 1.25L).value : ev.F_complete(s, 1.25L).value;
                r = compare("completed_split_independence", at_s(s), v.value, alt, relb(v.value, alt), cfg.tolerance(1e-9L));
            }
        }
        r.where["form"] = cfg.form;
        r.where["target"] = cfg.target;
        r.extra = {{"value", jc(v.value)}, {"error_estimate", jnum(v.error)}, {"method", v.method}};
        out.records.push_back(r);
        out.table.push_back({fmt17(s.real()), fmt17(s.imag()), fmt17(v.value.real()), fmt17(v.value.imag()), fmt17(v.error), v.method});
    }
    return out;
}

inline void add_basic(Suite& out, const TwistContext& ctx, const std::string& form, const std::vector<cplx>& pts,
                      const std::vector<real>& Xs, real delta, real tol) {
    for (cplx s : pts)
        for (real X : Xs) {
            ComplexEval lhs = ctx.F_X_twist(s, X);
            ComplexEval rhs = ctx.basic_formula_rhs(s, X, delta);
            Record r = compare("basic_formula", {{"form", form}, {"alpha", to_string(ctx.alpha())}, {"s", jc(s)}, {"X", jnum(X)}},
                               lhs.value, rhs.value, relb(lhs.value, rhs.value), tol);
            r.extra = {{"error_budget", jnum((lhs.error + rhs.error) / std::abs(rhs.value))}, {"delta", jnum(delta)}};
            out.records.push_back(r);
        }
}

inline Suite run_verify_basic(Session& ses, const RunConfig& cfg) {
    Suite out{"verify-basic", {}, {}, {}};
    const TwistContext& ctx = ses.context(cfg.form, cfg.alpha);
    std::vector<cplx> pts = cfg.points.empty() ? default_strip_points() : cfg.points;
    for (cplx s : pts)
        if (!ctx.in_strip(s.real(), cfg.delta))
            throw config_error("points: Re s = " + fmt17(s.real()) + " lies outside the strip for delta = " + fmt17(cfg.delta));
    add_basic(out, ctx, cfg.form, pts, cfg.xgrid, cfg.delta, cfg.tolerance(1e-8L));
    return out;
}

inline void add_fe(Suite& out, const TwistContext& ctx, const std::string& form, const std::vector<cplx>& pts, real tol) {
    for (cplx s : pts) {
        ComplexEval lhs = ctx.F_twist_continued(s);
        ComplexEval rhs = ctx.fe_rhs(s);
        Record r = compare("twisted_functional_equation", {{"form", form}, {"alpha", to_string(ctx.alpha())}, {"s", jc(s)}},
                           lhs.value, rhs.value, rel1(lhs.value, rhs.value), tol);
        r.extra = {{"error_budget", jnum((lhs.error + rhs.error) / std::max<real>(1, std::abs(rhs.value)))},
                   {"in_spectrum", ctx.in_spectrum()}};
        out.records.push_back(r);
    }
}

// X grid on which F_X - Sigma_X - fe_rhs is fitted. Only the lacunary forms
// reach the asymptotic range: the engine form would need ~(X sqrt(N))^2 coefficients.
inline bool decay_affordable(const HalfIntegralForm& f) { return f.square_supported(); }
inline std::vector<real> decay_grid() { return {40, 80, 160, 320, 640}; }

inline void add_decay(Suite& out, const TwistContext& ctx, const std::string& form, real tol) {
    const std::vector<real> Xs = decay_grid();
    for (cplx s : default_decay_points()) {
        cplx rhs = ctx.fe_rhs(s).value;
        auto fx = ctx.F_X_twist(s, Xs);
        std::vector<real> ly;
        for (size_t i = 0; i < Xs.size(); ++i) ly.push_back(std::log(std::abs(fx[i].value - ctx.sigma_X(s, Xs[i]) - rhs)));
        real p = decay_exponent(Xs, ly);
        Record r = scalar_check("regularization_decay_exponent", {{"form", form}, {"alpha", to_string(ctx.alpha())}, {"s", jc(s)}},
                                p, -1, std::max<real>(0, p + 1), tol, p <= -1 + tol);
        nlohmann::json xs = nlohmann::json::array();
        for (real X : Xs) xs.push_back(jnum(X));
        r.extra = {{"X", xs}};
        out.records.push_back(r);
    }
}

inline Suite run_verify_fe(Session& ses, const RunConfig& cfg) {
    Suite out{"verify-fe", {}, {}, {}};
    const TwistContext& ctx = ses.context(cfg.form, cfg.alpha);
    add_fe(out, ctx, cfg.form, cfg.points.empty() ? default_fe_points() : cfg.points, cfg.tolerance(1e-6L));
    if (decay_affordable(ctx.form())) add_decay(out, ctx, cfg.form, 1e-3L);
    return out;
}

inline void add_residues(Suite& out, Session& ses, const std::string& form, const std::vector<rational>& alphas, real tol_pole,
                         real tol_entire, real tol_const) {
    std::vector<std::pair<rational, cplx>> consts;
    for (rational a : alphas) {
        const TwistContext& ctx = ses.context(form, a);
        auto f = [&](cplx s) { return ctx.fe_rhs(s).value; };
        for (int l = 0; l <= ctx.hstar(); ++l) {
            const real s0 = TwistContext::s_ell(l);
            cplx avg = circle_average(f, s0, 1e-3L);
            nlohmann::json where = {{"form", form}, {"alpha", to_string(a)}, {"l", l}, {"s0", jnum(s0)}};
            if (ctx.in_spectrum()) {
                cplx kap = ctx.residue_kappa(l);
                out.records.push_back(compare("pole_residue", where, avg, kap, relb(avg, kap), tol_pole));
            } else {
                out.records.push_back(compare("entire_off_spectrum", where, avg, 0, std::abs(avg), tol_entire));
            }
        }
        if (ctx.in_spectrum()) {
            const i64 na = ctx.n_alpha().numerator();
            cplx astar = ctx.form().dual_phase() * ctx.form().a(na);
            consts.emplace_back(a, ctx.residue_kappa(0) * std::pow(static_cast<real>(na), 0.25L) / astar);
        }
    }
    // kappa_0 n_alpha^{1/4} / a*(n_alpha) does not depend on alpha
    for (size_t i = 1; i < consts.size(); ++i)
        out.records.push_back(compare("residue_constant",
                                      {{"form", form}, {"alpha", to_string(consts[i].first)}, {"reference_alpha", to_string(consts[0].first)}},
                                      consts[i].second, consts[0].second, relb(consts[i].second, consts[0].second), tol_const));
}

inline Suite run_residues(Session& ses, const RunConfig& cfg) {
    Suite out{"residues", {}, {}, {}};
    std::vector<rational> alphas = cfg.alphas;
    if (alphas.empty()) {
        alphas = default_spectral_alphas(cfg.form);
        alphas.push_back(default_nonspectral_alpha(cfg.form));
    }
    add_residues(out, ses, cfg.form, alphas, cfg.tolerance(1e-5L), 1e-6L, 1e-6L);
    return out;
}

inline nlohmann::json tube_json(const TubeData& d) {
    return {{"nu_plus", jnum(d.nu_plus)},       {"nu_minus", jnum(d.nu_minus)},       {"m_plus", jnum(d.m_plus)},
            {"m_minus", jnum(d.m_minus)},       {"rho_plus", jnum(d.rho_plus)},       {"rho_minus", jnum(d.rho_minus)},
            {"theta_plus", jnum(d.theta_plus)}, {"theta_minus", jnum(d.theta_minus)}, {"slope", jnum(d.slope)},
            {"intercept", jnum(d.intercept)}};
}

constexpr real kTubeEps = 0.05L;
constexpr real kSweepEps = 0.3L;

inline Suite run_trivial_zeros(Session& ses, const RunConfig& cfg) {
    Suite out{"trivial-zeros", {}, {"beta", "gamma", "residual", "kind", "distance_to_line"}, {}};
    const TwistContext& ctx = ses.context(cfg.form, cfg.alpha);
    const TubeData d = tube_data(ctx);
    const real R = -cfg.range_lo, smin = -cfg.range_hi;
    const nlohmann::json base = {{"form", cfg.form}, {"alpha", to_string(cfg.alpha)}};

    SigmaEpsResult se = sigma_epsilon(ctx, d, kTubeEps, R);
    ZeroClassifier cls;
    cls.eps = kTubeEps;
    cls.sigma_eps = se.sigma_eps;
    cls.sigma_plus = sigma_plus(ctx);
    Record rs = scalar_check("sigma_epsilon", base, se.sigma_eps, smin, 0, 0, se.sigma_eps <= smin);
    rs.extra = {{"eps", jnum(kTubeEps)}, {"threshold", jnum(se.threshold)}, {"sigma_plus", jnum(cls.sigma_plus)}, {"tube", tube_json(d)}};
    out.records.push_back(rs);

    SweepResult sw = off_tube_sweep(ctx, d, cfg.range_lo, cfg.range_hi, kSweepEps);
    const real thr = off_tube_threshold(kSweepEps);
    Record ro = scalar_check("off_tube_lower_bound", base, sw.min_ratio, thr, 0, 0, sw.min_ratio >= thr);
    ro.extra = {{"eps", jnum(kSweepEps)}, {"points", sw.points}, {"argmin", jc(sw.where)}};
    out.records.push_back(ro);

    auto seeds = predicted_trivial_zeros(d, R, smin);
    auto zs = refine_zeros(ctx, d, seeds, cls);
    for (const ZeroRecord& z : zs) {
        Record r;
        r.identity = "trivial_zero";
        r.where = base;
        r.where["s"] = jc(z.location);
        r.lhs = jnum(z.distance_to_line);
        r.rhs = jnum(kTubeEps);
        r.residual = z.distance_to_line;
        r.tolerance = kTubeEps;
        r.pass = z.converged && !z.collision && z.kind == ZeroKind::trivial && z.distance_to_line < kTubeEps;
        r.extra = {{"seed", jc(z.seed)},
                   {"newton_residual", jnum(z.residual)},
                   {"kind", to_string(z.kind)},
                   {"converged", z.converged},
                   {"collision", z.collision},
                   {"iterations", z.iterations}};
        out.records.push_back(r);
        out.table.push_back({fmt17(z.location.real()), fmt17(z.location.imag()), fmt17(z.residual), to_string(z.kind),
                             fmt17(z.distance_to_line)});
    }

    // argument-principle count over the whole range against the seeds
    auto cuts = tube_lattice(d, cfg.range_lo, cfg.range_hi, false);
    if (cuts.size() >= 3) {
        real lo = cuts.front().real(), hi = cuts.back().real();
        WindingResult w = count_zeros_tube(ctx, d, lo, hi, 1);
        real n_seeds = static_cast<real>(tube_lattice(d, lo, hi, true).size());
        Record rc = scalar_check("tube_count", base, w.zeros, n_seeds, std::abs(w.zeros - n_seeds), 0, w.zeros == n_seeds);
        rc.extra = {{"sigma_lo", jnum(lo)}, {"sigma_hi", jnum(hi)}, {"half_height", 1}};
        out.records.push_back(rc);
        // zeros per unit sigma on the two halves
        const real mid = (lo + hi) / 2;
        auto c1 = tube_lattice(d, lo - 1e-9L, mid, false), c2 = tube_lattice(d, mid, hi + 1e-9L, false);
        if (c1.size() >= 2 && c2.size() >= 2) {
            WindingResult w1 = count_zeros_tube(ctx, d, c1.front().real(), c1.back().real(), 1);
            WindingResult w2 = count_zeros_tube(ctx, d, c2.front().real(), c2.back().real(), 1);
            real d1 = w1.zeros / (c1.back().real() - c1.front().real());
            real d2 = w2.zeros / (c2.back().real() - c2.front().real());
            Record rl = scalar_check("tube_density", base, d1, d2, std::abs(d1 / d2 - 1), 0.1L, std::abs(d1 / d2 - 1) <= 0.1L);
            rl.extra = {{"windows", {{jnum(c1.front().real()), jnum(c1.back().real())}, {jnum(c2.front().real()), jnum(c2.back().real())}}},
                        {"predicted_density", jnum(1 + d.slope * d.slope)}};
            out.records.push_back(rl);
        }
    }
    return out;
}

// Deviation bound per count; the asymptotic constant is not known, so this is a sanity cap.
inline real count_deviation_cap(real T) { return 3 * std::log(T); }

inline Suite run_count_zeros(Session& ses, const RunConfig& cfg) {
    Suite out{"count-zeros", {}, {}, {}};
    const TwistContext& ctx = ses.context(cfg.form, cfg.alpha);
    const TubeData d = tube_data(ctx);
    const nlohmann::json base = {{"form", cfg.form}, {"alpha", to_string(cfg.alpha)}};
    SigmaEpsResult se = sigma_epsilon(ctx, d, kTubeEps, 30);
    const real sp = sigma_plus(ctx);
    {
        const HalfIntegralForm& f = ctx.form();
        i64 nb = first_support_index(f);
        real lead = std::abs(f.a(nb)) * std::pow(static_cast<real>(nb), -sp);
        real tail = f.abs_tail_bound(static_cast<real>(nb + 1), sp);
        out.records.push_back(scalar_check("first_term_dominance", base, lead, tail, tail / lead, 1, tail < lead));
    }
    std::vector<RvmComparison> runs;
    for (real T : cfg.T) {
        RvmComparison c = rvm_compare(ctx, d, T, se.sigma_eps);
        Record r = scalar_check("zero_count", base, c.count.zeros, c.prediction, std::abs(c.deviation), count_deviation_cap(T),
                                std::abs(c.deviation) <= count_deviation_cap(T));
        r.where["T"] = jnum(T);
        r.extra = {{"winding", c.count.winding},     {"poles", c.count.poles},         {"sigma_left", jnum(c.sigma_left)},
                   {"sigma_right", jnum(c.sigma_right)}, {"sigma_eps", jnum(se.sigma_eps)}, {"eps", jnum(kTubeEps)},
                   {"deviation", jnum(c.deviation)},  {"nudged", c.count.nudged}};
        out.records.push_back(r);
        runs.push_back(c);
    }
    if (runs.size() >= 2) {
        const RvmComparison &a = runs.front(), &b = runs.back();
        real ratio = std::abs(b.deviation) / std::abs(a.deviation);
        real bound = std::log(b.T) / std::log(a.T) + 0.5L;
        Record r = scalar_check("count_deviation_growth", base, ratio, bound, ratio, bound, ratio <= bound);
        r.where["T"] = {jnum(a.T), jnum(b.T)};
        out.records.push_back(r);
    }
    return out;
}

inline std::vector<real> growth_heights(real tmin, real tmax) {
    std::vector<real> ts;
    for (int i = 0; i <= 10; ++i) ts.push_back(tmin * std::pow(tmax / tmin, i / 10.0L));
    return ts;
}

inline Suite run_growth(Session& ses, const RunConfig& cfg) {
    Suite out{"growth", {}, {}, {}};
    const TwistContext& ctx = ses.context(cfg.form, cfg.alpha);
    GrowthFit g = growth_probe(ctx, cfg.sigma, growth_heights(cfg.tmin, cfg.tmax));
    real expect = std::numeric_limits<real>::quiet_NaN(), tol = std::numeric_limits<real>::quiet_NaN();
    if (cfg.sigma <= 0) {
        expect = 1 - 2 * cfg.sigma;
        tol = cfg.tolerance(0.15L);
    } else if (cfg.sigma >= sigma_plus(ctx)) {
        expect = 0;
        tol = cfg.tolerance(0.1L);
    }
    for (auto [side, p] : {std::pair<int, real>{1, g.plus}, std::pair<int, real>{-1, g.minus}}) {
        bool known = std::isfinite(expect);
        real res = known ? std::abs(p - expect) : 0;
        Record r = scalar_check("growth_exponent",
                                {{"form", cfg.form}, {"alpha", to_string(cfg.alpha)}, {"sigma", jnum(cfg.sigma)}, {"side", side}},
                                p, expect, res, tol, !known || res <= tol);
        r.extra = {{"tmin", jnum(cfg.tmin)}, {"tmax", jnum(cfg.tmax)}};
        out.records.push_back(r);
    }
    return out;
}

// The fixed matrix of every check, run with default settings.
inline std::vector<Suite> run_report(Session& ses, const RunConfig& base) {
    std::vector<Suite> all;
    RunConfig cfg = base;
    cfg.points.clear();
    cfg.alphas.clear();
    all.push_back(run_forms(ses, cfg));

    RunConfig cc = cfg;
    cc.form = "ETA8_CUBED";
    cc.max_n = 49;
    all.push_back(run_coeffs(ses, cc));

    Suite basic{"verify-basic", {}, {}, {}};
    for (auto [form, a] : {std::pair<const char*, rational>{"ETA24", rational(1, 12)}, {"ETA24", rational(3, 10)},
                           {"ETA8_CUBED", rational(1, 4)}, {"ETA8_CUBED", rational(1, 3)}})
        add_basic(basic, ses.context(form, a), form, default_strip_points(), {50, 100}, 0.4L, cfg.tolerance(1e-8L));
    all.push_back(basic);

    Suite fe{"verify-fe", {}, {}, {}};
    for (auto [form, a] : {std::pair<const char*, rational>{"ETA24", rational(1, 12)}, {"ETA24", rational(1, 6)},
                           {"ETA24", rational(3, 10)}, {"ETA8_CUBED", rational(1, 4)}, {"ETA8_CUBED", rational(1, 2)},
                           {"ETA2_4_8", rational(1, 2)}, {"ETA2_4_8", rational(1, 6)}})
        add_fe(fe, ses.context(form, a), form, default_fe_points(), cfg.tolerance(1e-6L));
    add_decay(fe, ses.context("ETA24", rational(1, 12)), "ETA24", 1e-3L);
    all.push_back(fe);

    Suite res{"residues", {}, {}, {}};
    for (const std::string& form : preset_names()) {
        auto alphas = default_spectral_alphas(form);
        alphas.push_back(default_nonspectral_alpha(form));
        add_residues(res, ses, form, alphas, 1e-5L, 1e-6L, 1e-6L);
    }
    all.push_back(res);

    RunConfig tz = cfg;
    tz.form = "ETA24";
    tz.alpha = rational(1, 12);
    tz.range_lo = -30;
    tz.range_hi = -5;
    tz.T = {15, 30};
    all.push_back(run_trivial_zeros(ses, tz));
    all.push_back(run_count_zeros(ses, tz));
    Suite gr{"growth", {}, {}, {}};
    for (real sg : {-1.0L, 2.0L}) {
        RunConfig g = tz;
        g.sigma = sg;
        g.tmin = 20;
        g.tmax = 200;
        for (Record& r : run_growth(ses, g).records) gr.records.push_back(r);
    }
    all.push_back(gr);
    return all;
}

// Counts of log10(residual) per identity, for plotting.
inline std::vector<std::vector<std::string>> residual_histogram(const std::vector<Suite>& suites) {
    std::map<std::pair<std::string, int>, int> bins;
    for (const Suite& s : suites)
        for (const Record& r : s.records) {
            int b = r.residual > 0 ? static_cast<int>(std::floor(std::log10(r.residual))) : -40;
            ++bins[{s.command + ":" + r.identity, std::max(b, -40)}];
        }
    std::vector<std::vector<std::string>> rows;
    for (auto& [k, n] : bins) rows.push_back({k.first, std::to_string(k.second), std::to_string(n)});
    return rows;
}

inline std::string csv_line(const std::vector<std::string>& cells) {
    std::string s;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) s += ',';
        s += cells[i];
    }
    return s + "\n";
}

inline std::string records_csv(const std::vector<Suite>& suites) {
    std::string s = csv_line({"command", "identity", "where", "residual", "tolerance", "pass"});
    for (const Suite& su : suites)
        for (const Record& r : su.records) {
            std::string where = r.where.dump();
            std::string quoted = "\"";
            for (char c : where) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
            quoted += "\"";
            s += csv_line({su.command, r.identity, quoted, fmt17(r.residual), fmt17(r.tolerance), r.pass ? "true" : "false"});
        }
    return s;
}

inline std::string records_jsonl(const std::vector<Suite>& suites) {
    std::string s;
    for (const Suite& su : suites)
        for (const Record& r : su.records) s += to_json(r, su.command).dump() + "\n";
    return s;
}

inline std::string text_table(const std::vector<Suite>& suites) {
    std::ostringstream os;
    for (const Suite& su : suites) {
        int fails = 0;
        for (const Record& r : su.records) fails += !r.pass;
        os << "== " << su.command << ": " << su.records.size() << " checks, " << fails << " failed\n";
        if (!su.table.empty()) {
            os << csv_line(su.table_header);
            for (auto& row : su.table) os << csv_line(row);
        }
        for (const Record& r : su.records) {
            char line[512];
            std::snprintf(line, sizeof line, "%-32s %-60s residual %-12.4Lg tol %-10.3Lg %s\n", r.identity.c_str(),
                          r.where.dump().c_str(), r.residual, r.tolerance, r.pass ? "PASS" : "FAIL");
            os << line;
        }
    }
    return os.str();
}

}  // namespace twistlab
