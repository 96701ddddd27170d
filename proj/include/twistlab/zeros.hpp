#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "twist.hpp"

namespace twistlab {

// The two support points nearest to -nu_alpha and the line the trivial zeros follow.
struct TubeData {
    real nu_plus = 0, nu_minus = 0;
    i64 n_plus = 0, n_minus = 0;
    real m_plus = 0, m_minus = 0;
    cplx c_plus, c_minus;
    real rho_plus = 0, rho_minus = 0;
    real theta_plus = 0, theta_minus = 0;  // in [0, 2 pi)
    real slope = 0, intercept = 0;

    real line_t(real sigma) const { return slope * sigma + intercept; }
    // vertical offset t - t(sigma)
    real offset(cplx s) const { return s.imag() - line_t(s.real()); }
    real distance(cplx s) const { return std::abs(offset(s)) / std::sqrt(1 + slope * slope); }
    // sigma-spacing of consecutive trivial zeros along the line
    real spacing() const { return 1 / (1 + slope * slope); }
};

inline real wrap_2pi(real x) {
    real r = std::fmod(x, kTwoPi);
    return r < 0 ? r + kTwoPi : r;
}

inline TubeData tube_data(const TwistContext& ctx) {
    TubeData d;
    SupportGap p = ctx.nearest_gap(1), m = ctx.nearest_gap(-1);
    d.n_plus = p.n;
    d.n_minus = m.n;
    d.nu_plus = p.sign * std::sqrt(static_cast<real>(p.n));
    d.nu_minus = m.sign * std::sqrt(static_cast<real>(m.n));
    d.m_plus = p.m;
    d.m_minus = m.m;
    d.c_plus = std::sqrt(p.m) * ctx.c_star(p.n, p.sign, 0) / std::sqrt(std::abs(d.nu_plus));
    d.c_minus = std::sqrt(m.m) * ctx.c_star(m.n, m.sign, 0) / std::sqrt(std::abs(d.nu_minus));
    d.rho_plus = std::abs(d.c_plus);
    d.rho_minus = std::abs(d.c_minus);
    d.theta_plus = wrap_2pi(std::arg(d.c_plus));
    d.theta_minus = wrap_2pi(std::arg(d.c_minus));
    d.slope = std::log(d.m_plus / d.m_minus) / kPi;
    d.intercept = std::log(d.rho_plus * d.m_minus * d.m_minus / (d.rho_minus * d.m_plus * d.m_plus)) / kTwoPi;
    return d;
}

// Two-term model e^{-i pi w} c+ m+^{-2w} + e^{i pi w} c- m-^{-2w} of sum_l a_l F*_l / Q_l at w.
inline cplx tube_model(const TubeData& d, cplx w) {
    return expipi(-w) * d.c_plus * std::exp(-2.0L * w * std::log(d.m_plus)) +
           expipi(w) * d.c_minus * std::exp(-2.0L * w * std::log(d.m_minus));
}

// log of the larger modulus of the two model terms at w
inline real tube_log_scale(const TubeData& d, cplx w) {
    real lp = kPi * w.imag() + std::log(d.rho_plus) - 2 * w.real() * std::log(d.m_plus);
    real lm = -kPi * w.imag() + std::log(d.rho_minus) - 2 * w.real() * std::log(d.m_minus);
    return std::max(lp, lm);
}

// Points where the model's two terms have opposite arguments on the line:
// sigma_k = ((2k + 1) pi - (theta+ - theta-) - 2 pi slope b) / (2 pi (1 + slope^2)), k in Z.
// With odd = false the terms have equal arguments instead (the cut points between zeros).
inline std::vector<cplx> tube_lattice(const TubeData& d, real sigma_lo, real sigma_hi, bool odd) {
    if (!(sigma_lo < sigma_hi)) throw domain_error("tube_lattice: empty sigma range");
    const real denom = kTwoPi * (1 + d.slope * d.slope);
    const real shift = d.theta_plus - d.theta_minus + kTwoPi * d.slope * d.intercept;
    auto sigma_of = [&](i64 k) { return (static_cast<real>(odd ? 2 * k + 1 : 2 * k) * kPi - shift) / denom; };
    i64 k0 = static_cast<i64>(std::floor((sigma_lo * denom + shift) / kTwoPi)) - 1;
    std::vector<cplx> out;
    for (i64 k = k0;; ++k) {
        real sg = sigma_of(k);
        if (sg > sigma_hi) break;
        if (sg >= sigma_lo) out.emplace_back(sg, d.line_t(sg));
    }
    return out;
}

// Zeros of the two-term model with -R <= sigma <= -sigma_min: seeds for the trivial zeros.
inline std::vector<cplx> predicted_trivial_zeros(const TubeData& d, real R, real sigma_min = 0) {
    if (!(R > 0)) throw domain_error("predicted_trivial_zeros: R must be positive");
    return tube_lattice(d, -R, -sigma_min, true);
}

inline std::vector<cplx> predicted_trivial_zeros(const TwistContext& ctx, real R, real sigma_min = 0) {
    return predicted_trivial_zeros(tube_data(ctx), R, sigma_min);
}

// Upper edge of the zero strip: first-term dominance holds from here on.
inline real sigma_plus(const TwistContext& ctx) { return ctx.lseries().safe_abscissa() + 1; }

inline i64 first_support_index(const HalfIntegralForm& f) {
    auto t = f.terms(1024);
    if (t->empty()) throw domain_error("first_support_index: form has no coefficients below 1024");
    return t->front().n;
}

// |a(nbar)| nbar^{-sigma} > sum_{n > nbar} |a(n)| n^{-sigma}, so F(s, alpha) has no zero on Re s = sigma.
inline bool first_term_dominates(const TwistContext& ctx, real sigma) {
    const HalfIntegralForm& f = ctx.form();
    i64 nb = first_support_index(f);
    real lead = std::abs(f.a(nb)) * std::pow(static_cast<real>(nb), -sigma);
    return f.abs_tail_bound(static_cast<real>(nb + 1), sigma) < lead;
}

// F(s, alpha) by the cheapest valid route: fe_rhs left of the critical strip,
// the extrapolated regularization inside it, the series itself on the right.
inline cplx twist_value(const TwistContext& ctx, cplx s) {
    if (s.real() < 0) return ctx.fe_rhs(s, TwistContext::Mode::automatic, 1e-14L).value;
    if (s.real() >= sigma_plus(ctx)) return ctx.F_twist_direct(s, 1e-14L).value;
    return ctx.F_twist_continued(s).value;
}

enum class ZeroKind { trivial, nontrivial, unclassified };

inline const char* to_string(ZeroKind k) {
    switch (k) {
        case ZeroKind::trivial: return "trivial";
        case ZeroKind::nontrivial: return "nontrivial";
        default: return "unclassified";
    }
}

// Thresholds that decide the kind of a zero; reported with every zero list.
struct ZeroClassifier {
    real eps = 0.05L;
    real sigma_eps = 0;
    real sigma_plus = 0;

    ZeroKind kind(const TubeData& d, cplx z) const {
        if (z.real() < -sigma_eps) return d.distance(z) < eps ? ZeroKind::trivial : ZeroKind::unclassified;
        if (z.real() <= sigma_plus) return ZeroKind::nontrivial;
        return ZeroKind::unclassified;
    }
};

struct ZeroRecord {
    cplx location;
    real residual = 0;  // |tube_normalized| at the returned point
    ZeroKind kind = ZeroKind::unclassified;
    cplx seed;
    real distance_to_line = 0;
    bool converged = false;
    bool collision = false;
    int iterations = 0;
};

struct NewtonOptions {
    real tol = 1e-10L;        // accepted Newton step length
    real residual = 1e-8L;    // largest accepted |f| at the end
    real max_step = 0.1L;  // damping: short steps follow the Newton flow into the nearest basin
    real max_move = 1.5L;  // divergence radius around the seed
    int max_iter = 60;
    real h = 1e-3L;  // radius of the derivative stencil
};

// Derivative from four points on a circle; exact through degree 4.
inline cplx circle_derivative(const std::function<cplx(cplx)>& f, cplx z, real h) {
    cplx acc = 0, rot = 1;
    for (int k = 0; k < 4; ++k) {
        acc += f(z + h * rot) / rot;
        rot *= kI;
    }
    return acc / (4 * h);
}

// Newton iteration on f from seed; never returns the seed as a zero unless it is one.
inline ZeroRecord newton_zero(const std::function<cplx(cplx)>& f, cplx seed, const NewtonOptions& opt = {}) {
    ZeroRecord r;
    r.seed = seed;
    cplx z = seed;
    for (int it = 1; it <= opt.max_iter; ++it) {
        r.iterations = it;
        cplx fz = f(z);
        if (fz == cplx(0, 0)) {
            r.location = z;
            r.residual = 0;
            r.converged = true;
            return r;
        }
        cplx df = circle_derivative(f, z, opt.h);
        if (!std::isfinite(std::abs(fz)) || !std::isfinite(std::abs(df)) || df == cplx(0, 0)) break;
        cplx step = fz / df;
        real len = std::abs(step);
        if (len > opt.max_step) step *= opt.max_step / len;
        z -= step;
        if (std::abs(z - seed) > opt.max_move) break;
        if (len < opt.tol) {
            r.location = z;
            r.residual = std::abs(f(z));
            r.converged = r.residual < opt.residual;
            return r;
        }
    }
    r.location = z;
    r.residual = std::numeric_limits<real>::infinity();
    r.converged = false;
    return r;
}

// fe_rhs(s) divided by its gamma prefactor and the c+ term of the tube model,
// in the log domain. Near the tube this is 1 + u with u the ratio of the two
// model terms, so Newton steps see the oscillation rather than the gamma growth.
inline cplx tube_normalized(const TwistContext& ctx, const TubeData& d, cplx s) {
    const cplx w = 1.0L - s;
    cplx v = ctx.fe_rhs(s, TwistContext::Mode::automatic, 1e-14L).value;
    if (v == cplx(0, 0)) return 0;
    LogComplex scale = LogComplex::from(ctx.form().omega() / (kI * std::sqrt(kTwoPi)) * d.c_plus) *
                       LogComplex::from_log((1.0L - 2.0L * s) * std::log(ctx.Q() / 2) - kI * kPi * w -
                                            2.0L * w * std::log(d.m_plus)) *
                       lngamma(2.0L * w - 0.5L);
    return std::exp(std::log(v) - scale.log());
}

inline ZeroRecord refine_zero(const TwistContext& ctx, const TubeData& d, cplx seed, const ZeroClassifier& cls,
                              const NewtonOptions& opt = {}) {
    if (!(seed.real() < 0)) throw domain_error("refine_zero: seed must lie left of the critical strip");
    auto f = [&](cplx s) { return tube_normalized(ctx, d, s); };
    ZeroRecord r = newton_zero(f, seed, opt);
    r.distance_to_line = d.distance(r.location);
    r.kind = r.converged ? cls.kind(d, r.location) : ZeroKind::unclassified;
    return r;
}

// Refines every seed and flags seeds that landed on an already found zero.
inline std::vector<ZeroRecord> refine_zeros(const TwistContext& ctx, const TubeData& d, const std::vector<cplx>& seeds,
                                            const ZeroClassifier& cls, const NewtonOptions& opt = {}) {
    std::vector<ZeroRecord> out;
    for (cplx s : seeds) {
        ZeroRecord r = refine_zero(ctx, d, s, cls, opt);
        for (const ZeroRecord& q : out)
            if (q.converged && r.converged && std::abs(q.location - r.location) < 1e-6L) r.collision = true;
        out.push_back(r);
    }
    return out;
}

// |fe_rhs(s)| over |prefactor Gamma(2(1-s) - 1/2)| times the larger model term at 1 - s.
// Off the tube the model alone keeps this above 1 - e^{-2 pi |offset|}.
inline real normalized_modulus(const TwistContext& ctx, const TubeData& d, cplx s) {
    const cplx w = 1.0L - s;
    cplx v = ctx.fe_rhs(s, TwistContext::Mode::automatic, 1e-12L).value;
    real lg = lngamma(2.0L * w - 0.5L).log_modulus;
    real lp = std::log(std::abs(ctx.form().omega())) - 0.5L * std::log(kTwoPi) + (1 - 2 * s.real()) * std::log(ctx.Q() / 2);
    return std::exp(std::log(std::abs(v)) - lg - lp - tube_log_scale(d, w));
}

struct SweepResult {
    real min_ratio = std::numeric_limits<real>::infinity();
    cplx where;
    i64 points = 0;
};

struct SweepMesh {
    real dsigma = 0.25L;
    real dt = 0.1L;
    real half_width = 4;  // t-range on each side of the line
};

// Minimum of normalized_modulus over a mesh of sigma in [sigma_lo, sigma_hi]
// at distance >= eps from the line (the two boundary rows of the tube included).
inline SweepResult off_tube_sweep(const TwistContext& ctx, const TubeData& d, real sigma_lo, real sigma_hi, real eps,
                                  const SweepMesh& mesh = {}) {
    SweepResult out;
    const real edge = eps * std::sqrt(1 + d.slope * d.slope) * (1 + 1e-9L);
    const i64 cols = static_cast<i64>(std::floor((sigma_hi - sigma_lo) / mesh.dsigma + 1e-9L));
    for (i64 i = 0; i <= cols; ++i) {
        real sg = sigma_lo + static_cast<real>(i) * mesh.dsigma;
        std::vector<real> offs{edge, -edge};
        for (real o = mesh.dt * std::ceil(edge / mesh.dt); o <= mesh.half_width; o += mesh.dt) {
            if (o <= edge) continue;
            offs.push_back(o);
            offs.push_back(-o);
        }
        for (real o : offs) {
            cplx s(sg, d.line_t(sg) + o);
            real r = normalized_modulus(ctx, d, s);
            ++out.points;
            if (r < out.min_ratio) {
                out.min_ratio = r;
                out.where = s;
            }
        }
    }
    return out;
}

// Lower bound the two-term model guarantees at vertical offset eps; a sweep that
// stays above half of it has no room for a zero off the tube.
inline real off_tube_threshold(real eps) { return 0.5L * (1 - std::exp(-kTwoPi * eps)); }

struct SigmaEpsResult {
    real sigma_eps = 0;
    real eps = 0;
    real threshold = 0;
    int bisections = 0;
};

// Smallest sigma0 (to within tol) such that the off-tube sweep over [-R, -sigma0]
// stays above off_tube_threshold(eps); found by bisection over per-column minima.
inline SigmaEpsResult sigma_epsilon(const TwistContext& ctx, const TubeData& d, real eps, real R, real tol = 0.1L,
                                    const SweepMesh& mesh = {}) {
    SigmaEpsResult res;
    res.eps = eps;
    res.threshold = off_tube_threshold(eps);
    std::vector<real> col_min;
    const i64 cols = static_cast<i64>(std::floor(R / mesh.dsigma + 1e-9L));
    col_min.assign(static_cast<size_t>(cols + 1), -1);
    // column i sits at sigma = -R + i dsigma
    auto column = [&](i64 i) {
        real& m = col_min[static_cast<size_t>(i)];
        if (m < 0) {
            real sg = -R + static_cast<real>(i) * mesh.dsigma;
            m = off_tube_sweep(ctx, d, sg, sg + mesh.dsigma / 2, eps, mesh).min_ratio;
        }
        return m;
    };
    auto holds = [&](real sigma0) {
        i64 last = static_cast<i64>(std::floor((R - sigma0) / mesh.dsigma + 1e-9L));
        for (i64 i = 0; i <= std::min(last, cols); ++i)
            if (column(i) < res.threshold) return false;
        return true;
    };
    real lo = 0, hi = R;
    if (!holds(hi)) throw convergence_error("sigma_epsilon: off-tube bound fails even at the far end of the range");
    if (holds(lo)) {
        res.sigma_eps = 0;
        return res;
    }
    while (hi - lo > tol) {
        real mid = (lo + hi) / 2;
        ++res.bisections;
        if (holds(mid))
            hi = mid;
        else
            lo = mid;
    }
    res.sigma_eps = hi;
    return res;
}

struct WindingOptions {
    real initial_step = 0.05L;
    real max_step = 0.5L;
    real min_step = 1e-7L;
    real max_turn = kPi / 4;  // largest accepted phase increment per step
    int nudges = 3;
    real nudge = 1e-3L;
};

struct WindingResult {
    int winding = 0;       // zeros minus poles inside
    int poles = 0;         // poles of F(s, alpha) inside (spectral alpha)
    int zeros = 0;         // winding + poles
    real total_phase = 0;  // 2 pi winding up to rounding
    i64 evaluations = 0;
    int nudged = 0;
};

struct boundary_zero_error : convergence_error {
    using convergence_error::convergence_error;
};

// Phase change of f along the segment a -> b with adaptive steps; each accepted
// step is checked against its midpoint.
inline real track_phase(const std::function<cplx(cplx)>& f, cplx a, cplx b, const WindingOptions& opt, i64& evals) {
    const real len = std::abs(b - a);
    if (len == 0) return 0;
    const cplx dir = (b - a) / len;
    real u = 0, h = std::min(opt.initial_step, len), total = 0;
    cplx fa = f(a);
    ++evals;
    while (u < len) {
        real step = std::min(h, len - u);
        cplx z1 = a + dir * (u + step);
        cplx f1 = f(z1);
        cplx fm = f(a + dir * (u + step / 2));
        evals += 2;
        real d = std::arg(f1 / fa);
        real d1 = std::arg(fm / fa), d2 = std::arg(f1 / fm);
        bool ok = std::isfinite(d) && std::abs(d) <= opt.max_turn && std::abs(d1 + d2 - d) < 1e-6L;
        if (!ok) {
            h = step / 2;
            if (h < opt.min_step) throw boundary_zero_error("track_phase: step floor reached; boundary too close to a zero");
            continue;
        }
        total += d;
        u += step;
        fa = f1;
        h = std::min(opt.max_step, step * 1.5L);
    }
    return total;
}

// Phase change of f around a closed polygon, traversed in vertex order.
inline real polygon_phase(const std::function<cplx(cplx)>& f, const std::vector<cplx>& v, const WindingOptions& opt,
                          i64& evals) {
    real total = 0;
    for (size_t i = 0; i < v.size(); ++i) total += track_phase(f, v[i], v[(i + 1) % v.size()], opt, evals);
    return total;
}

// Winding of f around a convex polygon given counterclockwise; reverse walks it
// clockwise. A boundary too close to a zero is pushed outward and retried.
inline WindingResult count_winding(const std::function<cplx(cplx)>& f, std::vector<cplx> v, bool reverse = false,
                                   const WindingOptions& opt = {}) {
    if (v.size() < 3) throw domain_error("count_winding: polygon needs three vertices");
    cplx centre = 0;
    for (cplx z : v) centre += z;
    centre /= static_cast<real>(v.size());
    if (reverse) std::reverse(v.begin(), v.end());
    WindingResult res;
    for (int attempt = 0;; ++attempt) {
        std::vector<cplx> w = v;
        for (cplx& z : w) z += (z - centre) / std::abs(z - centre) * (opt.nudge * attempt);
        try {
            res.total_phase = polygon_phase(f, w, opt, res.evaluations);
            res.nudged = attempt;
            break;
        } catch (const boundary_zero_error&) {
            if (attempt >= opt.nudges) throw;
        }
    }
    res.winding = static_cast<int>(std::lround(res.total_phase / kTwoPi));
    res.zeros = res.winding;
    return res;
}

inline std::vector<cplx> rectangle(real sl, real sr, real tl, real th) {
    if (!(sl < sr) || !(tl < th)) throw domain_error("rectangle: empty");
    return {{sl, tl}, {sr, tl}, {sr, th}, {sl, th}};
}

// Zeros of F(s, alpha) in the rectangle, counted by the argument principle;
// poles at the s_l inside are added back.
inline WindingResult count_zeros_rectangle(const TwistContext& ctx, real sl, real sr, real tl, real th,
                                           bool reverse = false, const WindingOptions& opt = {}) {
    auto f = [&](cplx s) { return twist_value(ctx, s); };
    WindingResult res = count_winding(f, rectangle(sl, sr, tl, th), reverse, opt);
    int poles = 0;
    for (int l = 0; l <= ctx.hstar(); ++l) {
        real sg = TwistContext::s_ell(l);
        if (ctx.residue_kappa(l) != cplx(0, 0) && sl < sg && sg < sr && tl < 0 && 0 < th) ++poles;
    }
    res.poles = reverse ? -poles : poles;
    res.zeros = res.winding + res.poles;
    return res;
}

// Zeros in the tube-aligned parallelogram between sigma_lo and sigma_hi with
// vertical half-height H around the line; needs sigma_hi < 0.
inline WindingResult count_zeros_tube(const TwistContext& ctx, const TubeData& d, real sigma_lo, real sigma_hi, real H,
                                      const WindingOptions& opt = {}) {
    if (!(sigma_hi < 0) || !(sigma_lo < sigma_hi) || !(H > 0)) throw domain_error("count_zeros_tube: bad parallelogram");
    auto f = [&](cplx s) { return ctx.fe_rhs(s, TwistContext::Mode::automatic, 1e-14L).value; };
    std::vector<cplx> v = {{sigma_lo, d.line_t(sigma_lo) - H},
                           {sigma_hi, d.line_t(sigma_hi) - H},
                           {sigma_hi, d.line_t(sigma_hi) + H},
                           {sigma_lo, d.line_t(sigma_lo) + H}};
    return count_winding(f, v, false, opt);
}

// Main terms of the zero count with |gamma| <= T.
inline real rvm_prediction(const TwistContext& ctx, const TubeData& d, real T) {
    if (!(T > std::exp(1.0L))) throw domain_error("rvm_prediction: T must exceed e");
    const real nbar = static_cast<real>(first_support_index(ctx.form()));
    const real c = std::log(static_cast<real>(ctx.conductor()) / (nbar * d.m_plus * d.m_minus * std::pow(kTwoPi * std::exp(1.0L), 2)));
    return 2 / kPi * T * std::log(T) + T / kPi * c;
}

struct RvmComparison {
    real T = 0;
    real sigma_left = 0, sigma_right = 0;
    WindingResult count;
    real prediction = 0;
    real deviation = 0;  // count - prediction
};

// Left edge on a cut point of the tube lattice at or beyond -sigma_minus, so it
// passes between two trivial zeros.
inline real strip_left_edge(const TubeData& d, real sigma_minus) {
    auto cuts = tube_lattice(d, -sigma_minus - 2 * d.spacing(), -sigma_minus, false);
    if (cuts.empty()) throw convergence_error("strip_left_edge: no cut point found");
    return cuts.back().real();
}

inline RvmComparison rvm_compare(const TwistContext& ctx, const TubeData& d, real T, real sigma_minus,
                                 const WindingOptions& opt = {}) {
    RvmComparison r;
    r.T = T;
    r.sigma_left = strip_left_edge(d, sigma_minus);
    r.sigma_right = sigma_plus(ctx);
    if (!first_term_dominates(ctx, r.sigma_right))
        throw convergence_error("rvm_compare: first term does not dominate on the right edge");
    r.count = count_zeros_rectangle(ctx, r.sigma_left, r.sigma_right, -T, T, false, opt);
    r.prediction = rvm_prediction(ctx, d, T);
    r.deviation = static_cast<real>(r.count.zeros) - r.prediction;
    return r;
}

struct GrowthFit {
    real plus = 0;   // exponent as t -> +infinity
    real minus = 0;  // exponent as t -> -infinity
};

inline real log_slope(const std::vector<real>& x, const std::vector<real>& y) {
    real mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= static_cast<real>(x.size());
    my /= static_cast<real>(x.size());
    real num = 0, den = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return num / den;
}

// Least-squares slope of log|F(sigma + it)| against log t, separately for t > 0 and t < 0.
inline GrowthFit growth_probe(const TwistContext& ctx, real sigma, const std::vector<real>& ts) {
    if (ts.size() < 2) throw domain_error("growth_probe: need at least two t values");
    real lo = *std::min_element(ts.begin(), ts.end()), hi = *std::max_element(ts.begin(), ts.end());
    if (!(lo > 0) || hi < 10 * lo) throw domain_error("growth_probe: t values must be positive and span a decade");
    std::vector<real> lx, yp, ym;
    for (real t : ts) {
        lx.push_back(std::log(t));
        yp.push_back(std::log(std::abs(twist_value(ctx, cplx(sigma, t)))));
        ym.push_back(std::log(std::abs(twist_value(ctx, cplx(sigma, -t)))));
    }
    return {log_slope(lx, yp), log_slope(lx, ym)};
}

}  // namespace twistlab
