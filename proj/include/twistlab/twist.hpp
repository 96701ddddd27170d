#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ladder.hpp"
#include "lfun.hpp"

namespace twistlab {

inline real to_real(const rational& r) {
    return static_cast<real>(r.numerator()) / static_cast<real>(r.denominator());
}

// The support point nearest to -nu_alpha on one side of it.
struct SupportGap {
    i64 n = 0;     // nu^2
    int sign = 0;  // sign of nu
    real m = 0;    // |nu + nu_alpha|
};

struct RichardsonOptions {
    std::vector<real> grid;  // explicit X grid; empty selects one from the analyticity radius
    real growth = 1.5L;
    int levels = 10;
};

// sum_{n >= H} a*(n) n^{-w - r/2} for r = 0, 1, ..., filled on demand.
class ShiftedTails {
public:
    ShiftedTails(const LSeriesEvaluator& ev, cplx w, i64 H) : ev_(ev), w_(w), H_(H) {}

    cplx w() const { return w_; }
    i64 H() const { return H_; }

    const ComplexEval& get(int r, real atol) {
        size_t k = static_cast<size_t>(r);
        if (k >= vals_.size()) {
            vals_.resize(k + 1);
            asked_.resize(k + 1, std::numeric_limits<real>::infinity());
        }
        if (atol < asked_[k]) {
            vals_[k] = ev_.dual_tail(w_ + static_cast<real>(r) / 2, H_ - 1, atol);
            asked_[k] = atol;
        }
        return vals_[k];
    }

private:
    const LSeriesEvaluator& ev_;
    cplx w_;
    i64 H_;
    std::vector<ComplexEval> vals_;
    std::vector<real> asked_;
};

// A form together with a twist parameter alpha = p/q.
class TwistContext {
public:
    enum class Mode { automatic, direct, stratified };

    TwistContext(HalfIntegralForm form, rational alpha) : ev_(std::move(form)), alpha_(alpha) {
        if (alpha <= rational(0)) throw domain_error("TwistContext: alpha must be positive");
        const HalfIntegralForm& f = ev_.form();
        n_alpha_ = rational(f.N()) * alpha * alpha / rational(4);
        nu_alpha_ = std::sqrt(to_real(n_alpha_));
        in_spectrum_ = n_alpha_.denominator() == 1 && f.fourier(n_alpha_.numerator()) != 0;
        ladder_ = a_ladder(ev_.hstar());
        for (const rational& a : ladder_) ladder_real_.push_back(to_real(a));
    }

    const HalfIntegralForm& form() const { return ev_.form(); }
    const LSeriesEvaluator& lseries() const { return ev_; }
    rational alpha() const { return alpha_; }
    real alpha_real() const { return to_real(alpha_); }
    rational n_alpha() const { return n_alpha_; }
    real nu_alpha() const { return nu_alpha_; }
    bool in_spectrum() const { return in_spectrum_; }
    int degree() const { return 2; }
    i64 conductor() const { return form().N(); }
    int h() const { return ev_.h(); }
    int hstar() const { return ev_.hstar(); }
    real mu() const { return ev_.mu(); }
    real mu_star() const { return ev_.mu_star(); }
    real Q() const { return ev_.Q(); }
    const std::vector<rational>& ladder() const { return ladder_; }

    static real s_ell(int l) { return 0.75L - static_cast<real>(l) / 2; }

    // sqrt(n) - nu_alpha with the difference n - n_alpha taken exactly
    real gap(i64 n, real sqrt_n) const {
        rational d = rational(n) - n_alpha_;
        return to_real(d) / (sqrt_n + nu_alpha_);
    }

    cplx z_X(i64 n, real X) const {
        real sn = std::sqrt(static_cast<real>(n));
        return cplx(nu_alpha_, -Q() / (2 * X)) / sn;
    }

    // c*_l(nu^2) for nu = sign * sqrt(n)
    cplx c_star(i64 n, int sign, int l) const {
        cplx astar = form().dual_phase() * form().a(n);
        if (sign > 0) return -expipi(mu()) * astar;
        rational d = rational(n) - n_alpha_;
        if (d == rational(0)) throw domain_error("c_star: nu = -nu_alpha is excluded");
        if (d < rational(0)) return expipi(0.5L + static_cast<real>(l) - mu()) * astar;
        return expipi(-mu()) * astar;
    }

    // Nearest support point to -nu_alpha with nu > -nu_alpha (sign +1) or nu < -nu_alpha (sign -1).
    SupportGap nearest_gap(int side) const {
        SupportGap best;
        best.m = std::numeric_limits<real>::infinity();
        i64 cap = std::max<i64>(1024, 4 * static_cast<i64>(std::ceil(to_real(n_alpha_))) + 64);
        for (int pass = 0; pass < 20; ++pass, cap *= 4) {
            auto t = form().terms(cap);
            for (const Term& x : *t) {
                if (x.n > cap) break;
                rational d = rational(x.n) - n_alpha_;
                if (side > 0) {
                    real mp = x.sqrt_n + nu_alpha_;
                    if (mp < best.m) best = {x.n, 1, mp};
                    if (d < rational(0)) {
                        real mm = -gap(x.n, x.sqrt_n);
                        if (mm < best.m) best = {x.n, -1, mm};
                    }
                } else if (d > rational(0)) {
                    real mm = gap(x.n, x.sqrt_n);
                    if (mm < best.m) best = {x.n, -1, mm};
                    break;
                }
            }
            if (std::isfinite(best.m)) return best;
        }
        throw convergence_error("nearest_gap: no support point found");
    }

    // Radius of analyticity of the regularized twist in u = 1/X.
    real richardson_radius() const {
        return 2 * std::min(nearest_gap(1).m, nearest_gap(-1).m) / Q();
    }

    // F^{+}_l (sign = 1) or F^{-}_l (sign = -1) at s.
    ComplexEval F_pm_ell(cplx s, int l, int sign, Mode mode = Mode::automatic, real tol = 1e-15L) const {
        check_ell(l);
        auto all = pm_all(s, mode, tol);
        return all[static_cast<size_t>(2 * l + (sign > 0 ? 0 : 1))];
    }

    // e^{-i pi s} F^+_l(s) + e^{i pi s} F^-_l(s)
    ComplexEval F_star_ell(cplx s, int l, Mode mode = Mode::automatic, real tol = 1e-15L) const {
        check_ell(l);
        auto all = pm_all(s, mode, tol);
        return combine_star(s, all[static_cast<size_t>(2 * l)], all[static_cast<size_t>(2 * l + 1)]);
    }

    // Right-hand side of the twisted functional equation at s.
    ComplexEval fe_rhs(cplx s, Mode mode = Mode::automatic, real tol = 1e-15L) const {
        const cplx w = 1.0L - s;
        auto all = pm_all(w, mode, tol);
        const int hs = hstar();
        const cplx z = 2.0L * w - 0.5L;
        // sum_l a_l Gamma(z - l) F*_l = Gamma(z - h*) sum_l a_l prod_{l < j <= h*} (z - j) F*_l
        KahanSum acc;
        real err = 0;
        for (int l = 0; l <= hs; ++l) {
            cplx poly = 1;
            for (int j = l + 1; j <= hs; ++j) poly *= z - static_cast<real>(j);
            ComplexEval fs = combine_star(w, all[static_cast<size_t>(2 * l)], all[static_cast<size_t>(2 * l + 1)]);
            cplx c = ladder_real_[static_cast<size_t>(l)] * poly;
            acc.add(c * fs.value);
            err += std::abs(c) * fs.error;
        }
        LogComplex pref = LogComplex::from(form().omega() / (kI * std::sqrt(kTwoPi))) *
                          LogComplex::from_log((1.0L - 2.0L * s) * std::log(Q() / 2)) * gamma_shifted(z - static_cast<real>(hs));
        ComplexEval r;
        r.value = (pref * LogComplex::from(acc.value())).value();
        r.error = std::exp(pref.log_modulus) * err;
        r.method = "fe-rhs";
        return r;
    }

    // Residue of F(s, alpha) at s_l; zero off the spectrum.
    cplx residue_kappa(int l) const {
        check_ell(l);
        if (!in_spectrum_) return 0;
        const real sl = s_ell(l);
        const i64 na = n_alpha_.numerator();
        cplx astar = form().dual_phase() * form().a(na);
        LogComplex v = LogComplex::from(kI * form().omega() * ladder_real_[static_cast<size_t>(l)] / (2 * std::sqrt(kTwoPi))) *
                       LogComplex::from(astar) *
                       LogComplex::from_log(-(1 - sl) * std::log(static_cast<real>(na)) + (1 - 2 * sl) * std::log(Q() / 2));
        return v.value() * expipi(-(sl + mu()));
    }

    // Pole part sum_l 2 kappa_l Gamma(2(s_l - s)) X^{2(s_l - s)}.
    cplx sigma_X(cplx s, real X) const {
        if (!in_spectrum_) return 0;
        KahanSum acc;
        for (int l = 0; l <= hstar(); ++l) {
            cplx e = 2.0L * (s_ell(l) - s);
            cplx k = residue_kappa(l);
            if (k == cplx(0, 0)) continue;
            LogComplex v = LogComplex::from(2.0L * k) * gamma_shifted(e) * LogComplex::from_log(e * std::log(X));
            acc.add(v.value());
        }
        return acc.value();
    }

    // sum a(n) e(-alpha sqrt(n)) e^{-sqrt(n)/X} n^{-s}, one value per X.
    std::vector<ComplexEval> F_X_twist(cplx s, const std::vector<real>& Xs) const {
        if (Xs.empty()) return {};
        const real sigma = s.real();
        std::vector<i64> cuts;
        for (real X : Xs) {
            if (!(X > 1)) throw domain_error("F_X_twist: X must exceed 1");
            cuts.push_back(damped_cut(sigma, X));
        }
        const i64 cut = *std::max_element(cuts.begin(), cuts.end());
        auto t = form().terms(cut);
        std::vector<cplx> base;
        std::vector<real> root, size;
        std::vector<i64> index;
        for (const Term& x : *t) {
            if (x.n > cut) break;
            base.push_back(x.a * std::exp(-s * x.log_n) * twist_phase(x));
            root.push_back(x.sqrt_n);
            size.push_back(std::abs(x.a) * std::exp(-sigma * x.log_n));
            index.push_back(x.n);
        }
        std::vector<ComplexEval> out;
        for (size_t k = 0; k < Xs.size(); ++k) {
            KahanSum acc;
            real mag = 0;
            const real u = 1 / Xs[k];
            for (size_t i = 0; i < base.size() && index[i] <= cuts[k]; ++i) {
                real w = std::exp(-root[i] * u);
                acc.add(cplx(base[i].real() * w, base[i].imag() * w));
                mag += size[i] * w;
            }
            ComplexEval r;
            r.value = acc.value();
            r.error = 16 * std::numeric_limits<real>::epsilon() * mag +
                      damped_tail_bound(static_cast<real>(cuts[k]), sigma, Xs[k]);
            r.method = "damped";
            out.push_back(r);
        }
        return out;
    }

    ComplexEval F_X_twist(cplx s, real X) const { return F_X_twist(s, std::vector<real>{X})[0]; }

    // The twisted series summed directly; needs Re s above the form's safe abscissa.
    ComplexEval F_twist_direct(cplx s, real tol = 1e-13L, i64 max_terms = 20000000) const {
        if (s.real() < ev_.safe_abscissa()) throw domain_error("F_twist_direct: Re s below the safe abscissa");
        const real sigma = s.real();
        const i64 cap = form().square_supported() ? (max_terms / 10) * (max_terms / 10) : max_terms;
        i64 cut = 1024;
        while (form().abs_tail_bound(static_cast<real>(cut), sigma) > tol && cut < cap) cut *= 2;
        cut = std::min(cut, cap);
        auto t = form().terms(cut);
        KahanSum acc;
        for (const Term& x : *t) {
            if (x.n > cut) break;
            acc.add(x.a * std::exp(-s * x.log_n) * twist_phase(x));
        }
        ComplexEval r;
        r.value = acc.value();
        r.error = form().abs_tail_bound(static_cast<real>(cut), sigma);
        r.method = "direct";
        return r;
    }

    // Right-hand side of the finite-X identity for s in the strip
    // -2 delta < Re s < -delta (h* <= 2) or s_{h*+1} + delta < Re s < s_{h*} - delta.
    ComplexEval basic_formula_rhs(cplx s, real X, real delta = 0.4L, real tol = 1e-15L) const {
        if (!(X > 1)) throw domain_error("basic_formula_rhs: X must exceed 1");
        if (!in_strip(s.real(), delta)) throw domain_error("basic_formula_rhs: Re s outside the validity strip");
        const int hs = hstar();
        const cplx zeta(nu_alpha_, -Q() / (2 * X));
        const cplx w = 1.0L - s;
        real Kmax = 0;
        std::vector<cplx> expo;
        for (int l = 0; l <= hs; ++l) {
            expo.push_back(2.0L * (s - s_ell(l)));
            Kmax = std::max(Kmax, (1 + std::abs(expo.back())) * std::abs(zeta));
        }
        const i64 H = cutoff_H(Kmax);
        ShiftedTails tails(ev_, w, H);
        const cplx ep = expipi(s + mu()), em = expipi(-(s + mu()));
        const cplx eps = form().dual_phase();
        KahanSum total;
        real err = 0;
        auto t = form().terms(H);
        for (int l = 0; l <= hs; ++l) {
            KahanSum plus, minus;
            real mag = 0;
            for (const Term& x : *t) {
                if (x.n >= H) break;
                cplx lead = eps * x.a * std::exp(-w * x.log_n);
                // (1 + z)^e and (1 - z)^e with 1 -/+ z = (sqrt(n) -/+ zeta) / sqrt(n)
                cplx bp = cplx(x.sqrt_n + nu_alpha_, zeta.imag()) / x.sqrt_n;
                cplx bm = cplx(gap(x.n, x.sqrt_n), -zeta.imag()) / x.sqrt_n;
                cplx vp = lead * principal_power(bp, expo[static_cast<size_t>(l)]).value();
                cplx vm = lead * principal_power(bm, expo[static_cast<size_t>(l)]).value();
                plus.add(vp);
                minus.add(vm);
                mag += std::abs(vp) + std::abs(vm);
            }
            ComplexEval tp = binomial_tail(tails, expo[static_cast<size_t>(l)], zeta, 1, tol);
            ComplexEval tm = binomial_tail(tails, expo[static_cast<size_t>(l)], zeta, -1, tol);
            cplx inner = ep * (plus.value() + tp.value) - em * (minus.value() + tm.value);
            real ierr = std::abs(ep) * tp.error + std::abs(em) * tm.error +
                        8 * std::numeric_limits<real>::epsilon() * mag * (std::abs(ep) + std::abs(em));
            LogComplex g = gamma_shifted(2.0L * w - 0.5L - static_cast<real>(l));
            cplx gl = ladder_real_[static_cast<size_t>(l)] * g.value();
            total.add(gl * inner);
            err += std::abs(gl) * ierr;
        }
        LogComplex pref = LogComplex::from(form().omega() / (kI * std::sqrt(kTwoPi))) *
                          LogComplex::from_log((1.0L - 2.0L * s) * std::log(Q() / 2));
        ComplexEval r;
        r.value = (pref * LogComplex::from(total.value())).value();
        r.error = std::exp(pref.log_modulus) * err;
        r.method = "basic-formula";
        return r;
    }

    bool in_strip(real sigma, real delta) const {
        if (hstar() <= 2) return -2 * delta < sigma && sigma < -delta;
        return s_ell(hstar() + 1) + delta < sigma && sigma < s_ell(hstar()) - delta;
    }

    // Geometric X grid for the extrapolation, scaled to the analyticity radius.
    std::vector<real> richardson_grid(const RichardsonOptions& opt = {}) const {
        if (!opt.grid.empty()) return opt.grid;
        real X0 = std::max<real>(1.25L, 3 / richardson_radius());
        std::vector<real> g;
        for (int i = 0; i < opt.levels; ++i) g.push_back(X0 * std::pow(opt.growth, static_cast<real>(i)));
        return g;
    }

    // F(s, alpha) as the X -> infinity limit of F_X - Sigma_X, by polynomial
    // extrapolation in 1/X to 0.
    ComplexEval F_twist_continued(cplx s, const RichardsonOptions& opt = {}) const {
        std::vector<real> Xs = richardson_grid(opt);
        const size_t L = Xs.size();
        if (L < 2) throw domain_error("F_twist_continued: need at least two grid points");
        auto fx = F_X_twist(s, Xs);
        std::vector<cplx> T(L);
        for (size_t i = 0; i < L; ++i) T[i] = fx[i].value - sigma_X(s, Xs[i]);
        // Lagrange weights at u = 0 for rounding propagation
        real prop = 0;
        for (size_t i = 0; i < L; ++i) {
            real wgt = 1;
            for (size_t j = 0; j < L; ++j)
                if (j != i) wgt *= (1 / Xs[j]) / (1 / Xs[j] - 1 / Xs[i]);
            prop += std::abs(wgt) * fx[i].error;
        }
        cplx prev = T[0];
        cplx last = T[0];
        for (size_t m = 1; m < L; ++m) {
            for (size_t i = 0; i + m < L; ++i) {
                real r = Xs[i + m] / Xs[i];
                T[i] = (r * T[i + 1] - T[i]) / (r - 1);
            }
            prev = last;
            last = T[0];
        }
        // the last two diagonal entries differ by the size of the leftover term
        real diff = std::abs(last - prev);
        if (!std::isfinite(diff)) throw convergence_error("F_twist_continued: extrapolation table diverged");
        ComplexEval r;
        r.value = last;
        r.error = diff + prop;
        r.method = "richardson";
        return r;
    }

private:
    void check_ell(int l) const {
        if (l < 0 || l > hstar()) throw domain_error("ladder index out of range");
    }

    cplx twist_phase(const Term& x) const {
        const i64 p = alpha_.numerator(), q = alpha_.denominator();
        real frac;
        if (x.root >= 0) {
            __int128 prod = static_cast<__int128>(p) * x.root;
            frac = static_cast<real>(static_cast<i64>(prod % q)) / static_cast<real>(q);
        } else {
            real v = static_cast<real>(p) * x.sqrt_n / static_cast<real>(q);
            frac = v - std::floor(v);
        }
        return expipi(-2 * frac);
    }

    // Bound on sum_{n >= n_cut} |a(n)| n^{-sigma} e^{-sqrt(n)/X}.
    real damped_tail_bound(real n_cut, real sigma, real X) const {
        const HalfIntegralForm& f = form();
        const real C = f.bound_constant();
        const real P = f.bound_exponent() - (f.kappa() - 1) / 2 - sigma;
        if (f.square_supported()) {
            real V = std::sqrt(std::max<real>(n_cut, 1));
            real e = 2 * P;
            if (e > 0 && V < e * X) return std::numeric_limits<real>::infinity();
            real g = std::pow(V, e) * std::exp(-V / X);
            real I = std::pow(X, e + 1) * std::abs(upper_incomplete_gamma(cplx(e + 1, 0), V / X));
            return C * (g + I);
        }
        real M = std::max<real>(n_cut, 1);
        real r = std::sqrt(M);
        if (P > 0 && r < 2 * P * X) return std::numeric_limits<real>::infinity();
        real dens = 1.0L / static_cast<real>(f.quotient().step());
        real g = std::pow(M, P) * std::exp(-r / X);
        real I = 2 * std::pow(X, 2 * P + 2) * std::abs(upper_incomplete_gamma(cplx(2 * P + 2, 0), r / X));
        return C * (g + dens * I);
    }

    // Smallest cut (on a 1.1 ratio ladder) whose damped tail is negligible against
    // the rounding of the head.
    i64 damped_cut(real sigma, real X) const {
        const real target = 1e-22L * std::max<real>(1, damped_envelope(sigma, X));
        real cut = 1024;
        while (damped_tail_bound(cut, sigma, X) > target) {
            if (cut > 1e15L) throw convergence_error("F_X_twist: truncation search failed");
            cut *= 1.1L;
        }
        return static_cast<i64>(std::ceil(cut));
    }

    // Rough size of sum |a(n)| n^{-sigma} e^{-sqrt(n)/X}, the scale for truncation.
    real damped_envelope(real sigma, real X) const {
        const HalfIntegralForm& f = form();
        const real P = f.bound_exponent() - (f.kappa() - 1) / 2 - sigma;
        const real e = f.square_supported() ? 2 * P : 2 * P + 1;
        real scale = 1;
        if (e > -1) scale += std::exp(std::lgamma(e + 1) + (e + 1) * std::log(X)) * (f.square_supported() ? 1 : 2);
        return f.bound_constant() * scale;
    }

    // H = 2 ceil(K^2) + 1, kept above n_alpha + 1
    i64 cutoff_H(real K) const {
        i64 H = 2 * static_cast<i64>(std::ceil(K * K)) + 1;
        i64 floor_na = static_cast<i64>(std::floor(to_real(n_alpha_)));
        return std::max<i64>(H, floor_na + 2);
    }

    // sum_{n >= H} a*(n) n^{-w} (1 + sgn zeta / sqrt(n))^rho by the binomial series.
    ComplexEval binomial_tail(ShiftedTails& T, cplx rho, cplx zeta, int sgn, real tol) const {
        const real sigma = T.w().real();
        const real sqrtH = std::sqrt(static_cast<real>(T.H()));
        const real az = std::abs(zeta);
        const real arho = std::abs(rho);
        KahanSum acc;
        real err = 0;
        cplx b = 1;  // binom(rho, r) (sgn zeta)^r
        for (int r = 0; r < 2000; ++r) {
            real coef = std::abs(b);
            if (coef == 0) break;
            real A = form().abs_tail_bound(static_cast<real>(T.H()), sigma + static_cast<real>(r) / 2);
            real ratio = std::max<real>(1, (arho + r) / (r + 1)) * az / sqrtH;
            if (std::isfinite(A) && ratio < 1) {
                real rem = coef * A / (1 - ratio);
                if (rem < tol) {
                    err += rem;
                    break;
                }
            }
            const ComplexEval& t = T.get(r, tol / std::max<real>(1, coef) / 8);
            acc.add(b * t.value);
            err += coef * t.error;
            b *= (rho - static_cast<real>(r)) / static_cast<real>(r + 1) * (static_cast<real>(sgn) * zeta);
            if (r == 1999) throw convergence_error("binomial_tail: series did not settle");
        }
        ComplexEval out;
        out.value = acc.value();
        out.error = err;
        out.method = "stratified";
        return out;
    }

    ComplexEval combine_star(cplx s, const ComplexEval& plus, const ComplexEval& minus) const {
        cplx em = expipi(-s), ep = expipi(s);
        ComplexEval r;
        r.value = em * plus.value + ep * minus.value;
        r.error = std::abs(em) * plus.error + std::abs(ep) * minus.error;
        r.method = plus.method;
        return r;
    }

    // F^{+}_l, F^{-}_l for l = 0..h*, interleaved.
    std::vector<ComplexEval> pm_all(cplx s, Mode mode, real tol) const {
        if (mode == Mode::automatic) mode = s.real() >= ev_.safe_abscissa() + 1.5L ? Mode::direct : Mode::stratified;
        if (mode == Mode::direct && s.real() < ev_.safe_abscissa())
            throw domain_error("F_pm_ell: direct mode below the safe abscissa");
        const int hs = hstar();
        std::vector<ComplexEval> out(static_cast<size_t>(2 * hs + 2));
        real Kmax = 0;
        for (int l = 0; l <= hs; ++l) Kmax = std::max(Kmax, (1 + std::abs(rho_of(s, l))) * nu_alpha_);
        i64 cut;
        if (mode == Mode::direct) {
            cut = direct_cut(s, tol);
        } else {
            cut = cutoff_H(Kmax);
        }
        auto t = form().terms(cut);
        const cplx eps = form().dual_phase();
        for (int l = 0; l <= hs; ++l) {
            const cplx expo = 2.0L * s - 0.5L - static_cast<real>(l);
            const real lexp = 0.5L + static_cast<real>(l);
            KahanSum plus, minus;
            real magp = 0, magm = 0;
            for (const Term& x : *t) {
                if (mode == Mode::direct ? x.n > cut : x.n >= cut) break;
                cplx astar = eps * x.a;
                real half_log = x.log_n / 2;
                // nu = +sqrt(n)
                {
                    cplx v = -expipi(mu()) * astar * std::exp(-lexp * half_log - expo * std::log(x.sqrt_n + nu_alpha_));
                    plus.add(v);
                    magp += std::abs(v);
                }
                // nu = -sqrt(n)
                rational d = rational(x.n) - n_alpha_;
                if (d == rational(0)) continue;
                real g = std::abs(gap(x.n, x.sqrt_n));
                cplx tw = std::exp(-lexp * half_log - expo * std::log(g));
                if (d < rational(0)) {
                    cplx v = expipi(0.5L + static_cast<real>(l) - mu()) * astar * tw;
                    plus.add(v);
                    magp += std::abs(v);
                } else {
                    cplx v = expipi(-mu()) * astar * tw;
                    minus.add(v);
                    magm += std::abs(v);
                }
            }
            const real ulp = 8 * std::numeric_limits<real>::epsilon();
            ComplexEval P, M;
            P.value = plus.value();
            M.value = minus.value();
            P.error = ulp * magp;
            M.error = ulp * magm;
            if (mode == Mode::direct) {
                real tb = direct_tail_bound(s, l, cut);
                P.error += tb;
                M.error += tb;
                P.method = M.method = "direct";
            } else {
                ShiftedTails tails(ev_, s, cut);
                const cplx rho = rho_of(s, l);
                ComplexEval tp = binomial_tail(tails, rho, nu_alpha_, 1, tol);
                ComplexEval tm = binomial_tail(tails, rho, nu_alpha_, -1, tol);
                P.value += -expipi(mu()) * tp.value;
                M.value += expipi(-mu()) * tm.value;
                P.error += tp.error;
                M.error += tm.error;
                P.method = M.method = "stratified";
            }
            out[static_cast<size_t>(2 * l)] = P;
            out[static_cast<size_t>(2 * l + 1)] = M;
        }
        return out;
    }

    static cplx rho_of(cplx s, int l) { return -2.0L * s + 0.5L + static_cast<real>(l); }

    // sup over n > cut of |(1 +/- nu_alpha / sqrt(n))^rho| times the absolute tail
    real direct_tail_bound(cplx s, int l, i64 cut) const {
        real rr = rho_of(s, l).real();
        real x = nu_alpha_ / std::sqrt(static_cast<real>(cut));
        if (x >= 1) return std::numeric_limits<real>::infinity();
        real factor = rr <= 0 ? std::pow(1 - x, rr) : std::pow(1 + x, rr);
        return factor * form().abs_tail_bound(static_cast<real>(cut), s.real());
    }

    i64 direct_cut(cplx s, real tol) const {
        i64 cut = std::max<i64>(1024, 4 * static_cast<i64>(std::ceil(to_real(n_alpha_))) + 16);
        const i64 cap = form().square_supported() ? i64(4000000) * 4000000 : 20000000;
        for (;;) {
            real worst = 0;
            for (int l = 0; l <= hstar(); ++l) worst = std::max(worst, direct_tail_bound(s, l, cut));
            if (worst <= tol || cut >= cap) return cut;
            cut *= 2;
        }
    }

    LSeriesEvaluator ev_;
    rational alpha_;
    rational n_alpha_;
    real nu_alpha_ = 0;
    bool in_spectrum_ = false;
    std::vector<rational> ladder_;
    std::vector<real> ladder_real_;
};

}  // namespace twistlab
