#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ladder.hpp"
#include "qseries.hpp"
#include "special.hpp"

namespace twistlab {

// Normalized L-functions F(s) = L_f(s + (kappa-1)/2) and F*(s) of a form.
class LSeriesEvaluator {
public:
    explicit LSeriesEvaluator(HalfIntegralForm form) : form_(std::move(form)) {
        Q_ = std::sqrt(static_cast<real>(form_.N())) / kTwoPi;
        h_ = (form_.k() - 1) / 2;
        hstar_ = std::max(0, h_ - 1);
        mu_ = static_cast<real>(2 * h_ - 1) / 4;
        mustar_ = static_cast<real>(2 * hstar_ + 1) / 4;
        safe_abscissa_ = form_.square_supported() ? 0.9L : 3.0L;
    }

    const HalfIntegralForm& form() const { return form_; }
    real Q() const { return Q_; }
    int h() const { return h_; }
    int hstar() const { return hstar_; }
    real mu() const { return mu_; }
    real mu_star() const { return mustar_; }
    real safe_abscissa() const { return safe_abscissa_; }

    // sum_{n <= M} a(n) n^{-s}, or a*(n) when dual
    cplx head_sum(cplx s, i64 M, bool dual = false) const {
        auto t = form_.terms(M);
        KahanSum acc;
        for (const Term& x : *t) {
            if (x.n > M) break;
            acc.add(x.a * std::exp(-s * x.log_n));
        }
        return dual ? form_.dual_phase() * acc.value() : acc.value();
    }

    ComplexEval F_direct(cplx s, real tol = 1e-13L, i64 max_terms = 20000000) const {
        return direct(s, false, tol, max_terms);
    }
    ComplexEval Fstar_direct(cplx s, real tol = 1e-13L, i64 max_terms = 20000000) const {
        return direct(s, true, tol, max_terms);
    }

    // Completed integral split at y0 = rho e^{i theta}:
    // Lambda(s') = sum c(n) x_n^{-s'} Gamma(s', x_n y0) + w sum c'(n) x_n^{s'-kappa} Gamma(kappa-s', x_n / y0),
    // x_n = 2 pi n / sqrt(N).
    ComplexEval Lambda(cplx sp, bool dual, real rho, real theta) const {
        const real kappa = form_.kappa();
        const cplx eps = form_.dual_phase();
        const cplx w = form_.omega();
        cplx phase1 = dual ? eps : cplx(1, 0);
        cplx phase2 = dual ? 1.0L / w : w * eps;
        cplx y0 = std::polar(rho, theta);
        cplx a1 = sp, a2 = kappa - sp;
        real c1 = rho * std::cos(theta), c2 = std::cos(theta) / rho;
        real need = 8 + std::max(std::abs(a1), std::abs(a2));
        real sqrtN = std::sqrt(static_cast<real>(form_.N()));
        KahanSum acc;
        real mag = 0, biggest = 0, last = 0;
        i64 nblock = 256;
        for (;;) {
            auto t = form_.terms(nblock);
            bool done = false;
            for (const Term& x : *t) {
                if (x.n > nblock) break;
                if (x.n <= last) continue;
                last = static_cast<real>(x.n);
                real xn = kTwoPi * static_cast<real>(x.n) / sqrtN;
                real lx = std::log(xn);
                cplx v1 = std::exp(-a1 * lx) * upper_incomplete_gamma(a1, xn * y0);
                cplx v2 = std::exp(-a2 * lx) * upper_incomplete_gamma(a2, xn / y0);
                cplx term = static_cast<real>(x.c) * (phase1 * v1 + phase2 * v2);
                acc.add(term);
                real m = std::abs(term);
                mag += m;
                biggest = std::max(biggest, m);
                if (xn * std::min(c1, c2) > need + 60 && m < 1e-24L * biggest) {
                    done = true;
                    break;
                }
            }
            if (done) break;
            if (last == 0 && nblock > (i64(1) << 24)) break;  // no coefficients at all
            if (nblock > (i64(1) << 40)) throw convergence_error("Lambda: term loop did not terminate");
            nblock *= 4;
        }
        ComplexEval r;
        r.value = acc.value();
        r.error = 64 * std::numeric_limits<real>::epsilon() * mag;
        r.method = "completed";
        return r;
    }

    // Rotation angle for the split point: keeps the exp(pi|t|/2) cancellation below e^6.
    static real split_angle(real t) {
        real at = std::abs(t);
        if (at <= 6 / (kPi / 2)) return 0;
        real th = kPi / 2 - 6 / at;
        return t > 0 ? th : -th;
    }

    ComplexEval F_complete(cplx s, real rho = 1) const { return completed(s, false, rho); }
    ComplexEval Fstar_complete(cplx s, real rho = 1) const { return completed(s, true, rho); }

    // sum_{n > M} a*(n) n^{-w}: direct when the certified tail is cheap, else F*(w) - head.
    ComplexEval dual_tail(cplx w, i64 M, real atol = 1e-17L) const {
        i64 cut = M;
        const i64 budget = M + 100000;
        const i64 cap_n = form_.square_supported() ? std::max<i64>(M, 1) * 1000000 : std::max<i64>(M, 1) * 1000;
        bool direct_ok = false;
        for (i64 c = std::max<i64>(2 * M, 64); c <= cap_n; c *= 2) {
            real b = form_.tail_bound(static_cast<real>(c), w);
            i64 est = form_.square_supported() ? static_cast<i64>(std::sqrt(static_cast<real>(c))) : c;
            i64 est_M = form_.square_supported() ? static_cast<i64>(std::sqrt(static_cast<real>(M))) : M;
            if (est - est_M > budget - M) break;
            if (b <= atol) {
                cut = c;
                direct_ok = true;
                break;
            }
        }
        ComplexEval r;
        if (direct_ok) {
            auto t = form_.terms(cut);
            KahanSum acc;
            for (const Term& x : *t) {
                if (x.n <= M) continue;
                if (x.n > cut) break;
                acc.add(x.a * std::exp(-w * x.log_n));
            }
            r.value = form_.dual_phase() * acc.value();
            r.error = form_.tail_bound(static_cast<real>(cut), w);
            r.method = "direct-tail";
            return r;
        }
        ComplexEval full = Fstar_complete(w);
        r.value = full.value - head_sum(w, M, true);
        r.error = full.error + 8 * std::numeric_limits<real>::epsilon() * std::abs(full.value);
        r.method = "completed-minus-head";
        return r;
    }

    // Relative residuals of the classical functional equation chain. The two
    // sides use different split points of the completed integral.
    real fe_normalized_residual(cplx s) const {
        cplx Fs = F_complete(s).value;
        cplx Fd = Fstar_complete(1.0L - s, 1.25L).value;
        LogComplex g = lngamma(1.0L - s + mu_) * rgamma(s + mu_);
        cplx rhs = (g * LogComplex::from_log((1.0L - 2.0L * s) * std::log(Q_))).value() * form_.omega() * Fd;
        return std::abs(Fs - rhs) / std::abs(rhs);
    }

    real fe_asymmetric_residual(cplx s) const {
        cplx Fs = F_complete(s).value;
        cplx Fd = Fstar_complete(1.0L - s, 1.25L).value;
        LogComplex g = lngamma(1.0L - s + mustar_) * lngamma(1.0L - s - mustar_) *
                       LogComplex::from_log((1.0L - 2.0L * s) * std::log(Q_));
        cplx rhs = form_.omega() / kPi * g.value() * std::sin(kPi * (s + mu_)) * Fd;
        return std::abs(Fs - rhs) / std::abs(rhs);
    }

    real fe_ladder_residual(cplx s) const {
        cplx Fs = F_complete(s).value;
        cplx Fd = Fstar_complete(1.0L - s, 1.25L).value;
        auto a = a_ladder(hstar_);
        LogComplex sum = LogComplex::zero();
        for (int l = 0; l <= hstar_; ++l) {
            real al = static_cast<real>(boost::rational_cast<long double>(a[static_cast<size_t>(l)]));
            sum = sum + lngamma(2.0L * (1.0L - s) - 0.5L - static_cast<real>(l)) * cplx(al, 0);
        }
        LogComplex pre = LogComplex::from_log((1.0L - 2.0L * s) * std::log(Q_ / 2));
        cplx rhs = 2.0L * form_.omega() / std::sqrt(kTwoPi) * (pre * sum).value() * std::sin(kPi * (s + mu_)) * Fd;
        return std::abs(Fs - rhs) / std::abs(rhs);
    }

private:
    ComplexEval direct(cplx s, bool dual, real tol, i64 max_terms) const {
        if (s.real() < safe_abscissa_)
            throw domain_error("F_direct: Re s below the safe abscissa; use F_complete");
        i64 cut = 1024;
        const i64 cap = form_.square_supported() ? (max_terms / 10) * (max_terms / 10) : max_terms;
        while (form_.tail_bound(static_cast<real>(cut), s) > tol && cut < cap) cut *= 2;
        cut = std::min(cut, cap);
        ComplexEval r;
        r.value = head_sum(s, cut, dual);
        r.error = form_.tail_bound(static_cast<real>(cut), s);
        r.method = "direct";
        return r;
    }

    ComplexEval completed(cplx s, bool dual, real rho) const {
        cplx sp = s + (form_.kappa() - 1) / 2;
        ComplexEval lam = Lambda(sp, dual, rho, split_angle(s.imag()));
        LogComplex conv = rgamma(sp) * LogComplex::from_log(-sp * std::log(Q_));
        cplx c = conv.value();
        ComplexEval r;
        r.value = lam.value * c;
        r.error = lam.error * std::abs(c);
        r.method = "completed";
        return r;
    }

    HalfIntegralForm form_;
    real Q_;
    int h_, hstar_;
    real mu_, mustar_;
    real safe_abscissa_;
};

// Relative disagreement of Lambda_f between two split points of the completed
// integral; vanishes only when the dual phase is right.
inline real dual_phase_check(const HalfIntegralForm& form, const std::vector<cplx>& samples) {
    LSeriesEvaluator ev(form);
    real worst = 0;
    for (cplx s : samples) {
        cplx sp = s + (form.kappa() - 1) / 2;
        real th = LSeriesEvaluator::split_angle(s.imag());
        cplx a = ev.Lambda(sp, false, 1, th).value;
        cplx b = ev.Lambda(sp, false, 1.3L, th).value;
        worst = std::max(worst, std::abs(a - b) / std::abs(a));
    }
    return worst;
}

}  // namespace twistlab
