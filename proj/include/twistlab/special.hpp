#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "numeric.hpp"

namespace twistlab {

// w = exp(log_modulus + i*phase), phase unreduced. A zero is log_modulus = -inf.
struct LogComplex {
    real log_modulus = -std::numeric_limits<real>::infinity();
    real phase = 0;

    static LogComplex zero() { return {}; }
    static LogComplex one() { return {0, 0}; }
    static LogComplex from(cplx z) {
        if (z == cplx(0, 0)) return zero();
        return {std::log(std::abs(z)), std::arg(z)};
    }
    static LogComplex from_log(cplx logz) { return {logz.real(), logz.imag()}; }

    bool is_zero() const { return std::isinf(log_modulus) && log_modulus < 0; }
    cplx log() const { return {log_modulus, phase}; }
    cplx value() const {
        if (is_zero()) return {0, 0};
        return std::polar(std::exp(log_modulus), phase);
    }
    // value * exp(-shift); keeps moduli in range when the caller knows the scale
    cplx value_scaled(real shift) const {
        if (is_zero()) return {0, 0};
        return std::polar(std::exp(log_modulus - shift), phase);
    }

    friend LogComplex operator*(LogComplex a, LogComplex b) {
        if (a.is_zero() || b.is_zero()) return zero();
        return {a.log_modulus + b.log_modulus, a.phase + b.phase};
    }
    friend LogComplex operator/(LogComplex a, LogComplex b) {
        if (b.is_zero()) throw domain_error("LogComplex division by zero");
        if (a.is_zero()) return zero();
        return {a.log_modulus - b.log_modulus, a.phase - b.phase};
    }
    friend LogComplex operator*(LogComplex a, cplx b) { return a * from(b); }
    friend LogComplex operator+(LogComplex a, LogComplex b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        real m = std::max(a.log_modulus, b.log_modulus);
        cplx s = a.value_scaled(m) + b.value_scaled(m);
        LogComplex r = from(s);
        if (r.is_zero()) return r;
        r.log_modulus += m;
        return r;
    }
    LogComplex operator-() const { return {log_modulus, phase + kPi}; }
    friend LogComplex operator-(LogComplex a, LogComplex b) { return a + (-b); }
};

namespace detail {

// B_{2k} / (2k (2k-1)), k = 1..12
inline constexpr std::array<long double, 12> kStirling = {
    1.0L / 12,
    -1.0L / 360,
    1.0L / 1260,
    -1.0L / 1680,
    1.0L / 1188,
    -691.0L / 360360,
    1.0L / 156,
    -3617.0L / 122400,
    43867.0L / 244188,
    -174611.0L / 125400,
    77683.0L / 5796,
    -236364091.0L / 1506960,
};

inline cplx loggamma_stirling(cplx z) {
    const real half_log_2pi = 0.918938533204672741780329736405617639L;
    cplx zinv = 1.0L / z;
    cplx zinv2 = zinv * zinv;
    cplx corr = 0;
    cplx p = zinv;
    for (long double b : kStirling) {
        corr += b * p;
        p *= zinv2;
    }
    return (z - 0.5L) * std::log(z) - z + half_log_2pi + corr;
}

// Analytic log-gamma on C minus (-inf, 0], limits from above on the cut.
// Exact poles give +inf real part.
inline cplx loggamma_raw(cplx z) {
    const real big = 24;
    if (z.real() >= 0 && std::abs(z) >= big) return loggamma_stirling(z);
    int m = static_cast<int>(std::ceil(big - z.real()));
    if (m < 0) m = 0;
    cplx acc = 0;
    for (int j = 0; j < m; ++j) acc += std::log(z + static_cast<real>(j));
    return loggamma_stirling(z + static_cast<real>(m)) - acc;
}

inline real pole_distance(cplx z) {
    if (z.real() > 0.5L) return std::numeric_limits<real>::infinity();
    real n = std::round(z.real());
    if (n > 0) n = 0;
    return std::abs(z - n);
}

}  // namespace detail

// Principal log-gamma; pole-adjacent arguments (distance < 1e-3) are rejected.
inline LogComplex lngamma(cplx z) {
    if (detail::pole_distance(z) < 1e-3L)
        throw pole_adjacency_error("lngamma: argument within 1e-3 of a pole");
    return LogComplex::from_log(detail::loggamma_raw(z));
}

inline cplx gamma(cplx z) { return lngamma(z).value(); }

// 1/Gamma(z), entire; exact at and near the poles.
inline LogComplex rgamma(cplx z) {
    if (detail::pole_distance(z) >= 1e-3L) return LogComplex::from_log(-detail::loggamma_raw(z));
    // shift past the pole and multiply the small factor back in exactly
    int m = static_cast<int>(std::ceil(1 - z.real()));
    LogComplex acc = LogComplex::from_log(-detail::loggamma_raw(z + static_cast<real>(m)));
    for (int j = 0; j < m; ++j) acc = acc * LogComplex::from(z + static_cast<real>(j));
    return acc;
}

// Gamma(z) off the exact poles. Inside the lngamma exclusion zone the value is
// Gamma(z + m) / (z (z+1) ... (z+m-1)).
inline LogComplex gamma_shifted(cplx z) {
    if (detail::pole_distance(z) >= 1e-3L) return LogComplex::from_log(detail::loggamma_raw(z));
    if (detail::pole_distance(z) < 1e-15L) throw pole_adjacency_error("gamma_shifted: argument at a pole");
    int m = static_cast<int>(std::ceil(1 - z.real()));
    LogComplex acc = LogComplex::from_log(detail::loggamma_raw(z + static_cast<real>(m)));
    for (int j = 0; j < m; ++j) acc = acc / LogComplex::from(z + static_cast<real>(j));
    return acc;
}

// exp(exponent * Log base), Log principal with arg in (-pi, pi].
inline LogComplex principal_power(cplx base, cplx exponent) {
    if (base == cplx(0, 0)) {
        if (exponent.real() > 0) return LogComplex::zero();
        throw domain_error("principal_power: zero base with Re(exponent) <= 0");
    }
    return LogComplex::from_log(exponent * std::log(base));
}

namespace detail {

inline cplx lower_gamma_series(cplx a, cplx z) {
    // gamma(a,z) = z^a e^-z sum z^k / (a)_{k+1}
    cplx term = 1.0L / a;
    cplx sum = term;
    for (int k = 1; k < 20000; ++k) {
        term *= z / (a + static_cast<real>(k));
        sum += term;
        if (std::abs(term) <= 1e-21L * std::abs(sum)) {
            return std::exp(a * std::log(z) - z) * sum;
        }
    }
    throw convergence_error("lower incomplete gamma series did not converge");
}

inline cplx upper_gamma_cf(cplx a, cplx z) {
    // Legendre continued fraction, modified Lentz
    const real tiny = 1e-300L;
    cplx b = z + 1.0L - a;
    cplx c = 1.0L / tiny;
    cplx d = 1.0L / b;
    cplx h = d;
    for (int i = 1; i < 50000; ++i) {
        cplx an = -static_cast<real>(i) * (static_cast<real>(i) - a);
        b += 2.0L;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0L / d;
        cplx del = d * c;
        h *= del;
        if (std::abs(del - 1.0L) < 1e-20L) return std::exp(a * std::log(z) - z) * h;
    }
    throw convergence_error("incomplete gamma continued fraction did not converge");
}

inline cplx expint_e1_series(cplx z) {
    const real euler = 0.577215664901532860606512090082402431L;
    cplx term = 1;
    cplx sum = 0;
    for (int k = 1; k < 20000; ++k) {
        term *= -z / static_cast<real>(k);
        cplx add = term / static_cast<real>(k);
        sum += add;
        if (std::abs(add) <= 1e-21L * std::abs(sum)) break;
    }
    return -euler - std::log(z) - sum;
}

}  // namespace detail

// Gamma(a, z) = int_z^inf t^{a-1} e^{-t} dt along a ray, |arg z| < pi/2.
inline cplx upper_incomplete_gamma(cplx a, cplx z) {
    if (z == cplx(0, 0)) {
        if (a.real() <= 0) throw domain_error("upper_incomplete_gamma: Gamma(a, 0) diverges for Re a <= 0");
        return gamma(a);
    }
    if (z.real() <= 0) throw domain_error("upper_incomplete_gamma: requires Re z > 0");
    real az = std::abs(z);
    if (az >= std::abs(a) + 2) return detail::upper_gamma_cf(a, z);
    real ar = std::round(a.real());
    if (a.imag() == 0 && ar <= 0 && a.real() == ar) {
        int m = static_cast<int>(-ar);
        cplx e1 = detail::expint_e1_series(z);
        cplx tail = 0;
        real fact = 1;
        cplx zp = z;
        for (int k = 0; k < m; ++k) {
            if (k > 0) fact *= k;
            tail += ((k % 2) ? -fact : fact) / zp;
            zp *= z;
        }
        real mfact = 1;
        for (int k = 2; k <= m; ++k) mfact *= k;
        return ((m % 2) ? -1.0L : 1.0L) / mfact * (e1 - std::exp(-z) * tail);
    }
    return rgamma(a).is_zero() ? -detail::lower_gamma_series(a, z)
                               : 1.0L / rgamma(a).value() - detail::lower_gamma_series(a, z);
}

inline cplx upper_incomplete_gamma(cplx a, real x) {
    if (!(x > 0)) throw domain_error("upper_incomplete_gamma: x must be positive");
    return upper_incomplete_gamma(a, cplx(x, 0));
}

// (1/2 pi i) int_{(c)} Gamma(xi - w) Gamma(w) z^{-w} dw by adaptive quadrature
// on the vertical line; the closed form is Gamma(xi) (1+z)^{-xi}.
inline cplxd mellin_barnes_numeric(cplxd xi, cplxd z, double c) {
    if (!(c > 0 && c < xi.real())) throw domain_error("mellin_barnes_numeric: need 0 < c < Re xi");
    double argz = std::abs(std::arg(z));
    if (argz >= M_PI) throw domain_error("mellin_barnes_numeric: need |arg z| < pi");
    cplx zl = to_long(z), xil = to_long(xi);
    auto integrand = [&](double y) {
        cplx w(c, y);
        LogComplex v = lngamma(xil - w) * lngamma(w) * principal_power(zl, -w);
        return to_double(v.value()) / (2 * M_PI);
    };
    // integrand decays like exp(-(pi - |arg z|)|y|)
    double decay = M_PI - argz;
    double ymax = (40.0 + 2 * std::abs(xi)) / decay;
    using boost::math::quadrature::gauss_kronrod;
    auto part = [&](auto f) {
        double err = 0;
        double v = 0;
        const int pieces = 16;
        for (int k = 0; k < pieces; ++k) {
            double lo = -ymax + 2 * ymax * k / pieces, hi = -ymax + 2 * ymax * (k + 1) / pieces;
            v += gauss_kronrod<double, 61>::integrate(f, lo, hi, 12, 1e-14, &err);
        }
        return v;
    };
    double re = part([&](double y) { return integrand(y).real(); });
    double im = part([&](double y) { return integrand(y).imag(); });
    return {re, im};
}

}  // namespace twistlab
