#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace twistlab {

using real = long double;
using cplx = std::complex<long double>;
using cplxd = std::complex<double>;

inline constexpr real kPi = 3.141592653589793238462643383279502884L;
inline constexpr real kTwoPi = 2 * kPi;
inline const cplx kI{0, 1};

struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct pole_adjacency_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline cplxd to_double(cplx z) { return {static_cast<double>(z.real()), static_cast<double>(z.imag())}; }
inline cplx to_long(cplxd z) { return {z.real(), z.imag()}; }

// exp(i*pi*x) with the argument reduced mod 2 before scaling, so integer and
// half-integer x land exactly on the axes.
inline cplx expipi(real x) {
    real r = std::fmod(x, 2.0L);
    if (r > 1) r -= 2;
    if (r <= -1) r += 2;
    if (r == 0) return {1, 0};
    if (r == 1) return {-1, 0};
    if (r == 0.5L) return {0, 1};
    if (r == -0.5L) return {0, -1};
    return {std::cos(kPi * r), std::sin(kPi * r)};
}

// exp(i*pi*z) for complex z.
inline cplx expipi(cplx z) { return expipi(z.real()) * std::exp(-kPi * z.imag()); }

// Neumaier compensated accumulator; summation order is the caller's.
class KahanSum {
public:
    void add(cplx v) {
        acc(re_, cre_, v.real());
        acc(im_, cim_, v.imag());
    }
    cplx value() const { return {re_ + cre_, im_ + cim_}; }

private:
    static void acc(real& s, real& c, real x) {
        real t = s + x;
        if (std::fabs(s) >= std::fabs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
    real re_ = 0, cre_ = 0, im_ = 0, cim_ = 0;
};

// Value with an attached absolute error estimate.
struct ComplexEval {
    cplx value{0, 0};
    real error = 0;
    std::string method;
};

}  // namespace twistlab
