#pragma once

#include <vector>

#include <boost/rational.hpp>

#include "qseries.hpp"

namespace twistlab {

using rational = boost::rational<i64>;
using Poly = std::vector<rational>;  // coefficient of X^i at index i

inline Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r(a.size() + b.size() - 1, rational(0));
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

// prod_{v=0}^{m-1} (X + v); empty product 1
inline Poly rising_basis(int m) {
    Poly p{rational(1)};
    for (int v = 0; v < m; ++v) p = poly_mul(p, Poly{rational(v), rational(1)});
    return p;
}

// a_0..a_{h*} with prod_{j=1}^{h*} (X + 2j - 1) = sum_l a_l prod_{0<=v<=h*-1-l} (X + v)
inline std::vector<rational> a_ladder(int hstar) {
    if (hstar < 0) throw std::invalid_argument("a_ladder: h* must be nonnegative");
    Poly target{rational(1)};
    for (int j = 1; j <= hstar; ++j) target = poly_mul(target, Poly{rational(2 * j - 1), rational(1)});
    std::vector<rational> a(static_cast<size_t>(hstar) + 1, rational(0));
    // basis element for l has degree h* - l and is monic: peel from the top degree
    Poly rem = target;
    for (int l = 0; l <= hstar; ++l) {
        int deg = hstar - l;
        rational coef = rem[static_cast<size_t>(deg)];
        a[static_cast<size_t>(l)] = coef;
        Poly b = rising_basis(deg);
        for (int i = 0; i <= deg; ++i) rem[static_cast<size_t>(i)] -= coef * b[static_cast<size_t>(i)];
    }
    for (const rational& r : rem)
        if (r != rational(0)) throw std::logic_error("a_ladder: nonzero remainder");
    return a;
}

}  // namespace twistlab
