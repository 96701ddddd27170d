#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "numeric.hpp"

namespace twistlab {

using i64 = std::int64_t;

namespace detail {

inline i64 checked_mul(i64 a, i64 b) {
    i64 r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("q-expansion coefficient overflow");
    return r;
}
inline i64 checked_add(i64 a, i64 b) {
    i64 r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("q-expansion coefficient overflow");
    return r;
}

}  // namespace detail

// Power series sum c(i) q^i for 0 <= i <= M with exact integer coefficients.
class QExpansion {
public:
    QExpansion() = default;
    explicit QExpansion(i64 truncation) : c_(static_cast<size_t>(truncation) + 1, 0) {}
    explicit QExpansion(std::vector<i64> coeffs) : c_(std::move(coeffs)) {
        if (c_.empty()) throw std::invalid_argument("QExpansion needs at least one coefficient");
    }

    i64 truncation() const { return static_cast<i64>(c_.size()) - 1; }
    i64 operator[](i64 i) const { return i >= 0 && i <= truncation() ? c_[static_cast<size_t>(i)] : 0; }
    i64& at(i64 i) { return c_.at(static_cast<size_t>(i)); }
    const std::vector<i64>& coefficients() const { return c_; }

    size_t nonzero_count() const {
        size_t k = 0;
        for (i64 v : c_) k += v != 0;
        return k;
    }

    // Product truncated to the smaller truncation; loops over the sparser factor.
    friend QExpansion operator*(const QExpansion& a, const QExpansion& b) {
        i64 m = std::min(a.truncation(), b.truncation());
        const QExpansion& sparse = a.nonzero_count() <= b.nonzero_count() ? a : b;
        const QExpansion& dense = &sparse == &a ? b : a;
        std::vector<std::pair<i64, i64>> nz;
        unsigned __int128 l1 = 0, dmax = 0;
        for (i64 i = 0; i <= m; ++i) {
            i64 v = sparse.c_[static_cast<size_t>(i)];
            if (!v) continue;
            nz.emplace_back(i, v);
            l1 += static_cast<unsigned __int128>(v < 0 ? -v : v);
        }
        for (i64 j = 0; j <= m; ++j) {
            i64 v = dense.c_[static_cast<size_t>(j)];
            dmax = std::max<unsigned __int128>(dmax, static_cast<unsigned __int128>(v < 0 ? -v : v));
        }
        QExpansion out(m);
        if (l1 * dmax >= (static_cast<unsigned __int128>(1) << 62)) {
            for (auto [i, s] : nz)
                for (i64 j = 0; j + i <= m; ++j) {
                    i64 d = dense.c_[static_cast<size_t>(j)];
                    if (d == 0) continue;
                    out.c_[static_cast<size_t>(i + j)] =
                        detail::checked_add(out.c_[static_cast<size_t>(i + j)], detail::checked_mul(s, d));
                }
            return out;
        }
        // every partial sum is bounded by l1 * dmax, so plain arithmetic is exact;
        // blocks of the output stay in cache while the sparse factor is swept
        const i64 block = 1 << 14;
        const i64* src = dense.c_.data();
        i64* dst = out.c_.data();
        for (i64 lo = 0; lo <= m; lo += block) {
            i64 hi = std::min(m, lo + block - 1);
            for (auto [i, s] : nz) {
                if (i > hi) break;
                i64 from = std::max(lo, i);
                const i64* d = src + (from - i);
                i64* o = dst + from;
                for (i64 k = 0, n = hi - from + 1; k < n; ++k) o[k] += s * d[k];
            }
        }
        return out;
    }

    // Multiplicative inverse of a series with constant term 1.
    QExpansion inverse() const {
        if (c_[0] != 1) throw std::invalid_argument("QExpansion::inverse needs constant term 1");
        i64 m = truncation();
        std::vector<std::pair<i64, i64>> nz;
        for (i64 i = 1; i <= m; ++i)
            if (c_[static_cast<size_t>(i)]) nz.emplace_back(i, c_[static_cast<size_t>(i)]);
        QExpansion out(m);
        out.c_[0] = 1;
        for (i64 n = 1; n <= m; ++n) {
            i64 acc = 0;
            for (auto [i, v] : nz) {
                if (i > n) break;
                acc = detail::checked_add(acc, detail::checked_mul(v, out.c_[static_cast<size_t>(n - i)]));
            }
            out.c_[static_cast<size_t>(n)] = -acc;
        }
        return out;
    }

    // this / d for d with constant term 1; costs O(nonzeros(d) * M).
    QExpansion divided_by(const QExpansion& d) const {
        if (d[0] != 1) throw std::invalid_argument("QExpansion::divided_by needs constant term 1");
        i64 m = std::min(truncation(), d.truncation());
        std::vector<std::pair<i64, i64>> nz;
        for (i64 i = 1; i <= m; ++i)
            if (d[i]) nz.emplace_back(i, d[i]);
        QExpansion out(m);
        for (i64 n = 0; n <= m; ++n) {
            i64 acc = c_[static_cast<size_t>(n)];
            for (auto [i, v] : nz) {
                if (i > n) break;
                acc = detail::checked_add(acc, -detail::checked_mul(v, out.c_[static_cast<size_t>(n - i)]));
            }
            out.c_[static_cast<size_t>(n)] = acc;
        }
        return out;
    }

    QExpansion pow(int e) const {
        if (e < 0) return inverse().pow(-e);
        QExpansion r(truncation());
        r.c_[0] = 1;
        for (int i = 0; i < e; ++i) r = r * *this;
        return r;
    }

private:
    std::vector<i64> c_;
};

// Coefficients of prod_{m>=1} (1 - q^{scale m}) up to q^M, via the pentagonal
// number theorem; the q^{scale/24} prefactor is tracked by the caller.
inline QExpansion eta_expansion(i64 scale, i64 M) {
    if (M < 1) throw std::invalid_argument("eta_expansion: truncation must be >= 1");
    if (scale < 1) throw std::invalid_argument("eta_expansion: scale must be positive");
    QExpansion out(M);
    for (i64 k = 0;; ++k) {
        bool any = false;
        for (i64 kk : {k, -k}) {
            if (k == 0 && kk < 0) continue;
            i64 e = scale * (kk * (3 * kk - 1) / 2);
            if (e > M) continue;
            any = true;
            out.at(e) = (k % 2) ? -1 : 1;
        }
        if (!any) break;
    }
    return out;
}

struct EtaFactor {
    i64 scale;
    int exponent;
};

class EtaQuotient {
public:
    explicit EtaQuotient(std::vector<EtaFactor> factors) : factors_(std::move(factors)) {
        if (factors_.empty()) throw std::invalid_argument("EtaQuotient: no factors");
        int k = 0;
        i64 lead = 0;
        step_ = 0;
        for (auto f : factors_) {
            if (f.scale < 1 || f.exponent == 0) throw std::invalid_argument("EtaQuotient: bad factor");
            k += f.exponent;
            lead += f.scale * f.exponent;
            step_ = std::gcd(step_, f.scale);
        }
        if (k <= 0 || k % 2 == 0) throw std::invalid_argument("EtaQuotient: weight must be a positive half-integer with odd numerator");
        if (lead % 24 != 0 || lead <= 0)
            throw std::invalid_argument("EtaQuotient: leading exponent " + std::to_string(lead) + "/24 is not a positive integer");
        k_ = k;
        leading_ = lead / 24;
    }

    const std::vector<EtaFactor>& factors() const { return factors_; }
    int k() const { return k_; }
    i64 leading_exponent() const { return leading_; }
    // every exponent with a nonzero coefficient is leading + step * j
    i64 step() const { return step_; }

    // Inner series d(j) with f = q^leading * sum d(j) q^{step j}, 0 <= j <= J.
    QExpansion inner_expansion(i64 J) const {
        if (J < 1) J = 1;
        QExpansion acc(J);
        acc.at(0) = 1;
        for (auto f : factors_) {
            QExpansion p = eta_expansion(f.scale / step_, J);
            for (int i = 0; i < std::abs(f.exponent); ++i) acc = f.exponent > 0 ? acc * p : acc.divided_by(p);
        }
        return acc;
    }

    // Full q-expansion c(0..M).
    QExpansion expand(i64 M) const {
        QExpansion out(M);
        if (M < leading_) return out;
        QExpansion inner = inner_expansion((M - leading_) / step_);
        for (i64 j = 0; j <= inner.truncation(); ++j) out.at(leading_ + step_ * j) = inner[j];
        return out;
    }

private:
    std::vector<EtaFactor> factors_;
    int k_ = 0;
    i64 leading_ = 0;
    i64 step_ = 1;
};

// One nonzero Fourier coefficient with the quantities every evaluator needs.
struct Term {
    i64 n;
    i64 c;
    i64 root;  // sqrt(n) when n is a perfect square, else -1
    real sqrt_n;
    real log_n;
    real a;  // c(n) n^{-(kappa-1)/2}
};

inline int chi12(i64 v) {
    i64 r = ((v % 12) + 12) % 12;
    if (r == 1 || r == 11) return 1;
    if (r == 5 || r == 7) return -1;
    return 0;
}

class HalfIntegralForm {
public:
    enum class Support { squares, engine };

    struct Definition {
        std::string name;
        EtaQuotient quotient;
        i64 N;
        Support support;
        // closed form c(nu^2) for square-supported presets
        i64 (*square_coeff)(i64 nu) = nullptr;
        // |c(n)| <= bound_C * n^bound_exp
        real bound_C = 1;
        real bound_exp = 0;
        // |sum_{nu <= x} c(nu^2) / nu^{2 bound_exp}| <= partial_sum_bound; 0 when unknown
        real partial_sum_bound = 0;
    };

    explicit HalfIntegralForm(Definition def) : def_(std::move(def)), cache_(std::make_shared<Cache>()) {
        if (def_.N % 4 != 0) throw std::invalid_argument("HalfIntegralForm: 4 must divide the level");
        kappa_ = static_cast<real>(def_.quotient.k()) / 2;
        omega_ = expipi(-kappa_ / 2);
        epsilon_ = expipi(kappa_ / 2);
    }

    const std::string& name() const { return def_.name; }
    const EtaQuotient& quotient() const { return def_.quotient; }
    int k() const { return def_.quotient.k(); }
    real kappa() const { return kappa_; }
    i64 N() const { return def_.N; }
    cplx omega() const { return omega_; }
    cplx dual_phase() const { return epsilon_; }
    bool square_supported() const { return def_.support == Support::squares; }
    i64 first_index() const { return def_.quotient.leading_exponent(); }

    // Test hook: replace the dual phase (negative controls).
    HalfIntegralForm with_dual_phase(cplx eps) const {
        HalfIntegralForm f = *this;
        f.epsilon_ = eps;
        return f;
    }

    real coeff_bound(i64 n) const { return def_.bound_C * std::pow(static_cast<real>(n), def_.bound_exp); }
    real bound_exponent() const { return def_.bound_exp; }
    real bound_constant() const { return def_.bound_C; }
    real partial_sum_bound() const { return def_.partial_sum_bound; }

    i64 fourier(i64 n) const {
        if (n < 1) return 0;
        if (square_supported()) {
            i64 r = static_cast<i64>(std::llround(std::sqrt(static_cast<long double>(n))));
            while (r * r > n) --r;
            while ((r + 1) * (r + 1) <= n) ++r;
            return r * r == n ? def_.square_coeff(r) : 0;
        }
        i64 off = n - first_index();
        if (off < 0 || off % def_.quotient.step() != 0) return 0;
        ensure_engine(n);
        std::lock_guard<std::mutex> lock(cache_->mu);
        return cache_->inner[off / def_.quotient.step()];
    }
    cplx dual_fourier(i64 n) const { return epsilon_ * static_cast<real>(fourier(n)); }
    real a(i64 n) const {
        return static_cast<real>(fourier(n)) * std::exp(-(kappa_ - 1) / 2 * std::log(static_cast<real>(n)));
    }
    cplx a_star(i64 n) const { return epsilon_ * a(n); }

    // Nonzero terms with n <= n_max in increasing n; the snapshot may extend further.
    std::shared_ptr<const std::vector<Term>> terms(i64 n_max) const {
        std::lock_guard<std::mutex> lock(cache_->mu);
        if (!cache_->terms || cache_->covered < n_max) rebuild_terms(std::max<i64>(n_max, 2 * cache_->covered));
        return cache_->terms;
    }

    // Bound on |sum_{n > n_cut} a(n) n^{-s}|. Square-supported forms with bounded
    // sign partial sums use summation by parts in nu.
    real tail_bound(real n_cut, cplx s) const {
        real b = abs_tail_bound(n_cut, s.real());
        if (!square_supported() || def_.partial_sum_bound <= 0) return b;
        cplx w = 2.0L * s + (kappa_ - 1) - 2 * def_.bound_exp;
        if (w.real() <= 0) return b;
        real V = std::floor(std::sqrt(std::max<real>(n_cut, 1))) + 1;
        real osc = def_.partial_sum_bound * std::pow(V, -w.real()) * (1 + std::abs(w) / w.real());
        return std::min(b, osc);
    }

    // Bound on sum_{n >= n_cut} |a(n)| n^{-sigma}; infinite where the series diverges.
    real abs_tail_bound(real n_cut, real sigma) const {
        // |a(n)| n^{-sigma} <= C n^{p}, p = bound_exp - (kappa-1)/2 - sigma
        real p = def_.bound_exp - (kappa_ - 1) / 2 - sigma;
        real C = def_.bound_C;
        if (square_supported()) {
            // n = nu^2, density <= 1 in nu: sum_{nu > V} C nu^{2p}
            real V = std::sqrt(std::max<real>(n_cut, 1));
            real q = 2 * p;
            if (q >= -1) return std::numeric_limits<real>::infinity();
            return C * (std::pow(V, q) + std::pow(V, q + 1) / (-q - 1));
        }
        real M = std::max<real>(n_cut, 1);
        if (p >= -1) return std::numeric_limits<real>::infinity();
        real dens = 1.0L / static_cast<real>(def_.quotient.step());
        return C * (std::pow(M, p) + dens * std::pow(M, p + 1) / (-p - 1));
    }

private:
    struct Cache {
        std::mutex mu;
        std::shared_ptr<const std::vector<Term>> terms;
        i64 covered = 0;
        std::vector<i64> inner;
        i64 inner_J = -1;
    };

    void ensure_engine(i64 n) const {
        std::lock_guard<std::mutex> lock(cache_->mu);
        ensure_engine_locked(n);
    }
    void ensure_engine_locked(i64 n) const {
        i64 J = (n - first_index()) / def_.quotient.step();
        if (J <= cache_->inner_J) return;
        J = std::max<i64>({J, 2 * cache_->inner_J, 1024});
        cache_->inner = def_.quotient.inner_expansion(J).coefficients();
        cache_->inner_J = J;
    }

    Term make_term(i64 n, i64 c, i64 root) const {
        real ln = std::log(static_cast<real>(n));
        return Term{n, c, root, std::sqrt(static_cast<real>(n)), ln, static_cast<real>(c) * std::exp(-(kappa_ - 1) / 2 * ln)};
    }

    void rebuild_terms(i64 n_max) const {
        auto out = std::make_shared<std::vector<Term>>();
        if (square_supported()) {
            for (i64 nu = 1; nu * nu <= n_max; ++nu) {
                i64 c = def_.square_coeff(nu);
                if (c) out->push_back(make_term(nu * nu, c, nu));
            }
        } else {
            ensure_engine_locked(n_max);
            i64 step = def_.quotient.step();
            for (i64 j = 0; first_index() + step * j <= n_max; ++j) {
                i64 c = cache_->inner[j];
                if (!c) continue;
                i64 n = first_index() + step * j;
                i64 r = static_cast<i64>(std::llround(std::sqrt(static_cast<long double>(n))));
                out->push_back(make_term(n, c, r * r == n ? r : -1));
            }
        }
        cache_->terms = std::move(out);
        cache_->covered = n_max;
    }

    Definition def_;
    real kappa_;
    cplx omega_, epsilon_;
    std::shared_ptr<Cache> cache_;
};

inline std::vector<std::string> preset_names() { return {"ETA24", "ETA8_CUBED", "ETA2_4_8"}; }

struct unknown_preset : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline HalfIntegralForm build_preset(const std::string& name) {
    using S = HalfIntegralForm::Support;
    if (name == "ETA24") {
        return HalfIntegralForm({"ETA24", EtaQuotient({{24, 1}}), 576, S::squares,
                                 [](i64 nu) -> i64 { return chi12(nu); }, 1, 0, 1});
    }
    if (name == "ETA8_CUBED") {
        return HalfIntegralForm({"ETA8_CUBED", EtaQuotient({{8, 3}}), 64, S::squares,
                                 [](i64 nu) -> i64 { return nu % 2 ? (((nu - 1) / 2) % 2 ? -nu : nu) : 0; }, 1, 0.5L, 1});
    }
    if (name == "ETA2_4_8") {
        // eta(2z)^2 eta(4z) eta(8z)^2, weight 5/2, level 16; |c(n)| <= n checked up to 10^6 in the tests
        return HalfIntegralForm({"ETA2_4_8", EtaQuotient({{2, 2}, {4, 1}, {8, 2}}), 16, S::engine, nullptr, 1, 1});
    }
    if (name == "ETA8_FIFTH")
        throw unknown_preset("ETA8_FIFTH: eta(8z)^5 has leading exponent 5/3, not a cusp form in integer powers of q; use ETA2_4_8 for weight 5/2");
    throw unknown_preset("unknown form '" + name + "'");
}

}  // namespace twistlab
