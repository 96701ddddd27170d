#include <gtest/gtest.h>

#include "twistlab/qseries.hpp"

using namespace twistlab;

namespace {

// prod_{m=1}^{M} (1 - q^{scale m}) by repeated multiplication, truncated at q^M
std::vector<i64> direct_product(i64 scale, i64 M) {
    std::vector<i64> c(M + 1, 0);
    c[0] = 1;
    for (i64 m = 1; scale * m <= M; ++m)
        for (i64 i = M; i >= scale * m; --i) c[i] -= c[i - scale * m];
    return c;
}

}  // namespace

TEST(EtaExpansion, PentagonalMatchesDirectProduct) {
    QExpansion e = eta_expansion(1, 10);
    std::vector<i64> head = {1, -1, -1, 0, 0, 1};
    for (size_t i = 0; i < head.size(); ++i) EXPECT_EQ(e[i], head[i]);
    for (i64 scale : {1, 2, 3, 8}) {
        auto d = direct_product(scale, 400);
        QExpansion p = eta_expansion(scale, 400);
        for (i64 i = 0; i <= 400; ++i) EXPECT_EQ(p[i], d[i]) << scale << " " << i;
    }
    EXPECT_THROW(eta_expansion(1, 0), std::invalid_argument);
}

TEST(EtaExpansion, Eta24SupportIsOneMod24) {
    QExpansion f = EtaQuotient({{24, 1}}).expand(5000);
    for (i64 n = 0; n <= 5000; ++n)
        if (f[n] != 0) {
            EXPECT_EQ(n % 24, 1) << n;
        }
}

TEST(EtaExpansion, CubedEta8Head) {
    QExpansion f = EtaQuotient({{8, 3}}).expand(49);
    for (i64 n = 0; n <= 49; ++n) {
        i64 want = n == 1 ? 1 : n == 9 ? -3 : n == 25 ? 5 : n == 49 ? -7 : 0;
        EXPECT_EQ(f[n], want) << n;
    }
}

TEST(EtaQuotientType, Invariants) {
    EXPECT_THROW(EtaQuotient({{8, 5}}), std::invalid_argument);  // leading exponent 5/3
    EXPECT_THROW(EtaQuotient({{24, 2}}), std::invalid_argument);  // integral weight
    EtaQuotient q({{2, 2}, {4, 1}, {8, 2}});
    EXPECT_EQ(q.k(), 5);
    EXPECT_EQ(q.leading_exponent(), 1);
    EXPECT_EQ(q.step(), 2);
}

TEST(QExpansionOps, InverseAndTruncation) {
    QExpansion p = eta_expansion(1, 60);
    QExpansion inv = p.inverse();
    // partition numbers
    std::vector<i64> part = {1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42};
    for (size_t i = 0; i < part.size(); ++i) EXPECT_EQ(inv[i], part[i]);
    QExpansion one = p * inv;
    EXPECT_EQ(one[0], 1);
    for (i64 i = 1; i <= 60; ++i) EXPECT_EQ(one[i], 0);
    EXPECT_EQ((eta_expansion(1, 30) * eta_expansion(1, 50)).truncation(), 30);
}

TEST(QExpansionOps, OverflowIsDetected) {
    EXPECT_THROW(eta_expansion(1, 600).pow(-1), std::overflow_error);
}

TEST(Presets, Eta24ClosedFormToMillion) {
    HalfIntegralForm f = build_preset("ETA24");
    QExpansion e = f.quotient().expand(1000000);
    for (i64 n = 1; n <= 1000000; ++n) ASSERT_EQ(e[n], f.fourier(n)) << n;
}

TEST(Presets, Eta8CubedClosedFormToMillion) {
    HalfIntegralForm f = build_preset("ETA8_CUBED");
    QExpansion e = f.quotient().expand(1000000);
    for (i64 n = 1; n <= 1000000; ++n) ASSERT_EQ(e[n], f.fourier(n)) << n;
    // Jacobi: c(nu^2) = (-1)^{(nu-1)/2} nu
    for (i64 nu = 1; nu < 1000; nu += 2) EXPECT_EQ(f.fourier(nu * nu), ((nu - 1) / 2) % 2 ? -nu : nu);
}

TEST(Presets, WeightFiveHalvesEngine) {
    HalfIntegralForm f = build_preset("ETA2_4_8");
    std::vector<i64> head = {1, 0, -2, 0, -2, 0, 4, 0, -1, 0, 6, 0, 2, 0, -12, 0, -4, 0, -6, 0, 12, 0, 4};
    for (size_t i = 0; i < head.size(); ++i) EXPECT_EQ(f.fourier(static_cast<i64>(i) + 1), head[i]) << i + 1;
    EXPECT_EQ(f.k(), 5);
    EXPECT_EQ(f.N(), 16);
}

TEST(Presets, CoefficientBoundsHold) {
    for (auto name : preset_names()) {
        HalfIntegralForm f = build_preset(name);
        auto t = f.terms(1000000);
        for (const Term& x : *t) {
            if (x.n > 1000000) break;
            ASSERT_LE(static_cast<real>(std::llabs(x.c)), f.coeff_bound(x.n)) << name << " " << x.n;
        }
    }
}

TEST(Presets, SignPartialSumsBounded) {
    for (auto name : preset_names()) {
        HalfIntegralForm f = build_preset(name);
        if (f.partial_sum_bound() <= 0) continue;
        i64 e = static_cast<i64>(2 * f.bound_exponent());
        i64 S = 0;
        for (i64 nu = 1; nu <= 100000; ++nu) {
            i64 c = f.fourier(nu * nu);
            i64 p = e == 0 ? 1 : nu;
            ASSERT_EQ(c % p, 0);
            S += c / p;
            ASSERT_LE(static_cast<real>(std::llabs(S)), f.partial_sum_bound()) << name << " " << nu;
        }
    }
}

TEST(Presets, NormalizationInvertsExactly) {
    for (auto name : preset_names()) {
        HalfIntegralForm f = build_preset(name);
        for (i64 n = 1; n <= 300; ++n) {
            real back = f.a(n) * std::pow(static_cast<real>(n), (f.kappa() - 1) / 2);
            EXPECT_NEAR(static_cast<double>(back), static_cast<double>(f.fourier(n)), 1e-12 * (1 + std::llabs(f.fourier(n))));
        }
    }
}

TEST(Presets, RootNumberAndDualPhase) {
    HalfIntegralForm f = build_preset("ETA24");
    EXPECT_LT(static_cast<double>(std::abs(f.omega() - std::polar(1.0L, -kPi / 4))), 1e-18);
    for (auto name : preset_names()) {
        HalfIntegralForm g = build_preset(name);
        EXPECT_NEAR(static_cast<double>(std::abs(g.dual_phase())), 1.0, 1e-18);
        EXPECT_EQ(g.N() % 4, 0);
        EXPECT_EQ(g.k() % 2, 1);
        for (i64 n = 1; n < 200; ++n) EXPECT_EQ(g.dual_fourier(n), g.dual_phase() * static_cast<real>(g.fourier(n)));
    }
}

TEST(Presets, UnknownAndRejected) {
    EXPECT_THROW(build_preset("NOPE"), unknown_preset);
    EXPECT_THROW(build_preset("ETA8_FIFTH"), unknown_preset);
}

TEST(Presets, TermsAreOrderedAndComplete) {
    HalfIntegralForm f = build_preset("ETA2_4_8");
    auto t = f.terms(5000);
    i64 prev = 0, count = 0;
    for (const Term& x : *t) {
        if (x.n > 5000) break;
        EXPECT_GT(x.n, prev);
        EXPECT_EQ(x.c, f.fourier(x.n));
        prev = x.n;
        ++count;
    }
    i64 direct = 0;
    for (i64 n = 1; n <= 5000; ++n) direct += f.fourier(n) != 0;
    EXPECT_EQ(count, direct);
}
