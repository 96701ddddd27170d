#include <gtest/gtest.h>

#include "twistlab/lfun.hpp"

using namespace twistlab;

namespace {

// relative difference; absolute when the reference is an exact zero
double rel(cplx a, cplx b) {
    if (b == cplx(0, 0)) return static_cast<double>(std::abs(a));
    return static_cast<double>(std::abs(a - b) / std::abs(b));
}

std::vector<cplx> fe_grid() {
    return {{-0.5L, 1}, {0.3L, 0}, {0.25L, 5}, {1.1L, 2}, {-1.2L, -3.5L},
            {0.6L, 9}, {-0.3L, -7}, {1.7L, 0.5L}, {0.4L, -12}, {-0.8L, 14}};
}

}  // namespace

TEST(FDirect, Eta24MatchesNuSum) {
    LSeriesEvaluator ev(build_preset("ETA24"));
    // sum_nu chi12(nu) nu^{1/2} nu^{-4}
    KahanSum ref;
    for (i64 nu = 1000; nu >= 1; --nu) ref.add(static_cast<real>(chi12(nu)) * std::pow(static_cast<real>(nu), -3.5L));
    ComplexEval d = ev.F_direct(2);
    EXPECT_LT(static_cast<double>(std::abs(d.value - ref.value())), 1e-10);
    EXPECT_LT(d.error, 1e-12);
}

TEST(FDirect, ErrorEstimateSmallThreeAboveAbscissa) {
    for (auto name : preset_names()) {
        LSeriesEvaluator ev(build_preset(name));
        ComplexEval d = ev.F_direct(cplx(ev.safe_abscissa() + 3, 1));
        EXPECT_LT(d.error, 1e-12) << name;
    }
}

TEST(FDirect, ErrorEstimateDominatesTrueTail) {
    LSeriesEvaluator ev(build_preset("ETA8_CUBED"));
    ComplexEval loose = ev.F_direct(cplx(2.2L, 1), 1e-5L);
    ComplexEval tight = ev.F_direct(cplx(2.2L, 1), 1e-14L);
    EXPECT_LE(static_cast<double>(std::abs(loose.value - tight.value)), static_cast<double>(loose.error + tight.error));
}

TEST(FDirect, ZeroFormSumsToZero) {
    HalfIntegralForm zero({"ZERO", EtaQuotient({{24, 1}}), 576, HalfIntegralForm::Support::squares,
                           [](i64) -> i64 { return 0; }, 1, 0});
    LSeriesEvaluator ev(zero);
    EXPECT_EQ(ev.F_direct(2).value, cplx(0, 0));
    EXPECT_EQ(ev.F_complete(cplx(0.3L, 1)).value, cplx(0, 0));
}

TEST(FDirect, BelowAbscissaRejected) {
    LSeriesEvaluator ev(build_preset("ETA24"));
    EXPECT_THROW(ev.F_direct(cplx(0.5L, 0)), domain_error);
}

TEST(FComplete, OverlapWithDirect) {
    for (auto name : preset_names()) {
        LSeriesEvaluator ev(build_preset(name));
        real sa = ev.safe_abscissa();
        for (real ds : {0.5L, 1.25L, 2.0L, 3.0L})
            for (real t : {-30.0L, -4.0L, 0.0L, 3.0L, 17.0L}) {
                if (ds == 0.5L && std::abs(t) > 5) continue;  // slow direct tail, covered in acceptance
                cplx s(sa + ds, t);
                ComplexEval d = ev.F_direct(s, 1e-12L);
                ComplexEval c = ev.F_complete(s);
                EXPECT_LT(rel(c.value, d.value), 1e-9) << name << " " << s;
            }
    }
}

TEST(FComplete, DirectAgreementAt2Plus3i) {
    for (auto name : preset_names()) {
        LSeriesEvaluator ev(build_preset(name));
        cplx s(std::max(2.0L, ev.safe_abscissa() + 0.5L), 3);
        EXPECT_LT(rel(ev.F_complete(s).value, ev.F_direct(s, 1e-13L).value), 1e-9) << name;
    }
}

TEST(FComplete, SplitPointIndependence) {
    for (auto name : preset_names()) {
        LSeriesEvaluator ev(build_preset(name));
        for (cplx s : fe_grid()) EXPECT_LT(rel(ev.F_complete(s, 1.0L).value, ev.F_complete(s, 1.4L).value), 1e-10) << name << s;
    }
}

TEST(FComplete, Eta8CubedAtMinusOneStable) {
    LSeriesEvaluator ev(build_preset("ETA8_CUBED"));
    ComplexEval a = ev.F_complete(-1);
    ComplexEval b = ev.F_complete(-1, 1.6L);
    EXPECT_TRUE(std::isfinite(static_cast<double>(std::abs(a.value))));
    EXPECT_LT(a.error, 1e-8);
    EXPECT_LT(static_cast<double>(std::abs(a.value - b.value)), 1e-8);
}

TEST(FComplete, LargeHeightRotatedSplit) {
    LSeriesEvaluator ev(build_preset("ETA24"));
    for (real t : {40.0L, -75.0L, 150.0L}) {
        cplx s(2.5L, t);
        EXPECT_LT(rel(ev.F_complete(s).value, ev.F_direct(s, 1e-14L).value), 1e-9) << t;
    }
}

TEST(FStar, SelfDualPhase) {
    for (auto name : preset_names()) {
        LSeriesEvaluator ev(build_preset(name));
        for (cplx s : {cplx(0.3L, 2), cplx(-1, -4), cplx(1.9L, 0.1L)}) {
            cplx a = ev.Fstar_complete(s).value, b = ev.form().dual_phase() * ev.F_complete(s).value;
            EXPECT_LT(rel(a, b), 1e-12) << name;
        }
        cplx s(ev.safe_abscissa() + 2, 1);
        EXPECT_LT(rel(ev.Fstar_direct(s).value, ev.form().dual_phase() * ev.F_direct(s).value), 1e-15);
    }
}

TEST(FunctionalEquation, NormalizedAsymmetricAndLadderForms) {
    for (auto name : preset_names()) {
        LSeriesEvaluator ev(build_preset(name));
        for (cplx s : fe_grid()) {
            EXPECT_LT(ev.fe_normalized_residual(s), 1e-8) << name << s;
            EXPECT_LT(ev.fe_asymmetric_residual(s), 1e-8) << name << s;
            EXPECT_LT(ev.fe_ladder_residual(s), 1e-8) << name << s;
        }
    }
}

TEST(FunctionalEquation, MuConventions) {
    LSeriesEvaluator e1(build_preset("ETA24")), e3(build_preset("ETA8_CUBED")), e5(build_preset("ETA2_4_8"));
    EXPECT_EQ(e1.mu(), -0.25L);
    EXPECT_EQ(e1.mu_star(), 0.25L);
    EXPECT_EQ(e3.mu(), 0.25L);
    EXPECT_EQ(e3.hstar(), 0);
    EXPECT_EQ(e5.hstar(), 1);
    EXPECT_EQ(e5.mu(), 0.75L);
    EXPECT_EQ(e5.mu_star(), 0.75L);
}

TEST(DualPhase, CertifiesPresetsAndRejectsWrongPhase) {
    std::vector<cplx> pts = {{0.25L, 0}, {0.25L, 5}, {1.1L, 2}};
    for (auto name : preset_names()) {
        HalfIntegralForm f = build_preset(name);
        EXPECT_LT(dual_phase_check(f, pts), 1e-10) << name;
        HalfIntegralForm bad = f.with_dual_phase(f.dual_phase() * cplx(0, 1));
        EXPECT_GE(dual_phase_check(bad, pts), 0.5L) << name;
    }
}

TEST(Completed, LambdaHasNoPoles) {
    LSeriesEvaluator ev(build_preset("ETA24"));
    for (cplx s0 : {cplx(0, 0), cplx(-1, 0), cplx(0.25L, 0)}) {
        real prev = 0;
        for (real r : {1e-1L, 1e-2L, 1e-3L}) {
            real m = 0;
            for (int k = 0; k < 8; ++k) {
                cplx sp = s0 + r * std::polar(1.0L, kTwoPi * k / 8);
                m = std::max(m, std::abs(ev.Lambda(sp, false, 1, 0).value));
            }
            if (prev > 0) {
                EXPECT_LT(m, 2 * prev);
            }
            prev = m;
        }
    }
}

TEST(DualTail, MatchesHeadComplement) {
    for (auto name : preset_names()) {
        LSeriesEvaluator ev(build_preset(name));
        for (cplx w : {cplx(1.3L, 2), cplx(3.5L, -1), cplx(7, 4)}) {
            i64 M = 400;
            ComplexEval tail = ev.dual_tail(w, M);
            cplx full = ev.Fstar_complete(w).value;
            cplx want = full - ev.head_sum(w, M, true);
            EXPECT_LT(static_cast<double>(std::abs(tail.value - want)), 1e-12 * std::max(1.0, static_cast<double>(std::abs(full)))) << name << w << tail.method;
        }
    }
}
