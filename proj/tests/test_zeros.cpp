#include <gtest/gtest.h>

#include <map>

#include "twistlab/zeros.hpp"

using namespace twistlab;

namespace {

const HalfIntegralForm& preset(const std::string& name) {
    static std::map<std::string, HalfIntegralForm> cache;
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, build_preset(name)).first;
    return it->second;
}

const TwistContext& context(const std::string& name, rational alpha) {
    static std::map<std::pair<std::string, rational>, TwistContext> cache;
    auto key = std::make_pair(name, alpha);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, TwistContext(preset(name), alpha)).first;
    return it->second;
}

struct Case {
    const char* form;
    rational alpha;
};

std::vector<Case> refinement_cases() {
    return {{"ETA24", rational(1, 12)},     {"ETA24", rational(3, 10)}, {"ETA8_CUBED", rational(1, 4)},
            {"ETA8_CUBED", rational(1, 2)}, {"ETA2_4_8", rational(1, 2)}, {"ETA2_4_8", rational(1, 6)}};
}

ZeroClassifier tube_classifier(const TwistContext& ctx) {
    ZeroClassifier c;
    c.eps = 0.05L;
    c.sigma_eps = 5;
    c.sigma_plus = sigma_plus(ctx);
    return c;
}

}  // namespace

TEST(Tube, Eta24AtOneTwelfth) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    TubeData d = tube_data(ctx);
    // chi_12 support is nu = +-1, +-5, +-7, +-11, ...; nu_alpha = 1 so -nu_alpha = -1 is itself excluded
    EXPECT_EQ(d.nu_plus, 1);
    EXPECT_EQ(d.nu_minus, -5);
    EXPECT_NEAR(static_cast<double>(d.m_plus), 2, 1e-15);
    EXPECT_NEAR(static_cast<double>(d.m_minus), 4, 1e-15);
    EXPECT_NEAR(static_cast<double>(d.slope), std::log(0.5) / M_PI, 1e-15);
    EXPECT_NEAR(static_cast<double>(d.slope), -0.2206, 1e-4);
    EXPECT_GE(d.theta_plus, 0);
    EXPECT_LT(d.theta_plus, kTwoPi);
    EXPECT_GE(d.theta_minus, 0);
    EXPECT_LT(d.theta_minus, kTwoPi);
}

TEST(Tube, MinimizersByBruteForce) {
    for (Case c : refinement_cases()) {
        const TwistContext& ctx = context(c.form, c.alpha);
        TubeData d = tube_data(ctx);
        const real na = ctx.nu_alpha();
        real best_p = 1e9, best_m = 1e9;
        for (i64 n = 1; n <= 400; ++n) {
            if (ctx.form().fourier(n) == 0) continue;
            for (int sg : {1, -1}) {
                real nu = sg * std::sqrt(static_cast<real>(n));
                if (std::abs(nu + na) < 1e-12L) continue;
                if (nu > -na) best_p = std::min(best_p, nu + na);
                else best_m = std::min(best_m, -(nu + na));
            }
        }
        EXPECT_NEAR(static_cast<double>(d.m_plus), static_cast<double>(best_p), 1e-14) << c.form;
        EXPECT_NEAR(static_cast<double>(d.m_minus), static_cast<double>(best_m), 1e-14) << c.form;
    }
}

TEST(Tube, MinimizersJumpAcrossSupportPoint) {
    // nu_alpha = 12 alpha for ETA24; 5 is in the support
    TubeData below = tube_data(TwistContext(preset("ETA24"), rational(4999, 12000)));
    TubeData above = tube_data(TwistContext(preset("ETA24"), rational(5001, 12000)));
    EXPECT_EQ(below.nu_plus, -1);
    EXPECT_EQ(below.nu_minus, -5);
    EXPECT_NEAR(static_cast<double>(below.m_minus), 1e-3, 1e-12);
    EXPECT_EQ(above.nu_plus, -5);
    EXPECT_EQ(above.nu_minus, -7);
    EXPECT_NEAR(static_cast<double>(above.m_plus), 1e-3, 1e-12);
    EXPECT_GT(std::abs(above.slope - below.slope), 1);
}

TEST(Tube, SmallAlphaFlattensLine) {
    real last = 1;
    for (i64 q : {100, 1000, 100000}) {
        TubeData d = tube_data(TwistContext(preset("ETA24"), rational(1, q)));
        EXPECT_EQ(d.nu_minus, -d.nu_plus);
        EXPECT_LT(std::abs(d.slope), last / 5);
        last = std::abs(d.slope);
        auto seeds = predicted_trivial_zeros(d, 20, 5);
        for (cplx s : seeds) EXPECT_LT(std::abs(s.imag()), 200 * std::abs(d.slope) + 1e-12L);
    }
    EXPECT_LT(last, 1e-4);
}

TEST(Seeds, SolveModulusAndArgumentConditions) {
    for (Case c : refinement_cases()) {
        TubeData d = tube_data(context(c.form, c.alpha));
        auto seeds = predicted_trivial_zeros(d, 30, 5);
        ASSERT_GE(seeds.size(), 20u) << c.form;
        const real L = std::log(d.m_minus / d.m_plus);
        for (size_t i = 0; i < seeds.size(); ++i) {
            cplx s = seeds[i];
            EXPECT_GE(s.real(), -30);
            EXPECT_LE(s.real(), -5);
            // equal moduli of the two model terms
            EXPECT_NEAR(static_cast<double>(d.offset(s)), 0, 1e-13);
            // opposite arguments, advancing by 2 pi per seed
            real arg = kTwoPi * s.real() - 2 * s.imag() * L + d.theta_plus - d.theta_minus;
            real k = (arg / kPi - 1) / 2;
            EXPECT_NEAR(static_cast<double>(k), std::round(static_cast<double>(k)), 1e-12);
            if (i > 0) {
                EXPECT_NEAR(static_cast<double>(seeds[i].real() - seeds[i - 1].real()), static_cast<double>(d.spacing()),
                            1e-12);
            }
            cplx w = 1.0L - s;
            EXPECT_LT(std::abs(tube_model(d, w)) / std::exp(tube_log_scale(d, w)), 1e-12L);
        }
    }
}

TEST(Seeds, CountGrowsLinearlyInR) {
    TubeData d = tube_data(context("ETA24", rational(1, 12)));
    const real c2 = 1 + d.slope * d.slope;
    for (real R : {10.0L, 40.0L, 160.0L}) {
        real n = static_cast<real>(predicted_trivial_zeros(d, R, 0).size());
        EXPECT_LE(std::abs(n - c2 * R), 1.0L);
    }
    EXPECT_THROW(predicted_trivial_zeros(d, 0), domain_error);
}

TEST(Refine, SeedsConvergeIntoTube) {
    for (Case c : refinement_cases()) {
        const TwistContext& ctx = context(c.form, c.alpha);
        TubeData d = tube_data(ctx);
        auto recs = refine_zeros(ctx, d, predicted_trivial_zeros(d, 30, 5), tube_classifier(ctx));
        for (const ZeroRecord& r : recs) {
            EXPECT_TRUE(r.converged) << c.form << " seed " << r.seed.real();
            EXPECT_FALSE(r.collision);
            EXPECT_LT(r.distance_to_line, 0.05L) << c.form;
            EXPECT_EQ(r.kind, ZeroKind::trivial);
            EXPECT_LT(r.residual, 1e-8L);
            // a true zero of the full right-hand side, not of the model
            cplx f = ctx.fe_rhs(r.location).value;
            cplx g = ctx.fe_rhs(r.location + cplx(0, 0.25L)).value;
            EXPECT_LT(std::abs(f) / std::abs(g), 1e-9L);
        }
    }
}

TEST(Refine, PerturbedSeedFindsNearestZeroOrFails) {
    for (Case c : refinement_cases()) {
        const TwistContext& ctx = context(c.form, c.alpha);
        TubeData d = tube_data(ctx);
        auto seeds = predicted_trivial_zeros(d, 30, 5);
        cplx s0 = seeds[seeds.size() / 2];
        ZeroRecord truth = refine_zero(ctx, d, s0, tube_classifier(ctx));
        for (cplx delta : {cplx(0, 0.4L), cplx(0, -0.4L), cplx(0.4L, 0), cplx(-0.4L, 0)}) {
            ZeroRecord r = refine_zero(ctx, d, s0 + delta, tube_classifier(ctx));
            if (r.converged) {
                EXPECT_LT(std::abs(r.location - truth.location), 1e-6L) << c.form;
            } else {
                EXPECT_EQ(r.kind, ZeroKind::unclassified);
            }
            EXPECT_GT(std::abs(r.location - (s0 + delta)), 0.1L);
        }
    }
}

TEST(Refine, DivergenceIsReported) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    TubeData d = tube_data(ctx);
    NewtonOptions opt;
    opt.max_iter = 2;
    ZeroRecord r = refine_zero(ctx, d, predicted_trivial_zeros(d, 20, 10)[0] + cplx(0, 2), tube_classifier(ctx), opt);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.kind, ZeroKind::unclassified);
    EXPECT_THROW(refine_zero(ctx, d, cplx(0.5L, 1), tube_classifier(ctx)), domain_error);
}

TEST(Refine, CollisionFlagged) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    TubeData d = tube_data(ctx);
    cplx s0 = predicted_trivial_zeros(d, 20, 10)[0];
    auto recs = refine_zeros(ctx, d, {s0, s0 + cplx(0, 0.2L)}, tube_classifier(ctx));
    EXPECT_FALSE(recs[0].collision);
    EXPECT_TRUE(recs[1].collision);
}

TEST(Classifier, Regions) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    TubeData d = tube_data(ctx);
    ZeroClassifier c = tube_classifier(ctx);
    EXPECT_EQ(c.kind(d, cplx(-10, d.line_t(-10))), ZeroKind::trivial);
    EXPECT_EQ(c.kind(d, cplx(-10, d.line_t(-10) + 1)), ZeroKind::unclassified);
    EXPECT_EQ(c.kind(d, cplx(-2, 7)), ZeroKind::nontrivial);
    EXPECT_EQ(c.kind(d, cplx(c.sigma_plus + 0.5L, 7)), ZeroKind::unclassified);
}

TEST(OffTube, NoSmallValuesOutsideTube) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    TubeData d = tube_data(ctx);
    SweepResult r = off_tube_sweep(ctx, d, -30, -5, 0.3L);
    EXPECT_GT(r.points, 5000);
    EXPECT_GT(r.min_ratio, off_tube_threshold(0.3L));
    // model lower bound at offset 0.3 is 1 - e^{-0.6 pi}; the full function tracks it
    EXPECT_GT(r.min_ratio, 0.8L * (1 - std::exp(-kTwoPi * 0.3L)));
}

TEST(OffTube, SigmaEpsilonIsSmallForEta24) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    TubeData d = tube_data(ctx);
    SigmaEpsResult r = sigma_epsilon(ctx, d, 0.05L, 30);
    EXPECT_GE(r.sigma_eps, 0);
    EXPECT_LT(r.sigma_eps, 5);
    EXPECT_NEAR(static_cast<double>(r.threshold), 0.5 * (1 - std::exp(-0.1 * M_PI)), 1e-15);
    SweepResult beyond = off_tube_sweep(ctx, d, -30, -r.sigma_eps - 0.25L, 0.05L);
    EXPECT_GE(beyond.min_ratio, r.threshold);
}

TEST(Counting, WindowsAlongTubeAreLinear) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    TubeData d = tube_data(ctx);
    auto a = tube_lattice(d, -30.5L, -19.5L, false), b = tube_lattice(d, -20.5L, -9.5L, false);
    WindingResult wa = count_zeros_tube(ctx, d, a.front().real(), a.back().real(), 1);
    WindingResult wb = count_zeros_tube(ctx, d, b.front().real(), b.back().real(), 1);
    real da = static_cast<real>(wa.zeros) / (a.back().real() - a.front().real());
    real db = static_cast<real>(wb.zeros) / (b.back().real() - b.front().real());
    EXPECT_GT(wa.zeros, 5);
    EXPECT_LT(std::abs(da / db - 1), 0.1L);
    EXPECT_NEAR(static_cast<double>(db), static_cast<double>(1 + d.slope * d.slope), 0.01);
}

TEST(Counting, TubeParallelogramMatchesSeeds) {
    for (Case c : refinement_cases()) {
        const TwistContext& ctx = context(c.form, c.alpha);
        TubeData d = tube_data(ctx);
        auto cuts = tube_lattice(d, -20, -10, false);
        real lo = cuts.front().real(), hi = cuts.back().real();
        WindingResult w = count_zeros_tube(ctx, d, lo, hi, 1);
        EXPECT_EQ(w.zeros, static_cast<int>(tube_lattice(d, lo, hi, true).size())) << c.form;
    }
}

TEST(Counting, EmptyFarRight) {
    for (const char* name : {"ETA24", "ETA8_CUBED"}) {
        const TwistContext& ctx = context(name, rational(1, 4));
        ASSERT_TRUE(first_term_dominates(ctx, 3));
        EXPECT_EQ(count_zeros_rectangle(ctx, 3, 4, 10, 12).zeros, 0) << name;
        EXPECT_EQ(count_zeros_rectangle(ctx, 3, 4, -12, -10).zeros, 0) << name;
    }
}

TEST(Counting, PoleWindsMinusOne) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    ASSERT_TRUE(ctx.in_spectrum());
    WindingResult w = count_zeros_rectangle(ctx, 0.6L, 0.9L, -0.15L, 0.15L);
    EXPECT_EQ(w.winding, -1);
    EXPECT_EQ(w.poles, 1);
    EXPECT_EQ(w.zeros, 0);
    const TwistContext& off = context("ETA24", rational(1, 6));
    WindingResult v = count_zeros_rectangle(off, 0.6L, 0.9L, -0.15L, 0.15L);
    EXPECT_EQ(v.winding, 0);
    EXPECT_EQ(v.poles, 0);
}

TEST(Counting, ReversalNegates) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    WindingResult fwd = count_zeros_rectangle(ctx, 0.6L, 0.9L, -0.15L, 0.15L);
    WindingResult rev = count_zeros_rectangle(ctx, 0.6L, 0.9L, -0.15L, 0.15L, true);
    EXPECT_EQ(rev.winding, -fwd.winding);
    EXPECT_EQ(rev.zeros, -fwd.zeros);
    TubeData d = tube_data(ctx);
    auto cuts = tube_lattice(d, -15, -10, false);
    auto f = [&](cplx s) { return ctx.fe_rhs(s).value; };
    std::vector<cplx> v = {{cuts.front().real(), d.line_t(cuts.front().real()) - 1},
                           {cuts.back().real(), d.line_t(cuts.back().real()) - 1},
                           {cuts.back().real(), d.line_t(cuts.back().real()) + 1},
                           {cuts.front().real(), d.line_t(cuts.front().real()) + 1}};
    int n = count_winding(f, v).winding;
    EXPECT_GT(n, 0);
    EXPECT_EQ(count_winding(f, v, true).winding, -n);
}

TEST(Counting, WindingOfKnownFunctions) {
    auto f = [](cplx s) { return (s - cplx(0.1L, 0.2L)) * (s + cplx(0.3L, 0)) * (s - cplx(5, 5)); };
    EXPECT_EQ(count_winding(f, rectangle(-1, 1, -1, 1)).winding, 2);
    auto g = [](cplx s) { return 1.0L / (s * s * s); };
    EXPECT_EQ(count_winding(g, rectangle(-1, 1, -1, 1)).winding, -3);
    // a zero on the boundary is nudged away
    auto h = [](cplx s) { return s - cplx(1, 0.3L); };
    WindingResult r = count_winding(h, rectangle(-1, 1, -1, 1));
    EXPECT_GE(r.nudged, 1);
    EXPECT_EQ(r.winding, 1);
}

TEST(Rvm, PredictionArithmetic) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    TubeData d = tube_data(ctx);
    // (1/pi) log(576 / (8 (2 pi e)^2))
    const double coef = std::log(72.0 / std::pow(2 * M_PI * std::exp(1.0), 2)) / M_PI;
    EXPECT_NEAR(coef, -0.4455, 5e-4);
    EXPECT_NEAR(static_cast<double>(rvm_prediction(ctx, d, 30)), 2 / M_PI * 30 * std::log(30.0) + 30 * coef, 1e-12);
    EXPECT_NEAR(static_cast<double>(rvm_prediction(ctx, d, 30)), 51.6, 0.05);
    EXPECT_THROW(rvm_prediction(ctx, d, 2), domain_error);
}

TEST(Rvm, SmallAlphaReducesToClassicalConstant) {
    // m+ m- = (1 + nu_alpha)(1 - nu_alpha) -> 1 = nbar for ETA24
    TwistContext ctx(preset("ETA24"), rational(1, 100000));
    TubeData d = tube_data(ctx);
    EXPECT_NEAR(static_cast<double>(d.m_plus * d.m_minus), static_cast<double>(1 - ctx.nu_alpha() * ctx.nu_alpha()), 1e-15);
    EXPECT_EQ(first_support_index(ctx.form()), 1);
}

TEST(Rvm, CountDeviationGrowsLogarithmically) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    TubeData d = tube_data(ctx);
    real se = sigma_epsilon(ctx, d, 0.05L, 30).sigma_eps;
    RvmComparison a = rvm_compare(ctx, d, 15, se), b = rvm_compare(ctx, d, 30, se);
    EXPECT_EQ(a.count.poles, 1);
    EXPECT_LE(std::abs(b.deviation) / std::abs(a.deviation), std::log(30.0L) / std::log(15.0L) + 0.5L);
    EXPECT_LT(std::abs(b.deviation), 3 * std::log(30.0L));
}

TEST(Growth, ExponentsMatchLeftAndRight) {
    const TwistContext& ctx = context("ETA24", rational(1, 12));
    std::vector<real> ts;
    for (int i = 0; i <= 10; ++i) ts.push_back(20 * std::pow(10.0L, i / 10.0L));
    GrowthFit left = growth_probe(ctx, -1, ts);
    EXPECT_NEAR(static_cast<double>(left.plus), 3, 0.15);
    EXPECT_NEAR(static_cast<double>(left.minus), 3, 0.15);
    GrowthFit right = growth_probe(ctx, 2, ts);
    EXPECT_NEAR(static_cast<double>(right.plus), 0, 0.1);
    EXPECT_NEAR(static_cast<double>(right.minus), 0, 0.1);
    EXPECT_THROW(growth_probe(ctx, -1, {20, 30}), domain_error);
}
