#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "llbar/llbar.hpp"

using namespace llbar;
using std::numbers::pi;

namespace {

SampleSpec samples(int dim, int n, int count, double decay = 0.0, std::uint64_t seed = 1) {
    SampleSpec s;
    s.grid = GridSpec::cube(dim, n);
    s.band = {n, n, n};
    s.count = count;
    s.decay = decay;
    s.seed = seed;
    return s;
}

SpectralField eigenmode(const GridSpec& g, const Index3& k, int comp, double amp) {
    SpectralField s(g, g.points);
    s.at(s.flat_index(k))[comp] = amp;
    return s;
}

SpectralField constant(const GridSpec& g, Vec3 c) {
    SpectralField s(g, g.points);
    for (int i = 0; i < 3; ++i) s.at(0)[i] = c[i] * std::sqrt(g.volume());
    return s;
}

} // namespace

TEST(Interp, RandomFieldsHaveNoViolations) {
    for (int d = 1; d <= 3; ++d) {
        const int n = d == 3 ? 8 : 16;
        for (double decay : {0.0, 4.0}) {
            for (const RatioReport& r : check_interp(samples(d, n, 200, decay, 3))) {
                EXPECT_EQ(r.violations, 0) << ratio_summary(r);
                EXPECT_LE(r.max_ratio, 1.0 + 1e-9);
                EXPECT_GT(r.median_ratio, 0.0);
                EXPECT_EQ(r.samples, 200u);
            }
        }
    }
}

TEST(Interp, EigenmodesAttainEqualityAndConstantsPass) {
    const GridSpec g = GridSpec::cube(2, 16, 1.5);
    for (const Index3 k : {Index3{1, 0, 0}, Index3{3, 5, 0}, Index3{15, 15, 0}}) {
        const auto r = interp_ratios(eigenmode(g, k, 1, 0.7));
        EXPECT_NEAR(r[0], 1.0, 1e-12);
        EXPECT_NEAR(r[1], 1.0, 1e-12);
    }
    const auto c = interp_ratios(constant(g, {1.0, 0.0, 0.0}));
    EXPECT_EQ(c[0], 0.0);
    EXPECT_EQ(c[1], 0.0);
    // A constant plus one mode is still an equality case: the constant drops out of every seminorm.
    SpectralField v = constant(g, {0.3, 0.0, 2.0});
    v.at(v.flat_index({2, 1, 0}))[0] = 1.0;
    EXPECT_NEAR(interp_ratios(v)[0], 1.0, 1e-12);
}

TEST(Guard, DegeneratePolicy) {
    EXPECT_EQ(guarded_ratio(0.0, 0.0), 0.0);
    EXPECT_EQ(guarded_ratio(1e-15, 5e-15), 0.0);
    EXPECT_TRUE(std::isinf(guarded_ratio(1e-3, 0.0)));
    EXPECT_EQ(guarded_ratio(1.0, 4.0), 0.25);
    SampleSpec s = samples(1, 8, 3);
    const RatioReport r = summarize("x", {0.5, guarded_ratio(1.0, 0.0), 0.25}, s, 1.0, 0.0);
    EXPECT_EQ(r.violations, 1);
    EXPECT_EQ(r.witness_index, 1u);
    EXPECT_EQ(r.witness_seed, stream_key(1, 1));
    EXPECT_EQ(r.median_ratio, 0.5);
}

TEST(Elliptic, EigenmodeClosedForm) {
    const GridSpec g = GridSpec::cube(1, 32, 2.0);
    for (int k = 1; k < 32; k += 3) {
        const SpectralField v = eigenmode(g, {k, 0, 0}, 2, 1.3);
        const double lam = v.eigenvalue({k, 0, 0});
        const auto r = elliptic_ratios(v, 0.25);
        EXPECT_NEAR(r[0], (1.0 + lam + lam * lam) / (1.0 + lam * lam), 1e-13);
        EXPECT_LE(r[0], 1.5);
        EXPECT_LE(r[1], 1.0 + 1e-12);
    }
    // lambda = 1 attains 3/2.
    const GridSpec unit = GridSpec::cube(1, 8, pi);
    EXPECT_NEAR(elliptic_ratios(eigenmode(unit, {1, 0, 0}, 0, 1.0), 0.25)[0], 1.5, 1e-14);
    // eq2 with eps = 1/(2 lambda) is sharp.
    const double lam = unit.wavenumber(0, 3) * unit.wavenumber(0, 3);
    EXPECT_NEAR(elliptic_ratios(eigenmode(unit, {3, 0, 0}, 0, 1.0), 0.5 / lam)[1], 1.0, 1e-14);
    for (double x : elliptic_ratios(constant(g, {1.0, 1.0, 0.0}), 0.25)) EXPECT_LE(x, 1.0);
    EXPECT_EQ(elliptic_ratios(constant(g, {1.0, 1.0, 0.0}), 0.25)[0], 1.0);
}

TEST(Elliptic, Eq2HoldsAndConstantsAreBandStable) {
    std::array<std::vector<double>, 5> consts;
    for (int n : {16, 32, 64}) {
        const auto reps = check_elliptic(samples(1, n, 300, 0.0, 5));
        ASSERT_EQ(reps.size(), 5u);
        EXPECT_EQ(reps[1].id, "eq2");
        EXPECT_EQ(reps[1].violations, 0);
        for (int j = 0; j < 5; ++j) {
            EXPECT_TRUE(std::isfinite(reps[j].max_ratio));
            consts[j].push_back(reps[j].max_ratio);
        }
    }
    // eq2 asserts its constant instead; the others are reported and must not drift with the band.
    for (int j : {0, 2, 3, 4}) EXPECT_TRUE(band_stable(consts[j], 1.05)) << j;
    EXPECT_THROW(check_elliptic(samples(1, 8, 4), 0.0), Error);
}

TEST(ProductHs, UnitFactorAndEigenmodeSquare) {
    const GridSpec g = GridSpec::cube(1, 16);
    const GridSpec fine = g.padded();
    const SpectralField c = constant(g, {0.6, 0.0, 0.8});
    const SpectralField one = constant(g, {1.0, 0.0, 0.0});
    for (int s : {1, 2}) EXPECT_NEAR(product_hs_ratio(c, one, s, fine), 1.0, 1e-13);

    const double a = 0.9;
    const SpectralField u = eigenmode(g, {1, 0, 0}, 0, a / std::sqrt(2.0));  // a cos(pi x)
    const double p2 = std::pow(pi, 2), p4 = std::pow(pi, 4);
    const double prod_h1 = std::pow(a, 4) * (3.0 / 8.0 + p2 / 2.0);
    const double prod_h2 = prod_h1 + std::pow(a, 4) * 2.0 * p4;
    const double u_h1 = a * a * 0.5 * (1.0 + p2);
    const double u_h2 = a * a * 0.5 * (1.0 + p2 + p4);
    EXPECT_NEAR(product_hs_ratio(u, u, 1, fine), std::sqrt(prod_h1) / u_h1, 1e-12);
    EXPECT_NEAR(product_hs_ratio(u, u, 2, fine), std::sqrt(prod_h2) / u_h2, 1e-12);
}

TEST(ProductHs, RandomPairsAndGuards) {
    const RatioReport r = check_product_hs(samples(2, 16, 100, 2.0, 6), 2);
    EXPECT_EQ(r.id, "eq7_s2");
    EXPECT_EQ(r.samples, 100u);
    EXPECT_TRUE(std::isfinite(r.max_ratio) && r.max_ratio > 0.0);
    EXPECT_FALSE(r.constant.has_value());
    EXPECT_THROW(check_product_hs(samples(2, 8, 4), 1), Error);
    EXPECT_THROW(check_product_hs(samples(1, 8, 4), 3), Error);
    EXPECT_NO_THROW(check_product_hs(samples(1, 8, 4), 1));
}

TEST(CubicLipschitz, TrivialCasesAndBound) {
    const GridSpec g = GridSpec::cube(1, 16);
    const GridSpec fine = g.padded();
    const SampleSpec s = samples(1, 16, 10, 2.0, 7);
    const SpectralField zero(g, g.points);
    for (int i = 0; i < 10; ++i) {
        const SpectralField u = s.draw(i);
        EXPECT_LE(cubic_lipschitz_ratio(u, zero, 0, fine), 1.0 + 1e-12);
        for (int k = 0; k <= 2; ++k) EXPECT_EQ(cubic_lipschitz_ratio(u, u, k, fine), 0.0);
    }
    for (int d = 1; d <= 2; ++d) {
        const RatioReport r = check_cubic_lipschitz(samples(d, 16, 100, 0.0, 8), 0);
        EXPECT_EQ(r.violations, 0);
        EXPECT_LE(r.max_ratio, 1.5);
        ASSERT_TRUE(r.constant.has_value());
        EXPECT_EQ(*r.constant, 1.5);
    }
    for (int k : {1, 2}) {
        std::vector<double> c;
        for (int n : {8, 16, 32}) c.push_back(check_cubic_lipschitz(samples(1, n, 100, 4.0, 9), k).max_ratio);
        for (double x : c) EXPECT_TRUE(std::isfinite(x) && x > 0.0);
    }
    EXPECT_THROW(check_cubic_lipschitz(samples(1, 8, 4), 3), Error);
}

TEST(CrossDiff, TriangleBoundHolds) {
    const GridSpec g = GridSpec::cube(2, 8);
    const GridSpec fine = g.padded();
    const SampleSpec s = samples(2, 8, 6, 0.0, 10);
    const SpectralField zero(g, g.points);
    for (int i = 0; i < 6; ++i) {
        const SpectralField u = s.draw(i);
        EXPECT_LE(cross_diff_ratio(u, zero, {1, 0, 0}, fine), 1.0 + 1e-12);
        EXPECT_EQ(cross_diff_ratio(u, u, {2, 0, 0}, fine), 0.0);
    }
    for (const Index3 k : {Index3{0, 0, 0}, Index3{1, 0, 0}, Index3{0, 1, 0}, Index3{2, 0, 0}, Index3{1, 1, 0},
                           Index3{2, 2, 0}}) {
        const RatioReport r = check_cross_diff(samples(2, 8, 100, 0.0, 11), k);
        EXPECT_EQ(r.violations, 0) << r.id;
        EXPECT_LE(r.max_ratio, 1.0 + 1e-9);
    }
    EXPECT_EQ(check_cross_diff(samples(3, 4, 2), {1, 0, 2}).id, "cross_diff_k102");
}

TEST(ScaleInvariance, RatiosAreHomogeneousOfDegreeZero) {
    const GridSpec g = GridSpec::cube(2, 8);
    const GridSpec fine = g.padded();
    const SampleSpec s = samples(2, 8, 4, 2.0, 12);
    for (int i = 0; i < 2; ++i) {
        const SpectralField u = s.draw(2 * i), v = s.draw(2 * i + 1);
        for (double c : {0.1, 10.0}) {
            SpectralField cu = u, cv = v;
            cu *= c;
            cv *= c;
            const auto a = interp_ratios(u), b = interp_ratios(cu);
            EXPECT_NEAR(a[0], b[0], 1e-12);
            EXPECT_NEAR(a[1], b[1], 1e-12);
            const auto e = elliptic_ratios(u, 0.25), f = elliptic_ratios(cu, 0.25);
            EXPECT_NEAR(e[0], f[0], 1e-12);
            EXPECT_NEAR(e[4], f[4], 1e-12);
            EXPECT_NEAR(product_hs_ratio(u, v, 2, fine), product_hs_ratio(cu, cv, 2, fine), 1e-12);
            EXPECT_NEAR(cross_diff_ratio(u, v, {1, 1, 0}, fine), cross_diff_ratio(cu, cv, {1, 1, 0}, fine), 1e-12);
            EXPECT_NEAR(gn_ratio(u, {2, 4, 0, 0, 1}, fine), gn_ratio(cu, {2, 4, 0, 0, 1}, fine), 1e-12);
        }
    }
    const SpectralField c1 = constant(g, {1.0, 0.0, 0.0}), c2 = constant(g, {7.0, 0.0, 0.0});
    EXPECT_NEAR(gn_ratio(c1, {2, std::nullopt, 0, 0, 2}, fine), gn_ratio(c2, {2, std::nullopt, 0, 0, 2}, fine), 1e-13);
}

TEST(GN, ReferenceTuplesReproduceExponents) {
    const auto refs = gn_reference_tuples();
    ASSERT_EQ(refs.size(), 7u);
    for (const GNReference& r : refs) EXPECT_EQ(gn_theta(r.tuple), r.theta) << r.where;
    EXPECT_EQ(gn_theta({1, 4, 1, 1, 2}), Rational(3, 4));
    EXPECT_EQ(gn_theta({2, std::nullopt, 0, 0, 2}), Rational(1, 2));
}

TEST(GN, InadmissibleTuplesNameTheConstraint) {
    const auto message = [](const GNTuple& t) {
        try {
            gn_theta(t);
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message({1, 2, 0, 0, 1}).find("q in (2, inf]"), std::string::npos);
    EXPECT_NE(message({1, 4, 0, 2, 1}).find("s1 < s2"), std::string::npos);
    EXPECT_NE(message({4, 4, 0, 0, 1}).find("d in {1,2,3}"), std::string::npos);
    EXPECT_NE(message({3, std::nullopt, 0, 0, 1}).find("theta in (0,1)"), std::string::npos);
    EXPECT_NE(message({1, 4, 2, 0, 1}).find("theta in (0,1)"), std::string::npos);
    EXPECT_THROW(gn_check(samples(1, 8, 2), {2, 4, 0, 0, 1}), Error);
}

TEST(GN, EmpiricalConstantsAreFinite) {
    for (const GNReference& ref : gn_reference_tuples()) {
        if (ref.tuple.r > 1) continue;
        const int n = ref.tuple.d == 3 ? 8 : 16;
        const RatioReport r = gn_check(samples(ref.tuple.d, n, 40, 2.0, 13), ref.tuple);
        EXPECT_TRUE(std::isfinite(r.max_ratio) && r.max_ratio > 0.0) << ref.where;
    }
}

TEST(Reports, DeterministicAndCsv) {
    const SampleSpec s = samples(2, 8, 50, 1.0, 14);
    const auto a = check_elliptic(s);
    const auto b = check_elliptic(s);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(ratio_csv_row(a[i]), ratio_csv_row(b[i]));
    EXPECT_EQ(ratio_csv_header(), "inequality,max_ratio,median_ratio,violations,witness_seed");
    RatioReport r;
    r.id = "gn(d=1, q=4)";
    r.max_ratio = 0.1;
    r.median_ratio = 0.5;
    r.violations = 2;
    r.witness_seed = 42;
    EXPECT_EQ(ratio_csv_row(r), "\"gn(d=1, q=4)\",0.10000000000000001,0.5,2,42");
    EXPECT_NE(ratio_summary(a[1]).find("0 violation(s)"), std::string::npos);
}
