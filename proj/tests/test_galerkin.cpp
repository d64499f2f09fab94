#include <cmath>

#include <gtest/gtest.h>

#include "llbar/llbar.hpp"

using namespace llbar;

namespace {

LLBarParams unit_params() {
    LLBarParams p;
    p.beta1 = 0.7;
    p.beta2 = 0.3;
    p.beta3 = 1.1;
    p.beta4 = 0.9;
    p.beta5 = 0.4;
    return p;
}

SpectralField constant(const GridSpec& g, const Index3& modes, Vec3 c) {
    SpectralField s(g, modes);
    for (int i = 0; i < 3; ++i) s.at(0)[i] = std::sqrt(g.volume()) * c[i];
    return s;
}

double max_abs_value(const std::vector<double>& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

TEST(Params, DeriveBeta1) {
    EXPECT_DOUBLE_EQ(derive_beta1(1.0, 0.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(derive_beta1(0.5, 1.0, 0.5), -0.5);
    EXPECT_DOUBLE_EQ(derive_beta1(0.5, 1.0, 1.0), 0.0);
    EXPECT_THROW(derive_beta1(1.0, 1.0, 0.0), Error);
    EXPECT_THROW(derive_beta1(1.0, 1.0, -1.0), Error);
}

TEST(Params, PhysicalMappingAndValidation) {
    const LLBarParams p = LLBarParams::from_physical({0.5, 1.0, 0.5, 2.0});
    EXPECT_DOUBLE_EQ(p.beta1, -0.5);
    EXPECT_DOUBLE_EQ(p.beta2, 1.0);
    EXPECT_DOUBLE_EQ(p.beta3, 0.5);
    EXPECT_DOUBLE_EQ(p.beta4, 2.0);
    EXPECT_DOUBLE_EQ(p.beta5, 1.0);
    EXPECT_NO_THROW(p.validate());
    LLBarParams q = p;
    q.beta1 += 1e-6;
    EXPECT_THROW(q.validate(), Error);

    LLBarParams z = unit_params();
    z.beta3 = 0.0;
    EXPECT_THROW(z.validate(), Error);
    EXPECT_NO_THROW(z.validate_dynamics());
    z.beta2 = -1.0;
    EXPECT_THROW(z.validate_dynamics(), Error);
}

TEST(Projection, IdentityTruncationAndAdjointness) {
    const GridSpec g = GridSpec::cube(2, 16);
    const SpectralField s = random_spectral(g, g.points, 0.0, 1.0, stream_key(1, 0));
    const SpectralField t = random_spectral(g, g.points, 0.0, 1.0, stream_key(1, 1));
    EXPECT_EQ(project(s, ModeBand::full(g)).coeffs, s.coeffs);

    SpectralField single(g, g.points);
    single.at(single.flat_index({10, 2, 0}))[0] = 1.0;
    EXPECT_EQ(max_abs_value(project(single, ModeBand{{8, 8, 1}}).coeffs), 0.0);

    const ModeBand band{{6, 9, 1}};
    const SpectralField ps = project(s, band);
    EXPECT_LE(norm_l2(ps), norm_l2(s));
    EXPECT_EQ(project(ps, band).coeffs, ps.coeffs);
    EXPECT_NEAR(inner(ps, t), inner(s, project(t, band)), 1e-12 * norm_l2(s) * norm_l2(t));

    EXPECT_THROW(project(s, ModeBand{{17, 4, 1}}), Error);
}

TEST(Operators, ConstantUnitFieldIsAnEquilibrium) {
    const GridSpec g = GridSpec::cube(2, 8);
    const ModeBand band{{8, 8, 1}};
    const SpectralField u = constant(g, band.modes, {0.6, 0.8, 0.0});
    EXPECT_LT(max_abs_value(F1(u).coeffs), 1e-14);
    EXPECT_LT(max_abs_value(F2(u).coeffs), 1e-14);
    EXPECT_LT(max_abs_value(F4(u, band).coeffs), 1e-14);
    EXPECT_LT(max_abs_value(F5(u, band).coeffs), 1e-13);
    const SpectralField f3 = F3(u, band);
    for (std::size_t i = 0; i < u.coeffs.size(); ++i) EXPECT_NEAR(f3.coeffs[i], u.coeffs[i], 1e-14);
    EXPECT_LT(max_abs_value(rhs(u, unit_params(), band).coeffs), 1e-13);
}

TEST(Operators, ConstantOfModulusTwoDecaysThroughBeta3Only) {
    const GridSpec g = GridSpec::cube(3, 4, 2.0);
    const ModeBand band{{4, 4, 4}};
    const Vec3 c{2.0, 0.0, 0.0};
    const SpectralField u = constant(g, band.modes, c);
    const LLBarParams p = unit_params();
    const SpectralField r = rhs(u, p, band);
    for (std::size_t i = 0; i < r.coeffs.size(); ++i) EXPECT_NEAR(r.coeffs[i], -3.0 * p.beta3 * u.coeffs[i], 1e-12);
}

TEST(Operators, PrecessionVanishesForParallelProfiles) {
    const GridSpec g = GridSpec::cube(1, 16);
    const ModeBand band{{8, 1, 1}};
    SpectralField v(g, band.modes);
    v.at(1)[0] = 0.9;
    v.at(4)[0] = -0.3;
    EXPECT_LT(max_abs_value(F4(v, band).coeffs), 1e-14);
}

TEST(Operators, F5EqualsLaplacianOfF3) {
    for (int d = 1; d <= 3; ++d) {
        const GridSpec g = GridSpec::cube(d, d == 3 ? 8 : 16);
        Index3 m{1, 1, 1};
        for (int j = 0; j < d; ++j) m[j] = g.points[j] / 2;
        const ModeBand band{m};
        for (int t = 0; t < 5; ++t) {
            const SpectralField v = project(random_spectral(g, g.points, 2.0, 1.0, stream_key(2 + d, t)), band);
            const SpectralField diff = F5(v, band) - F1(F3(v, band));
            EXPECT_LT(norm_l2(diff), 1e-10 * std::max(1.0, norm_l2(F5(v, band))));
        }
    }
}

TEST(Operators, OutputsStayInTheBand) {
    const GridSpec g = GridSpec::cube(2, 16);
    const ModeBand band{{5, 7, 1}};
    const SpectralField v = project(random_spectral(g, g.points, 1.0, 1.0, stream_key(6, 0)), band);
    for (const SpectralField& f : {F3(v, band), F4(v, band), F5(v, band), rhs(v, unit_params(), band)})
        for (std::size_t m = 0; m < f.mode_count(); ++m)
            if (!band.contains(2, f.mode_index(m))) {
                for (int c = 0; c < 3; ++c) EXPECT_EQ(f.at(m)[c], 0.0);
            }
}

TEST(Operators, PrecessionIsL2Neutral) {
    for (int d = 1; d <= 3; ++d) {
        const GridSpec g = GridSpec::cube(d, 8);
        const ModeBand band = ModeBand::full(g);
        const SpectralField u = random_spectral(g, g.points, 0.0, 1.0, stream_key(7, d));
        const double scale = norm_l2(F4(u, band)) * norm_l2(u);
        EXPECT_LT(std::abs(inner(F4(u, band), u)), 1e-10 * scale);
    }
}

TEST(Rhs, LinearFactor) {
    const GridSpec g = GridSpec::cube(1, 8, M_PI);
    LLBarParams p;
    p.beta1 = 1.0;
    p.beta2 = 1.0;
    const auto m = rhs_linear_factor(g, {8, 1, 1}, p);
    EXPECT_EQ(m[0], 0.0);
    EXPECT_NEAR(m[1], -2.0, 1e-14);
    p.beta1 = -1.0;
    const auto n = rhs_linear_factor(g, {8, 1, 1}, p);
    const SpectralField shape(g, {8, 1, 1});
    for (std::size_t k = 0; k < n.size(); ++k) {
        const double lam = shape.eigenvalue(shape.mode_index(k));
        EXPECT_DOUBLE_EQ(n[k], lam - lam * lam);
        if (lam > 1.0) {
            EXPECT_LT(n[k], 0.0);
        }
    }
}

TEST(Rhs, MatchesWeakFormTermByTerm) {
    for (int d = 1; d <= 3; ++d) {
        const GridSpec g = GridSpec::cube(d, 8);
        const GridSpec fine = g.padded();
        const ModeBand band = ModeBand::full(g);
        const LLBarParams p = unit_params();
        const SpectralField u = random_spectral(g, g.points, 2.0, 0.8, stream_key(8, d));
        const SpectralField r = rhs(u, p, band);
        const VectorField uf = evaluate(u, fine);
        const JacobianField gu = gradient(u, fine);
        const VectorField lu = evaluate(laplacian(u), fine);
        const JacobianField gc = nabla_cubic(u, fine);
        VectorField react = uf;
        react -= cubic(uf);
        for (int t = 0; t < 10; ++t) {
            const SpectralField phi = random_spectral(g, g.points, 1.0, 1.0, stream_key(9, 10 * d + t));
            const VectorField pf = evaluate(phi, fine);
            const JacobianField gp = gradient(phi, fine);
            const VectorField lp = evaluate(laplacian(phi), fine);
            const double weak = -p.beta1 * inner(gu, gp) - p.beta2 * inner(lu, lp) + p.beta3 * inner(react, pf) +
                                p.beta4 * inner(cross(uf, gu), gp) - p.beta5 * inner(gc, gp);
            const double scale = std::abs(p.beta2 * inner(lu, lp)) + std::abs(p.beta5 * inner(gc, gp)) + 1.0;
            EXPECT_NEAR(inner(r, phi), weak, 1e-9 * scale) << "d=" << d << " t=" << t;
        }
    }
}

TEST(Rhs, DiscreteL2Balance) {
    for (int d = 1; d <= 3; ++d) {
        const GridSpec g = GridSpec::cube(d, 8);
        const GridSpec fine = g.padded();
        const ModeBand band = ModeBand::full(g);
        const LLBarParams p = unit_params();
        const SpectralField u = random_spectral(g, g.points, 2.0, 1.0, stream_key(10, d));
        const NormSuite n = norms(u);
        const double expected = -p.beta1 * n.gradL2 * n.gradL2 - p.beta2 * n.deltaL2 * n.deltaL2 +
                                p.beta3 * n.L2 * n.L2 - p.beta3 * std::pow(n.L4, 4) -
                                2.0 * p.beta5 * n.uDotGradU * n.uDotGradU - p.beta5 * n.absUabsGradU * n.absUabsGradU;
        const double got = inner(rhs(u, p, band), u);
        EXPECT_NEAR(got, expected, 1e-8 * std::max(1.0, std::abs(expected)));
        (void)fine;
    }
}

TEST(Rhs, LocalLipschitzRatiosStayBounded) {
    const GridSpec g = GridSpec::cube(1, 16);
    const ModeBand band{{8, 1, 1}};
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        SpectralField v = project(random_spectral(g, g.points, 2.0, 1.0, stream_key(11, t)), band);
        SpectralField w = project(random_spectral(g, g.points, 2.0, 1.0, stream_key(12, t)), band);
        v *= 1.0 / norm_l2(v);
        w *= 1.0 / norm_l2(w);
        worst = std::max(worst, norm_l2(F3(v, band) - F3(w, band)) / norm_l2(v - w));
    }
    EXPECT_TRUE(std::isfinite(worst));
    EXPECT_LT(worst, 1e3);
}

TEST(Workspace, MatchesReferenceNonlinearTerms) {
    for (int d = 1; d <= 3; ++d) {
        const GridSpec g = GridSpec::cube(d, d == 3 ? 8 : 16);
        Index3 m{1, 1, 1};
        for (int j = 0; j < d; ++j) m[j] = g.points[j] * 3 / 4;
        const ModeBand band{m};
        const LLBarParams p = unit_params();
        NonlinearWorkspace work(g, g.points, band, p);
        for (int t = 0; t < 5; ++t) {
            const SpectralField u = random_spectral(g, g.points, 1.0, 1.0, stream_key(13 + d, t));
            const SpectralField ref = nonlinear_rhs(u, p, band);
            SpectralField got(g, g.points);
            work.apply(u, got);
            const double scale = max_abs_value(ref.coeffs);
            for (std::size_t i = 0; i < ref.coeffs.size(); ++i)
                ASSERT_NEAR(got.coeffs[i], ref.coeffs[i], 1e-13 * scale) << "d=" << d << " i=" << i;
        }
    }
}

TEST(Workspace, SparseComponentsMatchToo) {
    const GridSpec g = GridSpec::cube(2, 16);
    const LLBarParams p = unit_params();
    NonlinearWorkspace work(g, g.points, ModeBand::full(g), p);
    SpectralField u(g, g.points);
    u.at(0)[0] = 1.0;
    u.at(u.flat_index({3, 1, 0}))[0] = 0.2;
    const SpectralField ref = nonlinear_rhs(u, p, ModeBand::full(g));
    SpectralField got(g, g.points);
    work.apply(u, got);
    for (std::size_t i = 0; i < ref.coeffs.size(); ++i) EXPECT_NEAR(got.coeffs[i], ref.coeffs[i], 1e-14);
}

TEST(Rhs, NonFiniteStateIsReportedAsBlowup) {
    const GridSpec g = GridSpec::cube(1, 8);
    SpectralField u(g, g.points);
    u.at(2)[1] = 1e300;
    try {
        rhs(u, unit_params(), ModeBand::full(g));
        FAIL() << "expected blow-up";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::blowup);
    }
}
