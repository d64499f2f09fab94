#include <cmath>

#include <gtest/gtest.h>

#include "llbar/llbar.hpp"

using namespace llbar;

namespace {

LLBarParams linear_only(double b1, double b2) {
    LLBarParams p;
    p.beta1 = b1;
    p.beta2 = b2;
    p.beta3 = p.beta4 = p.beta5 = 0.0;
    return p;
}

LLBarParams full_params() {
    LLBarParams p;
    p.beta1 = 0.2;
    p.beta2 = 0.01;
    p.beta3 = 1.0;
    p.beta4 = 1.0;
    p.beta5 = 0.01;
    return p;
}

IntegratorPolicy policy(Scheme s, double dt, double t_end) {
    IntegratorPolicy pol;
    pol.scheme = s;
    pol.dt = dt;
    pol.t_end = t_end;
    return pol;
}

SpectralField unit_constant(const GridSpec& g) {
    SpectralField s(g, g.points);
    s.at(0)[0] = std::sqrt(g.volume());
    return s;
}

} // namespace

TEST(Policy, Validation) {
    IntegratorPolicy p;
    p.dt = 0.0;
    EXPECT_THROW(p.validate(), Error);
    p.dt = 1e-3;
    p.t_end = -1.0;
    EXPECT_THROW(p.validate(), Error);
    p.t_end = 0.0;
    EXPECT_NO_THROW(p.validate());
    EXPECT_EQ(p.step_count(), 0);
    p.t_end = 0.0105;
    EXPECT_THROW(p.step_count(), Error);
    p.t_end = 1.0;
    p.max_steps = 10;
    EXPECT_EQ(p.step_count(), 10);
    EXPECT_EQ(parse_scheme("IMEX-CNAB2"), Scheme::imex_cnab2);
    EXPECT_FALSE(parse_scheme("RK4").has_value());
}

TEST(Phi, SeriesBranchIsContinuous) {
    for (double z : {-2e-4, -1e-4, 1e-4, 2e-4}) {
        const double below = z * (1.0 - 1e-9);
        EXPECT_NEAR(detail::phi1(z), detail::phi1(below), 1e-12);
        EXPECT_NEAR(detail::phi2(z), detail::phi2(below), 1e-12);
    }
    EXPECT_DOUBLE_EQ(detail::phi1(0.0), 1.0);
    EXPECT_DOUBLE_EQ(detail::phi2(0.0), 0.5);
    EXPECT_NEAR(detail::phi1(-50.0), (std::exp(-50.0) - 1.0) / -50.0, 1e-15);
}

TEST(Step, LinearSingleModeIsExact) {
    const GridSpec g = GridSpec::cube(2, 8);
    for (double b1 : {1.0, -0.5}) {
        const LLBarParams p = linear_only(b1, 0.02);
        SolverState s;
        s.u = SpectralField(g, g.points);
        const Index3 k{1, 2, 0};
        s.u.at(s.u.flat_index(k))[2] = 0.5;
        const double lam = s.u.eigenvalue(k);
        const double m = -b1 * lam - 0.02 * lam * lam;
        const SolverState next = step(s, p, policy(Scheme::etdrk2, 1e-2, 1.0));
        EXPECT_NEAR(next.u.at(next.u.flat_index(k))[2], 0.5 * std::exp(m * 1e-2), 1e-14);
        EXPECT_EQ(next.step_index, 1);
        EXPECT_DOUBLE_EQ(next.t, 1e-2);
    }
}

TEST(Step, EquilibriumIsPreservedByEveryScheme) {
    const GridSpec g = GridSpec::cube(2, 8);
    for (Scheme sc : {Scheme::etdrk2, Scheme::imex_euler, Scheme::imex_cnab2}) {
        SolverState s;
        s.u = unit_constant(g);
        const SpectralField u0 = s.u;
        const Stepper st(g, g.points, ModeBand::full(g), full_params(), policy(sc, 1e-3, 1.0));
        for (int i = 0; i < 20; ++i) s = st.step(s);
        for (std::size_t i = 0; i < u0.coeffs.size(); ++i) EXPECT_NEAR(s.u.coeffs[i], u0.coeffs[i], 1e-14);
    }
}

TEST(Step, SelfConvergenceOrderIsTwo) {
    const GridSpec g = GridSpec::cube(1, 16);
    const ModeBand band = ModeBand::full(g);
    const SpectralField u0 = random_spectral(g, {8, 1, 1}, 3.0, 0.5, stream_key(1, 0));
    const LLBarParams p = full_params();
    for (Scheme sc : {Scheme::etdrk2, Scheme::imex_cnab2}) {
        std::vector<SpectralField> finals;
        const std::vector<double> dts{1e-2, 5e-3, 2.5e-3, 1.25e-3};
        for (double dt : dts) finals.push_back(integrate(u0, p, band, policy(sc, dt, 0.2)).final_state());
        const double e1 = norm_l2(finals[0] - finals[1]);
        const double e2 = norm_l2(finals[1] - finals[2]);
        const double e3 = norm_l2(finals[2] - finals[3]);
        EXPECT_GE(std::log2(e1 / e2), 1.8) << scheme_name(sc);
        EXPECT_GE(std::log2(e2 / e3), 1.8) << scheme_name(sc);
    }
    std::vector<SpectralField> finals;
    for (double dt : {1e-2, 5e-3, 2.5e-3})
        finals.push_back(integrate(u0, p, band, policy(Scheme::imex_euler, dt, 0.2)).final_state());
    const double ratio = norm_l2(finals[0] - finals[1]) / norm_l2(finals[1] - finals[2]);
    EXPECT_NEAR(std::log2(ratio), 1.0, 0.2);
}

TEST(Integrate, ZeroHorizonKeepsOnlyTheInitialSnapshot) {
    const GridSpec g = GridSpec::cube(1, 8);
    const Trajectory tr = integrate(unit_constant(g), full_params(), ModeBand::full(g), policy(Scheme::etdrk2, 1e-3, 0.0));
    ASSERT_EQ(tr.snapshots.size(), 1u);
    EXPECT_EQ(tr.snapshots[0].t, 0.0);
}

TEST(Integrate, LinearClosedFormAtUnitTime) {
    const GridSpec g = GridSpec::cube(1, 16);
    SpectralField u0(g, g.points);
    u0.at(3)[0] = 1.0;
    const LLBarParams p = linear_only(0.05, 1e-4);
    const double lam = u0.eigenvalue({3, 0, 0});
    const double m = -0.05 * lam - 1e-4 * lam * lam;
    const Trajectory tr = integrate(u0, p, ModeBand::full(g), policy(Scheme::etdrk2, 1e-2, 1.0), 10);
    EXPECT_EQ(tr.snapshots.size(), 11u);
    EXPECT_NEAR(tr.final_state().at(3)[0] / std::exp(m), 1.0, 1e-12);
}

TEST(Integrate, CadenceAndProjection) {
    const GridSpec g = GridSpec::cube(2, 8);
    const ModeBand band{{4, 4, 1}};
    const SpectralField u0 = random_spectral(g, g.points, 2.0, 0.3, stream_key(2, 0));
    std::vector<double> seen;
    const Trajectory tr = integrate(u0, full_params(), band, policy(Scheme::etdrk2, 1e-3, 0.1), 10,
                                    [&](const Snapshot& s) { seen.push_back(s.t); });
    ASSERT_EQ(tr.snapshots.size(), 11u);
    EXPECT_EQ(seen.size(), 11u);
    EXPECT_NEAR(seen.back(), 0.1, 1e-15);
    for (const Snapshot& s : tr.snapshots)
        for (std::size_t m = 0; m < s.u.mode_count(); ++m)
            if (!band.contains(2, s.u.mode_index(m))) {
                for (int c = 0; c < 3; ++c) EXPECT_EQ(s.u.at(m)[c], 0.0);
            }
}

TEST(Integrate, PrecessionOnlyConservesL2) {
    const GridSpec g = GridSpec::cube(1, 16);
    LLBarParams p;
    p.beta1 = p.beta2 = p.beta3 = p.beta5 = 0.0;
    p.beta4 = 1.0;
    const SpectralField u0 = random_spectral(g, {4, 1, 1}, 2.0, 0.5, stream_key(3, 0));
    const Trajectory tr = integrate(u0, p, ModeBand::full(g), policy(Scheme::etdrk2, 1e-3, 1.0), 100);
    const double n0 = norm_l2(tr.snapshots.front().u);
    for (const Snapshot& s : tr.snapshots) EXPECT_LT(std::abs(norm_l2(s.u) - n0), 1e-6);
}

TEST(Integrate, IsDeterministic) {
    const GridSpec g = GridSpec::cube(2, 8);
    const SpectralField u0 = random_spectral(g, g.points, 2.0, 0.5, stream_key(4, 0));
    const auto a = integrate(u0, full_params(), ModeBand::full(g), policy(Scheme::etdrk2, 1e-3, 0.05));
    const auto b = integrate(u0, full_params(), ModeBand::full(g), policy(Scheme::etdrk2, 1e-3, 0.05));
    EXPECT_EQ(a.final_state().coeffs, b.final_state().coeffs);
}

TEST(Integrate, BlowupThresholdAborts) {
    const GridSpec g = GridSpec::cube(1, 8);
    SpectralField u0 = unit_constant(g);
    u0 *= 3.0;
    IntegratorPolicy pol = policy(Scheme::etdrk2, 1e-3, 0.01);
    pol.blowup_threshold = 2.0;
    try {
        integrate(u0, full_params(), ModeBand::full(g), pol);
        FAIL() << "expected blow-up";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::blowup);
        EXPECT_NE(std::string(e.what()).find("t="), std::string::npos);
    }
}

TEST(Integrate, UnstableImplicitStepIsRejected) {
    const GridSpec g = GridSpec::cube(1, 8);
    const LLBarParams p = linear_only(-10.0, 0.0);
    EXPECT_THROW(Stepper(g, g.points, ModeBand::full(g), p, policy(Scheme::imex_euler, 1.0, 1.0)), Error);
    EXPECT_NO_THROW(Stepper(g, g.points, ModeBand::full(g), p, policy(Scheme::etdrk2, 1.0, 1.0)));
}
