#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cbf/estimates.hpp"
#include "cbf/manufactured.hpp"
#include "test_support.hpp"

using namespace cbf;
using cbf::testing::bump_curl;
using cbf::testing::random_field;

namespace {

SolverConfig config(int n, double dt, double T, double r = 2.0) {
    return SolverConfig{Grid(n, n), dt, T, default_case_params(r)};
}

struct Run {
    ManufacturedProblem mp;
    Trajectory traj;
};

Run manufactured_run(const std::string& name, double r, const SolverConfig& cfg) {
    auto mp = build_case(name, r, cfg);
    auto traj = solve_direct(mp.data.u0(), mp.f_exact, mp.data.g(), mp.data.cfg());
    return {std::move(mp), std::move(traj)};
}

}  // namespace

TEST(EstimateCheck, PassedMatchesDefinition) {
    EXPECT_TRUE(make_check("a", 1.0, 1.0, 0.0).passed);
    EXPECT_TRUE(make_check("a", 1.04, 1.0, 0.05).passed);
    EXPECT_FALSE(make_check("a", 1.06, 1.0, 0.05).passed);
    EXPECT_TRUE(make_check("a", 0.0, 0.0, 0.0).passed);
    EXPECT_NEAR(make_check("a", 1.05, 1.0, 0.05).utilization(), 1.0, 1e-15);
    EXPECT_EQ(make_check("a", 0.0, 0.0, 0.0).utilization(), 0.0);
    EXPECT_TRUE(std::isinf(make_check("a", 1.0, 0.0, 0.0).utilization()));
}

TEST(Energy, UnforcedRunReducesToNormDecay) {
    const auto cfg = config(32, 2e-3, 0.1);
    const FieldSeries g{0.0, cfg.dt, std::vector<VectorField>(cfg.steps() + 1, bump_curl(cfg.grid))};
    const TimeSeries f(0.0, cfg.dt, cfg.steps() + 1);
    const auto traj = solve_direct(0.1 * bump_curl(cfg.grid), f, g, cfg);
    const auto e1 = check_energy_E1(traj, f, g);
    EXPECT_TRUE(e1.passed);
    EXPECT_EQ(e1.lhs, l2_norm(traj[0]));
    EXPECT_EQ(e1.rhs, l2_norm(traj[0]));
    const auto e2 = check_energy_E2(traj, f, g);
    EXPECT_TRUE(e2.passed);
    EXPECT_LE(e2.lhs, e2.rhs);
}

TEST(Energy, ManufacturedRunsPassAndForcedFailuresFail) {
    for (const char* name : {"taylor-vortex-r1", "taylor-vortex-r3"}) {
        const auto run = manufactured_run(name, 2.0, config(32, 2e-3, 0.1));
        const auto& f = run.mp.f_exact;
        const auto& g = run.mp.data.g();
        for (const auto& check : {check_energy_E1(run.traj, f, g), check_energy_E2(run.traj, f, g)}) {
            EXPECT_TRUE(check.passed) << check.name << " " << check.context;
            EXPECT_GT(check.lhs, 0.0);
            EXPECT_NE(check.context.find("nx=32"), std::string::npos);
            const double scale = 0.5 * check.lhs / check.rhs;
            const auto forced = check.name == "energy_E1" ? check_energy_E1(run.traj, f, g, energy_slack, scale)
                                                         : check_energy_E2(run.traj, f, g, energy_slack, scale);
            EXPECT_FALSE(forced.passed) << check.name;
        }
        EXPECT_FALSE(check_energy_E1(run.traj, f, g, 0.0, 0.0).passed);
    }
}

TEST(Stability, IdenticalRunsAndSourcePerturbation) {
    const auto run = manufactured_run("taylor-vortex-r2", 2.0, config(32, 2e-3, 0.1));
    const auto& g = run.mp.data.g();
    const auto& f1 = run.mp.f_exact;
    const auto same = check_direct_stability_E6(run.traj, f1, run.traj, f1, g);
    EXPECT_TRUE(same.passed);
    EXPECT_EQ(same.lhs, 0.0);

    TimeSeries f2 = f1;
    for (std::size_t n = 0; n < f2.size(); ++n) f2[n] *= 1.0 + 0.1 * std::sin(10.0 * f2.time(n));
    const auto traj2 = solve_direct(run.mp.data.u0(), f2, g, run.traj.config);
    const auto e6 = check_direct_stability_E6(traj2, f2, run.traj, f1, g);
    EXPECT_TRUE(e6.passed);
    EXPECT_GT(e6.lhs, 0.0);
    const auto forced = check_direct_stability_E6(traj2, f2, run.traj, f1, g, energy_slack, 0.5 * e6.lhs / e6.rhs);
    EXPECT_FALSE(forced.passed);

    const auto short_run = manufactured_run("taylor-vortex-r2", 2.0, config(32, 2e-3, 0.05));
    EXPECT_THROW(check_direct_stability_E6(short_run.traj, short_run.mp.f_exact, run.traj, f1, g), DimensionError);
}

TEST(Monotonicity, EqualFieldsAndLinearIdentity) {
    Grid g(32, 32);
    std::mt19937_64 rng(31);
    const auto v = random_field(g, rng);
    const auto same = check_monotonicity_E11(v, v, 0.7, 2.5);
    EXPECT_TRUE(same.passed);
    EXPECT_EQ(same.lhs, 0.0);
    EXPECT_EQ(same.rhs, 0.0);

    const auto w = random_field(g, rng);
    const auto lin = check_monotonicity_E11(v, w, 0.7, 1.0);
    EXPECT_TRUE(lin.passed);
    EXPECT_NEAR(lin.lhs, lin.rhs, 1e-13 * lin.rhs);
    EXPECT_THROW(check_monotonicity_E11(v, w, 0.7, 0.5), DomainError);
}

TEST(Monotonicity, RandomPairsPass) {
    Grid g(16, 16);
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> scale(1e-3, 10.0);
    for (double r : {1.0, 1.5, 2.0, 2.5, 3.0})
        for (int k = 0; k < 100; ++k) {
            const auto a = random_field(g, rng, scale(rng), false);
            const auto b = random_field(g, rng, scale(rng), false);
            const auto c = check_monotonicity_E11(a, b, 0.5, r);
            ASSERT_TRUE(c.passed) << "r=" << r << " lhs=" << c.lhs << " rhs=" << c.rhs;
        }
}

TEST(TaylorBound, EqualFieldsAndLinearEquality) {
    Grid g(16, 16);
    std::mt19937_64 rng(33);
    const auto v = random_field(g, rng);
    const auto same = check_taylor_bound_3j(v, v, 2.0);
    EXPECT_TRUE(same.passed);
    EXPECT_EQ(same.lhs, 0.0);
    const auto w = random_field(g, rng);
    const auto lin = check_taylor_bound_3j(v, w, 1.0);
    EXPECT_TRUE(lin.passed);
    EXPECT_NEAR(lin.lhs, lin.rhs, 1e-14 * lin.rhs);
}

TEST(TaylorBound, RandomPairsPass) {
    Grid g(16, 16);
    std::mt19937_64 rng(34);
    std::uniform_real_distribution<double> scale(1e-3, 10.0);
    for (double r : {1.0, 1.5, 2.0, 2.5, 3.0})
        for (int k = 0; k < 100; ++k) {
            const auto a = random_field(g, rng, scale(rng), false);
            const auto b = random_field(g, rng, scale(rng), false);
            ASSERT_TRUE(check_taylor_bound_3j(a, b, r).passed) << "r=" << r;
        }
}

TEST(Perturbation, KindNamesRoundTrip) {
    for (auto k : {PerturbationKind::u0, PerturbationKind::g, PerturbationKind::phi})
        EXPECT_EQ(parse_perturbation(to_string(k)), k);
    EXPECT_THROW(parse_perturbation("omega"), DomainError);
}

TEST(Perturbation, SlopeFit) {
    const std::vector<double> x{1e-1, 1e-2, 1e-3};
    EXPECT_NEAR(loglog_slope(x, {3e-1, 3e-2, 3e-3}), 1.0, 1e-12);
    EXPECT_NEAR(loglog_slope(x, {1e-2, 1e-4, 1e-6}), 2.0, 1e-12);
    EXPECT_THROW(loglog_slope({1.0}, {1.0}), DomainError);
    EXPECT_THROW(loglog_slope(x, {1.0, 2.0}), DomainError);
}

TEST(Perturbation, DirectionsAreFixedAndAdmissible) {
    const auto mp = build_case("taylor-vortex-r2", 2.0, config(16, 0.01, 0.1));
    const auto dir = default_directions(mp.data);
    EXPECT_NEAR(l2_norm(dir.field), 1.0, 1e-14);
    EXPECT_NEAR(inner_product(dir.field, mp.data.omega()), 0.0, 1e-14);
    EXPECT_LE(divergence(dir.field).max_abs(), 1e-10);
    EXPECT_EQ(dir.profile[0], 0.0);
    EXPECT_NEAR(dir.profile[dir.profile.size() - 1], 1.0, 1e-15);

    const auto again = default_directions(mp.data);
    EXPECT_EQ(again.field.ux_data(), dir.field.ux_data());

    for (auto k : {PerturbationKind::u0, PerturbationKind::g, PerturbationKind::phi}) {
        const auto p = perturb(mp.data, k, 1e-2, dir);
        EXPECT_NEAR(observe(p.u0(), p.omega()), p.phi()[0], p.comp_tol());
    }
    const auto zero = perturb(mp.data, PerturbationKind::u0, 0.0, dir);
    EXPECT_EQ(zero.u0().ux_data(), mp.data.u0().ux_data());
}

TEST(Perturbation, ZeroPerturbationGivesZeroDeltas) {
    const auto mp = build_case("taylor-vortex-r2", 2.0, config(16, 0.01, 0.1));
    const auto a = solve_inverse_full(mp.data);
    const auto b = solve_inverse_full(perturb(mp.data, PerturbationKind::g, 0.0, default_directions(mp.data)));
    for (double v : output_deltas(a, b, 2.0).values) EXPECT_EQ(v, 0.0);
}

TEST(Perturbation, LipschitzQuotientFinitePositive) {
    const auto mp = build_case("taylor-vortex-r2", 2.0, config(16, 0.01, 0.1));
    const double k = lipschitz_quotient(mp.data);
    EXPECT_GT(k, 0.0);
    EXPECT_TRUE(std::isfinite(k));
}

TEST(StabilityExperiment, SlopesNearOneOnSmallProblem) {
    const auto mp = build_case("taylor-vortex-r2", 2.0, config(16, 0.01, 0.1));
    for (auto kind : {PerturbationKind::u0, PerturbationKind::phi}) {
        const auto ex = run_stability_experiment(mp.data, kind, {1e-1, 1e-2, 1e-3});
        EXPECT_FALSE(ex.partial);
        ASSERT_EQ(ex.deltas.size(), 3u);
        for (std::size_t q = 0; q < OutputDeltas::count; ++q) {
            EXPECT_GE(ex.slopes[q], 0.85) << to_string(kind) << " " << OutputDeltas::names[q];
            EXPECT_LE(ex.slopes[q], 1.15) << to_string(kind) << " " << OutputDeltas::names[q];
            EXPECT_TRUE(std::isfinite(ex.max_ratio[q]));
        }
    }
}

TEST(StabilityExperiment, RejectsBadGrids) {
    const auto mp = build_case("taylor-vortex-r2", 2.0, config(16, 0.01, 0.1));
    EXPECT_THROW(run_stability_experiment(mp.data, PerturbationKind::u0, {1e-2, 1e-1}), DomainError);
    EXPECT_THROW(run_stability_experiment(mp.data, PerturbationKind::u0, {1e-1, 0.0}), DomainError);
}
