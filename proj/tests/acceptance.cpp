// Acceptance suite: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Detail lines are indented.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cbf/cbf.hpp"
#include "test_support.hpp"

using namespace cbf;
using cbf::testing::random_field;
using cbf::testing::random_scalar;

namespace {

struct Outcome {
    bool passed = true;
    std::string summary;
};

std::string sci(double v, int digits = 3) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(digits) << v;
    return os.str();
}

std::string fixed(double v, int digits = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

void detail(const std::string& line) { std::cout << "    " << line << std::endl; }

/// Tracks a criterion: every check is reported and folded into the verdict.
class Verdict {
public:
    void check(bool ok, const std::string& what) {
        passed_ = passed_ && ok;
        if (!ok) ++failures_;
        detail(std::string(ok ? "ok   " : "FAIL ") + what);
    }
    Outcome outcome(std::string summary) const {
        if (failures_ > 0) summary += " (" + std::to_string(failures_) + " failed checks)";
        return {passed_, std::move(summary)};
    }

private:
    bool passed_ = true;
    int failures_ = 0;
};

PhysicalParams moderate(double r) { return default_case_params(r); }
PhysicalParams low_viscosity(double r) { return PhysicalParams{1e-4, 1.0, 1.0, r}; }

// ---------------------------------------------------------------------------

Outcome discrete_operators() {
    const Grid g(32, 32);
    std::mt19937_64 rng(20240501);
    double ibp = 0.0, idem = 0.0, orth_grad = 0.0, orth_rest = 0.0, div = 0.0;
    for (int k = 0; k < 200; ++k) {
        const VectorField v = random_field(g, rng);
        const ScalarField s = random_scalar(g, rng);
        const VectorField gs = gradient(s);
        ibp = std::max(ibp, std::abs(inner_product(gs, v) + inner_product(s, divergence(v))) /
                                (l2_norm(gs) * l2_norm(v)));
        const VectorField pv = leray_project(v);
        idem = std::max(idem, l2_norm(leray_project(pv) - pv) / l2_norm(v));
        orth_grad = std::max(orth_grad, std::abs(inner_product(pv, gs)) / (l2_norm(pv) * l2_norm(gs)));
        orth_rest = std::max(orth_rest, std::abs(inner_product(pv, v - pv)) / inner_product(v, v));
        div = std::max(div, divergence(pv).max_abs() * g.hx() / l2_norm(v));
    }
    Verdict v;
    v.check(ibp <= 1e-10, "integration by parts <grad s, v> = -<s, div v>: worst relative " + sci(ibp));
    v.check(idem <= 1e-10, "projection idempotence: worst relative " + sci(idem));
    v.check(orth_grad <= 1e-10, "projection orthogonal to gradients: worst relative " + sci(orth_grad));
    v.check(orth_rest <= 1e-10, "<Pv, v - Pv> = 0: worst relative " + sci(orth_rest));
    v.check(div <= 1e-10, "projected fields are discretely solenoidal: worst relative " + sci(div));
    return v.outcome("discrete operators, 200 random fields at 32x32");
}

// ---------------------------------------------------------------------------

double velocity_error(const std::string& name, double r, const SolverConfig& cfg) {
    const auto mp = build_case(name, r, cfg);
    const auto traj = solve_direct(mp.data.u0(), mp.f_exact, mp.data.g(), mp.data.cfg());
    return direct_error(traj, mp).max_l2;
}

Outcome direct_convergence() {
    Verdict v;
    for (const char* name : {"taylor-vortex-r1", "taylor-vortex-r2", "taylor-vortex-r3"}) {
        const double r = double(std::string(name).back() - '0');
        std::vector<double> et, eh;
        for (double dt : {0.01, 0.005, 0.0025}) et.push_back(velocity_error(name, r, {Grid(128, 128), dt, 0.1, moderate(r)}));
        for (int n : {16, 32, 64}) {
            const double dt = 4e-3 * (16.0 / n) * (16.0 / n);
            eh.push_back(velocity_error(name, r, {Grid(n, n), dt, 0.1, moderate(r)}));
        }
        for (std::size_t i = 0; i + 1 < et.size(); ++i) {
            const double q = et[i] / et[i + 1];
            v.check(q >= 1.8 && q <= 2.2, std::string(name) + " dt halving ratio " + fixed(q) + " (errors " +
                                              sci(et[i]) + " -> " + sci(et[i + 1]) + ")");
        }
        for (std::size_t i = 0; i + 1 < eh.size(); ++i) {
            const double q = eh[i] / eh[i + 1];
            v.check(q >= 3.5 && q <= 4.5, std::string(name) + " h halving ratio " + fixed(q) + " (errors " +
                                              sci(eh[i]) + " -> " + sci(eh[i + 1]) + ")");
        }
    }
    return v.outcome("direct solver first order in dt, second order in h, r in {1, 2, 3}");
}

// ---------------------------------------------------------------------------

TimeSeries sine_profile(const SolverConfig& cfg, double amplitude) {
    return TimeSeries::sample(0.0, cfg.dt, cfg.steps() + 1,
                              [&](double t) { return amplitude * std::sin(std::numbers::pi * t / cfg.T); });
}

Outcome energy_estimates() {
    Verdict v;
    double worst = 0.0;
    for (double r : {1.0, 2.0, 3.0})
        for (int n : {32, 64})
            for (double T : {0.1, 0.25}) {
                const std::string name = "taylor-vortex-r" + std::to_string(int(r));
                const auto mp = build_case(name, r, {Grid(n, n), 2e-3, T, moderate(r)});
                const auto& d = mp.data;
                const auto& f = mp.f_exact;
                const Trajectory u = solve_direct(d.u0(), f, d.g(), d.cfg());
                TimeSeries f2 = f;
                const TimeSeries bump = sine_profile(d.cfg(), 0.1);
                for (std::size_t k = 0; k < f2.size(); ++k) f2[k] *= 1.0 + bump[k];
                const Trajectory u2 = solve_direct(d.u0(), f2, d.g(), d.cfg());

                const std::string where = name + " nx=" + std::to_string(n) + " T=" + fixed(T, 2);
                const EstimateCheck checks[] = {check_energy_E1(u, f, d.g()), check_energy_E2(u, f, d.g()),
                                                check_direct_stability_E6(u2, f2, u, f, d.g())};
                for (const auto& c : checks) {
                    worst = std::max(worst, c.utilization());
                    v.check(c.passed, where + " " + c.name + " utilization " + sci(c.utilization(), 2));
                    const double scale = 0.5 * c.lhs / c.rhs;
                    EstimateCheck forced;
                    if (c.name == "energy_E1")
                        forced = check_energy_E1(u, f, d.g(), energy_slack, scale);
                    else if (c.name == "energy_E2")
                        forced = check_energy_E2(u, f, d.g(), energy_slack, scale);
                    else
                        forced = check_direct_stability_E6(u2, f2, u, f, d.g(), energy_slack, scale);
                    v.check(!forced.passed, where + " " + c.name + " forced failure is reported");
                }
            }
    return v.outcome("energy estimates E1, E2, E6 on 12 runs, worst utilization " + fixed(worst));
}

// ---------------------------------------------------------------------------

Outcome algebraic_inequalities() {
    const Grid g(32, 32);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> expo(-3.0, 1.0);
    Verdict v;
    for (double r : {1.0, 1.5, 2.0, 2.5, 3.0}) {
        int mono_fail = 0, taylor_fail = 0;
        double mono_worst = 0.0, taylor_worst = 0.0;
        for (int k = 0; k < 1000; ++k) {
            const VectorField a = random_field(g, rng, std::pow(10.0, expo(rng)), false);
            const VectorField b = random_field(g, rng, std::pow(10.0, expo(rng)), false);
            const auto m = check_monotonicity_E11(a, b, 1.0, r);
            const auto t = check_taylor_bound_3j(a, b, r);
            mono_fail += !m.passed;
            taylor_fail += !t.passed;
            mono_worst = std::max(mono_worst, m.utilization());
            taylor_worst = std::max(taylor_worst, t.utilization());
        }
        v.check(mono_fail == 0, "r=" + fixed(r, 1) + " monotonicity: " + std::to_string(mono_fail) +
                                    " failures, worst utilization " + fixed(mono_worst, 4));
        v.check(taylor_fail == 0, "r=" + fixed(r, 1) + " pointwise Taylor bound: " + std::to_string(taylor_fail) +
                                      " failures, worst utilization " + fixed(taylor_worst, 4));
    }
    return v.outcome("monotonicity and Taylor bound on 1000 random pairs per r");
}

// ---------------------------------------------------------------------------

constexpr double picard_tol = 1e-8;

bool time_dependent(const std::string& name) { return name != "taylor-vortex-frozen" && name != "decaying-source"; }

/// Everything criteria 5 to 8 need from one case.
struct InverseRun {
    std::string name;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> contraction_ratios;
    double error = 0.0;
    double error_half_dt = 0.0;
    std::size_t iterations_half_dt = 0;
    double fixed_point_residual = 0.0;
    double second_start_distance = 0.0;
    bool second_start_converged = false;
    double marching_difference = 0.0;
    double observation_gap = 0.0;
    double observation_gap_half_dt = 0.0;
    double seconds = 0.0;
};

double max_observation_gap(const Trajectory& u, const InverseProblemData& d) {
    double m = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) m = std::max(m, std::abs(observe(u[n], d.omega()) - d.phi()[n]));
    return m;
}

InverseRun run_inverse_case(const std::string& name) {
    const auto t0 = std::chrono::steady_clock::now();
    InverseRun run;
    run.name = name;
    const double r = 2.0;
    const PicardOptions opt{picard_tol, 100, 1.0, std::nullopt};
    {
        const auto mp = build_case(name, r, {Grid(64, 64), 1e-3, 0.25, low_viscosity(r)});
        const auto& d = mp.data;
        auto [f, rep] = solve_inverse_picard(d, opt);
        run.error = inverse_error(f, mp);
        run.fixed_point_residual = l2_time_norm(apply_A(f, d) - f);
        PicardOptions other = opt;
        other.start = rep.ball_center + sine_profile(d.cfg(), 0.5 * opt.radius);
        const auto [f2, rep2] = solve_inverse_picard(d, other);
        run.second_start_distance = l2_time_norm(f2 - f);
        run.second_start_converged = rep2.converged;
        const TimeSeries fm = solve_inverse_marching(d);
        run.marching_difference = l2_time_norm(f - fm) / l2_time_norm(f);
        run.observation_gap = max_observation_gap(solve_direct(d.u0(), f, d.g(), d.cfg()), d);
        run.iterations = rep.iterations();
        run.converged = rep.converged;
        run.contraction_ratios = rep.contraction_ratios;
    }
    {
        const auto mp = build_case(name, r, {Grid(64, 64), 5e-4, 0.25, low_viscosity(r)});
        const auto [f, rep] = solve_inverse_picard(mp.data, opt);
        run.error_half_dt = rep.converged ? inverse_error(f, mp) : std::numeric_limits<double>::infinity();
        run.iterations_half_dt = rep.iterations();
        run.observation_gap_half_dt =
            max_observation_gap(solve_direct(mp.data.u0(), f, mp.data.g(), mp.data.cfg()), mp.data);
    }
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    detail(name + ": " + std::to_string(run.iterations) + " Picard iterations, " + fixed(run.seconds, 1) +
           " s");
    return run;
}

Outcome inverse_recovery(const std::vector<InverseRun>& runs) {
    Verdict v;
    for (const auto& run : runs) {
        const auto& q = run.contraction_ratios;
        const double worst = q.empty() ? 0.0 : *std::max_element(q.begin(), q.end());
        v.check(run.converged && run.iterations <= 25,
                run.name + " converged in " + std::to_string(run.iterations) + " iterations");
        v.check(run.converged && worst < 1.0, run.name + " residual ratios all below one, worst " + fixed(worst));
        v.check(run.error <= 1e-2, run.name + " relative L2 source error " + sci(run.error));
        v.check(run.seconds < 600.0, run.name + " runtime " + fixed(run.seconds, 1) + " s");
        const double ratio = run.error / run.error_half_dt;
        if (time_dependent(run.name))
            v.check(ratio >= 1.6, run.name + " dt halving error ratio " + fixed(ratio) + " (error at dt/2 " +
                                      sci(run.error_half_dt) + ")");
        else
            detail("n/a  " + run.name + " dt halving error ratio " + fixed(ratio) +
                   " (stationary profile, no time discretization error to halve)");
    }
    return v.outcome("source recovery at nx=64, dt=1e-3, T=0.25, mu=1e-4");
}

Outcome fixed_point(const std::vector<InverseRun>& runs) {
    Verdict v;
    for (const auto& run : runs) {
        v.check(run.fixed_point_residual <= 10.0 * picard_tol,
                run.name + " ||A f* - f*|| = " + sci(run.fixed_point_residual));
        v.check(run.second_start_converged && run.second_start_distance <= 100.0 * picard_tol,
                run.name + " second start lands " + sci(run.second_start_distance) + " from f*");
    }
    return v.outcome("fixed point residual within 10 tol, starts agree within 100 tol");
}

Outcome overdetermination(const std::vector<InverseRun>& runs) {
    Verdict v;
    for (const auto& run : runs) {
        v.check(run.observation_gap <= 1e-3, run.name + " dt=1e-3 max |<u, omega> - phi| = " + sci(run.observation_gap));
        v.check(run.observation_gap_half_dt <= 1e-3,
                run.name + " dt=5e-4 max |<u, omega> - phi| = " + sci(run.observation_gap_half_dt));
    }
    return v.outcome("flow driven by the recovered source reproduces the measurement");
}

Outcome cross_solver(const std::vector<InverseRun>& runs) {
    Verdict v;
    for (const auto& run : runs)
        v.check(run.marching_difference <= 1e-6,
                run.name + " Picard vs marching relative difference " + sci(run.marching_difference));
    for (double r : {1.5, 2.5}) {
        const auto mp = build_case("taylor-vortex", r, {Grid(64, 64), 1e-3, 0.25, low_viscosity(r)});
        const auto [f, rep] = solve_inverse_picard(mp.data, {picard_tol, 100, 1.0, std::nullopt});
        const double diff = l2_time_norm(f - solve_inverse_marching(mp.data)) / l2_time_norm(f);
        v.check(rep.converged && diff <= 1e-6,
                "taylor-vortex r=" + fixed(r, 1) + " Picard vs marching relative difference " + sci(diff));
    }
    return v.outcome("Picard and marching reconstructions agree");
}

// ---------------------------------------------------------------------------

Outcome lipschitz_stability() {
    const auto mp = build_case("taylor-vortex-r2", 2.0, {Grid(32, 32), 2e-3, 0.25, moderate(2.0)});
    Verdict v;
    for (auto kind : {PerturbationKind::u0, PerturbationKind::g, PerturbationKind::phi}) {
        const auto ex = run_stability_experiment(mp.data, kind);
        v.check(!ex.partial, std::string(to_string(kind)) + " every perturbed problem converged");
        for (std::size_t q = 0; q < OutputDeltas::count; ++q) {
            const double s = ex.slopes[q];
            v.check(s >= 0.85 && s <= 1.15, std::string(to_string(kind)) + " " + OutputDeltas::names[q] +
                                                " slope " + fixed(s, 4));
        }
    }
    return v.outcome("log-log slopes of the five output deltas, eps 1e-1 .. 1e-4");
}

// ---------------------------------------------------------------------------

Outcome admissibility_diagnostics() {
    Verdict v;
    const std::vector<double> Ts{0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.025};
    for (double r : {2.25, 2.5, 2.75}) {
        std::vector<double> m1, kappa, first_ratio;
        DataNorms smallest;
        for (double T : Ts) {
            const auto mp = build_case("decaying-source", r, {Grid(32, 32), 5e-3, T, moderate(r)});
            m1.push_back(*admissibility(mp.data).m1);
            kappa.push_back(lipschitz_quotient(mp.data));
            const auto [f, rep] = solve_inverse_picard(mp.data, {picard_tol, 60, 1.0, std::nullopt});
            first_ratio.push_back(rep.contraction_ratios.empty() ? 0.0 : rep.contraction_ratios.front());
            smallest = data_norms(mp.data);
        }
        bool monotone = true;
        for (std::size_t i = 1; i < m1.size(); ++i) monotone = monotone && m1[i] < m1[i - 1];
        v.check(monotone, "r=" + fixed(r, 2) + " m1 decreases with T: " + sci(m1.front()) + " at T=" +
                              fixed(Ts.front(), 3) + " to " + sci(m1.back()) + " at T=" + fixed(Ts.back(), 3));
        // with the data fixed, m1 decays like T^{min(1, (3-r)/(r-1))/2}
        double prev = m1.back();
        bool limit = true;
        std::vector<double> tiny_T, tiny_m1;
        for (double T = 1e-3; T >= 1e-300; T *= 1e-3) {
            smallest.T = T;
            const double m = *admissibility(smallest, r, 1.0).m1;
            limit = limit && m < prev;
            prev = m;
            tiny_T.push_back(T);
            tiny_m1.push_back(m);
        }
        const std::size_t tail = tiny_T.size() - 10;
        const double rate = loglog_slope({tiny_T.begin() + tail, tiny_T.end()}, {tiny_m1.begin() + tail, tiny_m1.end()});
        const double expected = 0.5 * std::min(1.0, (3.0 - r) / (r - 1.0));
        v.check(limit && std::abs(rate - expected) <= 1e-3 * expected,
                "r=" + fixed(r, 2) + " m1 keeps decreasing to " + sci(prev) + " at T=" + sci(tiny_T.back(), 0) +
                    " with the shortest run's data, decay rate " + fixed(rate, 4) + " (expected " +
                    fixed(expected, 4) + ")");

        // the measured contraction lies below one exactly on an initial range of T
        std::size_t below = 0;
        while (below < Ts.size() && kappa[Ts.size() - 1 - below] < 1.0) ++below;
        bool tail_above = true;
        for (std::size_t i = 0; i + below < Ts.size(); ++i) tail_above = tail_above && kappa[i] >= 1.0;
        const bool threshold = below > 0 && below < Ts.size() && tail_above;
        std::string where = "none";
        if (threshold)
            where = "between T=" + fixed(Ts[Ts.size() - below], 3) + " and T=" + fixed(Ts[Ts.size() - below - 1], 3);
        v.check(threshold, "r=" + fixed(r, 2) + " operator Lipschitz quotient crosses 1 once, " + where);
        std::ostringstream row;
        row << "r=" << fixed(r, 2) << " T, quotient, first Picard ratio:";
        for (std::size_t i = Ts.size(); i-- > 0;)
            row << "  " << fixed(Ts[i], 3) << "," << fixed(kappa[i]) << "," << fixed(first_ratio[i]);
        detail(row.str());
    }
    return v.outcome("m1 monotone to 0 as T -> 0 and a contraction threshold T' in the sweep");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Acceptance suite for the convective Brinkman-Forchheimer solver"};
    std::vector<int> selected;
    cli.add_option("criteria", selected, "criteria to run (default: all)")->check(CLI::Range(1, 10));
    CLI11_PARSE(cli, argc, argv);
    std::set<int> want(selected.begin(), selected.end());
    if (want.empty())
        for (int k = 1; k <= 10; ++k) want.insert(k);

    std::vector<InverseRun> runs;
    auto inverse_runs = [&]() -> const std::vector<InverseRun>& {
        if (runs.empty())
            for (const auto& name : case_catalog()) runs.push_back(run_inverse_case(name));
        return runs;
    };

    const std::map<int, std::function<Outcome()>> criteria{
        {1, discrete_operators},
        {2, direct_convergence},
        {3, energy_estimates},
        {4, algebraic_inequalities},
        {5, [&] { return inverse_recovery(inverse_runs()); }},
        {6, [&] { return fixed_point(inverse_runs()); }},
        {7, [&] { return overdetermination(inverse_runs()); }},
        {8, [&] { return cross_solver(inverse_runs()); }},
        {9, lipschitz_stability},
        {10, admissibility_diagnostics},
    };

    int failed = 0;
    for (int k : want) {
        std::cout << "criterion " << k << std::endl;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria.at(k)();
        } catch (const std::exception& e) {
            out = {false, std::string("aborted: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !out.passed;
        std::cout << (out.passed ? "PASS" : "FAIL") << " " << std::setw(2) << k << "  " << out.summary << " ["
                  << fixed(secs, 1) << " s]" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
