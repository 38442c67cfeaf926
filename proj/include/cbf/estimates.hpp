#pragma once

// Discrete checks of the energy, stability and monotonicity inequalities, and
// Lipschitz experiments for the inverse problem. Time integrals use the
// right-endpoint rectangle rule of the stepper.

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cbf/direct_solver.hpp"
#include "cbf/errors.hpp"
#include "cbf/fields.hpp"
#include "cbf/inverse_solver.hpp"

namespace cbf {

struct EstimateCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack_allowed = 0.0;
    bool passed = false;
    std::string context;

    /// Fraction of the allowed bound used, lhs / (rhs (1 + slack)).
    double utilization() const {
        const double bound = rhs * (1.0 + slack_allowed);
        if (bound > 0.0) return lhs / bound;
        return lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
};

inline EstimateCheck make_check(std::string name, double lhs, double rhs, double slack, std::string context = {}) {
    return {std::move(name), lhs, rhs, slack, lhs <= rhs * (1.0 + slack), std::move(context)};
}

inline constexpr double energy_slack = 0.05;
inline constexpr double algebraic_tolerance = 1e-12;

namespace detail {

inline double sup_l2(const FieldSeries& g) {
    double m = 0.0;
    for (const auto& frame : g.frames) m = std::max(m, l2_norm(frame));
    return m;
}

inline std::string run_context(const SolverConfig& cfg) {
    std::ostringstream os;
    os << "nx=" << cfg.grid.nx() << " ny=" << cfg.grid.ny() << " dt=" << cfg.dt << " T=" << cfg.T
       << " mu=" << cfg.params.mu << " alpha=" << cfg.params.alpha << " beta=" << cfg.params.beta
       << " r=" << cfg.params.r;
    return os.str();
}

}  // namespace detail

/// sup_n ||u_n|| <= ||u_0|| + sqrt(T) sup_n ||g_n|| ||f||_{L2(0,T)}.
inline EstimateCheck check_energy_E1(const Trajectory& traj, const TimeSeries& f, const FieldSeries& g,
                                     double slack = energy_slack, double rhs_scale = 1.0) {
    check_source_sampling(f, g, traj.config);
    double lhs = 0.0;
    for (const auto& u : traj.snapshots) lhs = std::max(lhs, l2_norm(u));
    const double rhs = l2_norm(traj[0]) + std::sqrt(traj.config.T) * detail::sup_l2(g) * l2_time_norm(f);
    return make_check("energy_E1", lhs, rhs_scale * rhs, slack, detail::run_context(traj.config));
}

/// At every step n
///   ||u_n||^2 + sum_k dt (2 mu |u_k|_V^2 + alpha ||u_k||^2 + 2 beta ||u_k||_{r+1}^{r+1})
///     <= ||u_0||^2 + (1/alpha) sum_k dt f_k^2 ||g_k||^2.
/// Reports the step with the largest ratio of the two sides.
inline EstimateCheck check_energy_E2(const Trajectory& traj, const TimeSeries& f, const FieldSeries& g,
                                     double slack = energy_slack, double rhs_scale = 1.0) {
    check_source_sampling(f, g, traj.config);
    const auto& p = traj.config.params;
    const double dt = traj.config.dt;
    const double u0sq = std::pow(l2_norm(traj[0]), 2);
    double dissipated = 0.0, supplied = 0.0;
    double worst_lhs = u0sq, worst_rhs = rhs_scale * u0sq, worst_ratio = -1.0;
    std::size_t worst_n = 0;
    for (std::size_t n = 1; n < traj.size(); ++n) {
        const VelocityField& u = traj[n];
        const double l2 = l2_norm(u);
        dissipated += dt * (2.0 * p.mu * std::pow(h1_seminorm(u), 2) + p.alpha * l2 * l2 +
                            2.0 * p.beta * std::pow(lp_norm(u, p.r + 1.0), p.r + 1.0));
        supplied += dt * f[n] * f[n] * std::pow(l2_norm(g[n]), 2) / p.alpha;
        const double lhs = l2 * l2 + dissipated;
        const double rhs = rhs_scale * (u0sq + supplied);
        const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst_lhs = lhs;
            worst_rhs = rhs;
            worst_n = n;
        }
    }
    return make_check("energy_E2", worst_lhs, worst_rhs, slack,
                      detail::run_context(traj.config) + " step=" + std::to_string(worst_n));
}

/// Two runs with the same g:
///   sup ||w||^2 + mu int |w|_V^2 + alpha int ||w||^2 + beta 2^{2-r} int ||w||_{r+1}^{r+1}
///     <= (||w_0||^2 + (1/alpha) sup ||g||^2 ||f1 - f2||^2) exp((2/mu) int |u2|_V^2),
/// where w = u1 - u2.
inline EstimateCheck check_direct_stability_E6(const Trajectory& run1, const TimeSeries& f1, const Trajectory& run2,
                                               const TimeSeries& f2, const FieldSeries& g,
                                               double slack = energy_slack, double rhs_scale = 1.0) {
    check_source_sampling(f1, g, run1.config);
    check_source_sampling(f2, g, run2.config);
    if (run1.size() != run2.size() || !(run1.config.grid == run2.config.grid))
        throw DimensionError("stability check needs runs on the same grid and time grid");
    const auto& p = run2.config.params;
    const double dt = run2.config.dt;
    double sup = 0.0, integral = 0.0, gronwall = 0.0;
    for (std::size_t n = 0; n < run1.size(); ++n) {
        const VelocityField w = run1[n] - run2[n];
        const double l2 = l2_norm(w);
        sup = std::max(sup, l2 * l2);
        if (n == 0) continue;
        integral += dt * (p.mu * std::pow(h1_seminorm(w), 2) + p.alpha * l2 * l2 +
                          p.beta * std::pow(2.0, 2.0 - p.r) * std::pow(lp_norm(w, p.r + 1.0), p.r + 1.0));
        gronwall += dt * std::pow(h1_seminorm(run2[n]), 2);
    }
    const double data = std::pow(l2_norm(run1[0] - run2[0]), 2) +
                        std::pow(detail::sup_l2(g) * l2_time_norm(f1 - f2), 2) / p.alpha;
    const double rhs = rhs_scale * data * std::exp(2.0 / p.mu * gronwall);
    return make_check("direct_stability_E6", sup + integral, rhs, slack, detail::run_context(run2.config));
}

namespace detail {

using Point = std::array<double, 2>;

/// Face values averaged to cell centres.
inline std::vector<Point> cell_vectors(const VectorField& v) {
    const Grid& g = v.grid();
    std::vector<Point> out;
    out.reserve(g.cells());
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            out.push_back({0.5 * (v.ux(i, j) + v.ux(i + 1, j)), 0.5 * (v.uy(i, j) + v.uy(i, j + 1))});
    return out;
}

inline Point damping(const Point& a, double r) {
    const double m = std::pow(std::hypot(a[0], a[1]), r - 1.0);
    return {m * a[0], m * a[1]};
}

}  // namespace detail

/// beta (h(v1) - h(v2), v1 - v2) >= beta 2^{1-r} ||v1 - v2||_{r+1}^{r+1}, with
/// h(v) = |v|^{r-1} v evaluated on cell-centred vectors.
inline EstimateCheck check_monotonicity_E11(const VectorField& v1, const VectorField& v2, double beta, double r) {
    v1.check_grid(v2);
    if (!(r >= 1.0)) throw DomainError("monotonicity needs r >= 1");
    const auto a = detail::cell_vectors(v1), b = detail::cell_vectors(v2);
    const double area = v1.grid().hx() * v1.grid().hy();
    double pairing = 0.0, power = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const auto ha = detail::damping(a[c], r), hb = detail::damping(b[c], r);
        const double dx = a[c][0] - b[c][0], dy = a[c][1] - b[c][1];
        pairing += (ha[0] - hb[0]) * dx + (ha[1] - hb[1]) * dy;
        power += std::pow(std::hypot(dx, dy), r + 1.0);
    }
    const double lhs = beta * std::pow(2.0, 1.0 - r) * power * area;
    const double rhs = beta * pairing * area;
    std::ostringstream os;
    os << "r=" << r << " beta=" << beta;
    return make_check("monotonicity_E11", lhs, rhs, algebraic_tolerance, os.str());
}

/// |h(a) - h(b)| <= r (|a| + |b|)^{r-1} |a - b| at every cell; reports the
/// cell closest to violation.
inline EstimateCheck check_taylor_bound_3j(const VectorField& v1, const VectorField& v2, double r) {
    v1.check_grid(v2);
    if (!(r >= 1.0)) throw DomainError("Taylor bound needs r >= 1");
    const auto a = detail::cell_vectors(v1), b = detail::cell_vectors(v2);
    double worst_lhs = 0.0, worst_rhs = 0.0, worst_ratio = -1.0;
    bool ok = true;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const auto ha = detail::damping(a[c], r), hb = detail::damping(b[c], r);
        const double lhs = std::hypot(ha[0] - hb[0], ha[1] - hb[1]);
        const double rhs = r * std::pow(std::hypot(a[c][0], a[c][1]) + std::hypot(b[c][0], b[c][1]), r - 1.0) *
                           std::hypot(a[c][0] - b[c][0], a[c][1] - b[c][1]);
        ok = ok && lhs <= rhs * (1.0 + algebraic_tolerance);
        const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst_lhs = lhs;
            worst_rhs = rhs;
        }
    }
    EstimateCheck check = make_check("taylor_bound_3j", worst_lhs, worst_rhs, algebraic_tolerance,
                                     "r=" + std::to_string(r));
    check.passed = ok;
    return check;
}

/// Difference quotient ||A(c + s) - A(c)|| / ||s|| of the operator at the
/// ball centre c, along the constant shift s = delta max(||c||, 1).
inline double lipschitz_quotient(const InverseProblemData& data, double delta = 1e-3) {
    const TimeSeries c = ball_center(data);
    const double step = delta * std::max(l2_time_norm(c), 1.0);
    TimeSeries shifted = c;
    for (std::size_t n = 0; n < shifted.size(); ++n) shifted[n] += step;
    return l2_time_norm(apply_A(shifted, data) - apply_A(c, data)) / l2_time_norm(shifted - c);
}

enum class PerturbationKind { u0, g, phi };

inline const char* to_string(PerturbationKind k) {
    switch (k) {
        case PerturbationKind::u0: return "u0";
        case PerturbationKind::g: return "g";
        case PerturbationKind::phi: return "phi";
    }
    return "?";
}

inline PerturbationKind parse_perturbation(const std::string& s) {
    if (s == "u0") return PerturbationKind::u0;
    if (s == "g") return PerturbationKind::g;
    if (s == "phi") return PerturbationKind::phi;
    throw DomainError("unknown perturbation kind '" + s + "'");
}

/// Differences between two solutions of the inverse problem.
struct OutputDeltas {
    static constexpr std::size_t count = 5;
    static constexpr std::array<const char*, count> names{"velocity_sup_H", "velocity_L2V", "velocity_Lr1",
                                                          "pressure", "source"};
    std::array<double, count> values{};  ///< in the order of names
};

/// An inverse solve together with the flow and pressure it produces.
struct InverseSolution {
    TimeSeries f;
    Trajectory u;
    std::vector<ScalarField> p;
    IterationReport report;
};

inline InverseSolution solve_inverse_full(const InverseProblemData& data, const PicardOptions& opt = {}) {
    auto [f, rep] = solve_inverse_picard(data, opt);
    Trajectory u = solve_direct(data.u0(), f, data.g(), data.cfg());
    auto p = recover_pressures(u, f, data.g());
    return {std::move(f), std::move(u), std::move(p), std::move(rep)};
}

/// The five norms of the difference of two inverse solutions:
/// sup_t ||du||_H, ||du||_{L2(0,T;V)}, ||du||_{L^{r+1}(0,T;L^{r+1})},
/// ||dp||_{L^{(r+1)/r}(0,T;L2)} and ||df||_{L2(0,T)}.
inline OutputDeltas output_deltas(const InverseSolution& a, const InverseSolution& b, double r) {
    if (a.u.size() != b.u.size()) throw DimensionError("solutions on different time grids");
    const double dt = a.u.config.dt;
    const double q = (r + 1.0) / r;
    double sup = 0.0, v = 0.0, lr = 0.0, pr = 0.0;
    for (std::size_t n = 0; n < a.u.size(); ++n) {
        const VelocityField w = a.u[n] - b.u[n];
        sup = std::max(sup, l2_norm(w));
        if (n == 0) continue;
        v += dt * std::pow(h1_seminorm(w), 2);
        lr += dt * std::pow(lp_norm(w, r + 1.0), r + 1.0);
        pr += dt * std::pow(l2_norm(a.p[n] - b.p[n]), q);
    }
    OutputDeltas d;
    d.values = {sup, std::sqrt(v), std::pow(lr, 1.0 / (r + 1.0)), std::pow(pr, 1.0 / q), l2_time_norm(a.f - b.f)};
    return d;
}

/// Fixed smooth perturbation directions. The velocity-type direction is
/// solenoidal and orthogonal to omega, so compatibility and g1 are preserved.
struct PerturbationDirections {
    VelocityField field;  ///< unit H norm
    TimeSeries profile;   ///< vanishes at t = 0, unit sup norm
};

inline PerturbationDirections default_directions(const InverseProblemData& data) {
    using std::numbers::pi;
    const Grid& g = data.cfg().grid;
    auto ux = [](double x, double y) {
        const double s = std::sin(2.0 * pi * x);
        return s * s * 2.0 * pi * std::sin(4.0 * pi * y);
    };
    auto uy = [](double x, double y) {
        const double s = std::sin(2.0 * pi * y);
        return -2.0 * pi * std::sin(4.0 * pi * x) * s * s;
    };
    VelocityField d = leray_project(sample_vector(g, ux, uy));
    const VelocityField& w = data.omega();
    d.axpy(-inner_product(d, w) / inner_product(w, w), w);
    d = (1.0 / l2_norm(d)) * d;
    const double T = data.cfg().T;
    TimeSeries prof = TimeSeries::sample(0.0, data.cfg().dt, data.cfg().steps() + 1,
                                         [T](double t) { return std::sin(0.5 * pi * t / T); });
    return {std::move(d), std::move(prof)};
}

/// Data with one datum moved by eps along the fixed direction, scaled by the
/// size of that datum.
inline InverseProblemData perturb(const InverseProblemData& base, PerturbationKind kind, double eps,
                                  const PerturbationDirections& dir) {
    VelocityField u0 = base.u0();
    FieldSeries g = base.g();
    TimeSeries phi = base.phi();
    switch (kind) {
        case PerturbationKind::u0: {
            const double scale = std::max(l2_norm(u0), 1e-300);
            u0.axpy(eps * scale, dir.field);
            break;
        }
        case PerturbationKind::g: {
            const double scale = detail::sup_l2(g);
            for (auto& frame : g.frames) frame.axpy(eps * scale, dir.field);
            break;
        }
        case PerturbationKind::phi: {
            double scale = 0.0;
            for (std::size_t n = 0; n < phi.size(); ++n) scale = std::max(scale, std::abs(phi[n]));
            for (std::size_t n = 0; n < phi.size(); ++n) phi[n] += eps * scale * dir.profile[n];
            break;
        }
    }
    return InverseProblemData(std::move(u0), std::move(g), base.omega(), std::move(phi), base.cfg(),
                              base.g0_min(), base.comp_tol());
}

struct StabilityExperiment {
    PerturbationKind kind = PerturbationKind::u0;
    std::vector<double> eps;                          ///< positive, decreasing
    std::vector<std::optional<OutputDeltas>> deltas;  ///< empty where the perturbed solve failed
    std::array<double, OutputDeltas::count> slopes{};
    std::array<double, OutputDeltas::count> max_ratio{};  ///< max over eps of delta / eps
    bool partial = false;
};

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= double(x.size());
    my /= double(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

inline const std::vector<double>& default_eps_grid() {
    static const std::vector<double> grid{1e-1, 1e-2, 1e-3, 1e-4};
    return grid;
}

/// Perturbs one datum over eps_grid, re-solves each inverse problem in
/// parallel and fits the growth of every output delta against eps. Members
/// whose solve fails or does not converge make the experiment partial.
inline StabilityExperiment run_stability_experiment(const InverseProblemData& base, PerturbationKind kind,
                                                    const std::vector<double>& eps_grid = default_eps_grid(),
                                                    const PicardOptions& opt = {1e-10, 100, 1.0, std::nullopt}) {
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > 0.0)) throw DomainError("perturbation sizes must be positive");
        if (i > 0 && !(eps_grid[i] < eps_grid[i - 1])) throw DomainError("perturbation sizes must decrease");
    }
    const InverseSolution ref = solve_inverse_full(base, opt);
    if (!ref.report.converged) throw NumericalError("base inverse problem did not converge", ref.report.relative_residuals.back());
    const PerturbationDirections dir = default_directions(base);
    const double r = base.params().r;

    std::vector<std::future<std::optional<OutputDeltas>>> jobs;
    for (double eps : eps_grid) {
        jobs.push_back(std::async(std::launch::async, [&, eps]() -> std::optional<OutputDeltas> {
            try {
                const InverseSolution sol = solve_inverse_full(perturb(base, kind, eps, dir), opt);
                if (!sol.report.converged) return std::nullopt;
                return output_deltas(sol, ref, r);
            } catch (const Error&) {
                return std::nullopt;
            }
        }));
    }

    StabilityExperiment ex;
    ex.kind = kind;
    ex.eps = eps_grid;
    for (auto& j : jobs) ex.deltas.push_back(j.get());
    for (std::size_t k = 0; k < OutputDeltas::count; ++k) {
        std::vector<double> xs, ys;
        double mr = 0.0;
        for (std::size_t i = 0; i < ex.eps.size(); ++i) {
            if (!ex.deltas[i]) continue;
            const double d = ex.deltas[i]->values[k];
            mr = std::max(mr, d / ex.eps[i]);
            if (d > 0.0) {
                xs.push_back(ex.eps[i]);
                ys.push_back(d);
            }
        }
        ex.max_ratio[k] = mr;
        ex.slopes[k] = xs.size() >= 2 ? loglog_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
    }
    ex.partial = std::any_of(ex.deltas.begin(), ex.deltas.end(), [](const auto& d) { return !d.has_value(); });
    return ex;
}

}  // namespace cbf
