#pragma once

// Exact solutions for verification. Velocities derive from a separable stream
// function psi = A X(x) Y(y) tau(t) with X = sin^2(pi x), Y = sin^2(pi y), so
// u = (psi_y, -psi_x) is solenoidal with no-slip walls; the forcing g is chosen
// so that the momentum equation holds exactly for a prescribed f(t) and p.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cbf/direct_solver.hpp"
#include "cbf/errors.hpp"
#include "cbf/fields.hpp"
#include "cbf/inverse_solver.hpp"

namespace cbf {

using Vec2 = std::array<double, 2>;

/// Analytic closures of one manufactured problem.
struct ManufacturedCase {
    std::string name;
    double r = 2.0;
    double amplitude = 0.1;           ///< stream-function amplitude A
    double pressure_amplitude = 0.1;  ///< p = P cos(pi x) cos(pi y) tau(t)
    PhysicalParams params;
    /// Scales the x-component of the measurement weight so that its samples are
    /// discretely solenoidal on grids with hx != hy; 1 on square grids.
    double omega_aspect = 1.0;

    std::function<double(double)> tau;   ///< time profile of psi and p
    std::function<double(double)> dtau;  ///< its derivative
    std::function<double(double)> f;     ///< source amplitude
    std::function<double(double)> df;

    double psi(double x, double y, double t) const { return amplitude * X(x) * X(y) * tau(t); }
    double pressure(double x, double y, double t) const {
        using std::numbers::pi;
        return pressure_amplitude * std::cos(pi * x) * std::cos(pi * y) * tau(t);
    }

    Vec2 velocity(double x, double y, double t) const {
        const double s = amplitude * tau(t);
        return {s * X(x) * X1(y), -s * X1(x) * X(y)};
    }
    Vec2 velocity_dt(double x, double y, double t) const {
        const double s = amplitude * dtau(t);
        return {s * X(x) * X1(y), -s * X1(x) * X(y)};
    }
    Vec2 laplacian(double x, double y, double t) const {
        const double s = amplitude * tau(t);
        return {s * (X2(x) * X1(y) + X(x) * X3(y)), -s * (X3(x) * X(y) + X1(x) * X2(y))};
    }
    Vec2 advection(double x, double y, double t) const {
        const double s = amplitude * tau(t);
        const double s2 = s * s;
        return {s2 * X(x) * X1(x) * (X1(y) * X1(y) - X(y) * X2(y)),
                s2 * X(y) * X1(y) * (X1(x) * X1(x) - X(x) * X2(x))};
    }
    Vec2 pressure_gradient(double x, double y, double t) const {
        using std::numbers::pi;
        const double s = pressure_amplitude * tau(t) * pi;
        return {-s * std::sin(pi * x) * std::cos(pi * y), -s * std::cos(pi * x) * std::sin(pi * y)};
    }
    /// Measurement weight: curl of sin^2(pi x) sin^2(pi y).
    static Vec2 omega(double x, double y) { return {X(x) * X1(y), -X1(x) * X(y)}; }
    /// The weight actually sampled and measured against.
    Vec2 weight(double x, double y) const { return {omega_aspect * X(x) * X1(y), -X1(x) * X(y)}; }

    /// Forcing field with f(t) g = u_t - mu lap u + (u.grad)u + alpha u + beta |u|^{r-1} u + grad p.
    Vec2 forcing(double x, double y, double t) const {
        const Vec2 u = velocity(x, y, t), ut = velocity_dt(x, y, t), lap = laplacian(x, y, t),
                   adv = advection(x, y, t), gp = pressure_gradient(x, y, t);
        const double mag = std::hypot(u[0], u[1]);
        const double damp = mag > 0.0 ? std::pow(mag, r - 1.0) : (r == 1.0 ? 1.0 : 0.0);
        const double ft = f(t);
        Vec2 g{};
        for (int c = 0; c < 2; ++c)
            g[c] = (ut[c] - params.mu * lap[c] + adv[c] + params.alpha * u[c] + params.beta * damp * u[c] + gp[c]) / ft;
        return g;
    }

    /// Pointwise momentum residual f g - (u_t - mu lap u + ...) with derivatives
    /// of the velocity taken by central differences of step h instead of the
    /// hand-coded formulas.
    Vec2 finite_difference_residual(double x, double y, double t, double h) const {
        auto u = [&](double a, double b, double c) { return velocity(a, b, c); };
        const Vec2 c0 = u(x, y, t);
        const Vec2 xp = u(x + h, y, t), xm = u(x - h, y, t), yp = u(x, y + h, t), ym = u(x, y - h, t);
        const Vec2 tp = u(x, y, t + h), tm = u(x, y, t - h);
        const double ph = pressure(x + h, y, t) - pressure(x - h, y, t);
        const double pv = pressure(x, y + h, t) - pressure(x, y - h, t);
        const Vec2 gp{ph / (2 * h), pv / (2 * h)};
        const Vec2 g = forcing(x, y, t);
        const double mag = std::hypot(c0[0], c0[1]);
        const double damp = mag > 0.0 ? std::pow(mag, r - 1.0) : (r == 1.0 ? 1.0 : 0.0);
        Vec2 res{};
        for (int c = 0; c < 2; ++c) {
            const double ut = (tp[c] - tm[c]) / (2 * h);
            const double lap = (xp[c] - 2 * c0[c] + xm[c] + yp[c] - 2 * c0[c] + ym[c]) / (h * h);
            const double adv = c0[0] * (xp[c] - xm[c]) / (2 * h) + c0[1] * (yp[c] - ym[c]) / (2 * h);
            res[c] = f(t) * g[c] -
                     (ut - params.mu * lap + adv + params.alpha * c0[c] + params.beta * damp * c0[c] + gp[c]);
        }
        return res;
    }

    /// Divergence of the velocity by central differences.
    double finite_difference_divergence(double x, double y, double t, double h) const {
        return (velocity(x + h, y, t)[0] - velocity(x - h, y, t)[0]) / (2 * h) +
               (velocity(x, y + h, t)[1] - velocity(x, y - h, t)[1]) / (2 * h);
    }

    /// phi(t) = int u . omega by composite Gauss-Legendre quadrature.
    double measurement(double t) const {
        return integrate([&](double x, double y) {
            const Vec2 u = velocity(x, y, t), w = weight(x, y);
            return u[0] * w[0] + u[1] * w[1];
        });
    }
    double measurement_dt(double t) const {
        return integrate([&](double x, double y) {
            const Vec2 u = velocity_dt(x, y, t), w = weight(x, y);
            return u[0] * w[0] + u[1] * w[1];
        });
    }

    /// Composite 4-point Gauss-Legendre rule on an 8x8 panel partition of the square.
    template <class F>
    static double integrate(F&& fn) {
        static constexpr std::array<double, 4> nodes{-0.8611363115940526, -0.3399810435848563,
                                                     0.3399810435848563, 0.8611363115940526};
        static constexpr std::array<double, 4> weights{0.3478548451374538, 0.6521451548625461,
                                                       0.6521451548625461, 0.3478548451374538};
        constexpr int panels = 8;
        const double hp = 1.0 / panels;
        double acc = 0.0;
        for (int pj = 0; pj < panels; ++pj)
            for (int qj = 0; qj < 4; ++qj) {
                const double y = (pj + 0.5 * (1.0 + nodes[qj])) * hp;
                for (int pi_ = 0; pi_ < panels; ++pi_)
                    for (int qi = 0; qi < 4; ++qi) {
                        const double x = (pi_ + 0.5 * (1.0 + nodes[qi])) * hp;
                        acc += weights[qi] * weights[qj] * fn(x, y);
                    }
            }
        return acc * 0.25 * hp * hp;
    }

    // X = sin^2(pi s) and its derivatives
    static double X(double s) {
        const double v = std::sin(std::numbers::pi * s);
        return v * v;
    }
    static double X1(double s) { return std::numbers::pi * std::sin(2.0 * std::numbers::pi * s); }
    static double X2(double s) {
        using std::numbers::pi;
        return 2.0 * pi * pi * std::cos(2.0 * pi * s);
    }
    static double X3(double s) {
        using std::numbers::pi;
        return -4.0 * pi * pi * pi * std::sin(2.0 * pi * s);
    }
};

/// Default physical coefficients of the catalog cases.
inline PhysicalParams default_case_params(double r) { return PhysicalParams{0.05, 0.5, 0.5, r}; }

inline std::vector<std::string> case_catalog() {
    return {"taylor-vortex", "taylor-vortex-r1", "taylor-vortex-r2", "taylor-vortex-r3",
            "taylor-vortex-frozen", "decaying-source"};
}

/// Closures of a catalog case. Names with a fixed exponent ignore r.
inline ManufacturedCase make_case(const std::string& name, double r, const PhysicalParams& params) {
    ManufacturedCase c;
    c.name = name;
    c.r = r;
    auto growing = [&c] {
        c.tau = [](double t) { return 1.0 + 0.5 * t; };
        c.dtau = [](double) { return 0.5; };
    };
    auto frozen = [&c] {
        c.tau = [](double) { return 1.0; };
        c.dtau = [](double) { return 0.0; };
    };
    auto oscillating = [&c] {
        using std::numbers::pi;
        c.f = [](double t) { return 1.0 + 0.5 * std::sin(2.0 * pi * t); };
        c.df = [](double t) { return pi * std::cos(2.0 * pi * t); };
    };
    if (name == "taylor-vortex") {
        growing();
        oscillating();
    } else if (name == "taylor-vortex-r1" || name == "taylor-vortex-r2" || name == "taylor-vortex-r3") {
        c.r = double(name.back() - '0');
        growing();
        oscillating();
    } else if (name == "taylor-vortex-frozen") {
        frozen();
        oscillating();
    } else if (name == "decaying-source") {
        // steady flow sustained by a growing amplitude against a decaying g
        constexpr double rate = 4.0;
        frozen();
        c.f = [](double t) { return std::exp(rate * t); };
        c.df = [](double t) { return rate * std::exp(rate * t); };
    } else {
        throw CatalogError("unknown manufactured case '" + name + "'");
    }
    c.params = params;
    c.params.r = c.r;
    c.params.validate();
    return c;
}

struct ManufacturedProblem {
    ManufacturedCase closures;
    InverseProblemData data;
    TimeSeries f_exact;
    Trajectory u_exact;
    std::vector<ScalarField> p_exact;
};

inline VectorField sample_velocity(const ManufacturedCase& c, const Grid& g, double t) {
    return sample_vector(
        g, [&](double x, double y) { return c.velocity(x, y, t)[0]; },
        [&](double x, double y) { return c.velocity(x, y, t)[1]; });
}

inline ScalarField sample_pressure(const ManufacturedCase& c, const Grid& g, double t) {
    ScalarField p = sample_scalar(g, [&](double x, double y) { return c.pressure(x, y, t); });
    p.remove_mean();
    return p;
}

inline VectorField sample_forcing(const ManufacturedCase& c, const Grid& g, double t) {
    return sample_vector(
        g, [&](double x, double y) { return c.forcing(x, y, t)[0]; },
        [&](double x, double y) { return c.forcing(x, y, t)[1]; });
}

/// Samples every closure on the grid and time grid of cfg. cfg.params.r is
/// overridden by fixed-exponent catalog names.
inline ManufacturedProblem build_case(const std::string& name, double r, SolverConfig cfg) {
    ManufacturedCase c = make_case(name, r, cfg.params);
    cfg.params = c.params;
    cfg.validate();
    const Grid& g = cfg.grid;
    const std::size_t N = cfg.steps();
    auto sinc = [](double h) { return std::sin(std::numbers::pi * h) / (std::numbers::pi * h); };
    c.omega_aspect = g.hx() == g.hy() ? 1.0 : sinc(g.hy()) / sinc(g.hx());

    for (double t : {0.0, cfg.T}) {
        if (!(c.f(t) > 0.0)) throw DomainError("manufactured source amplitude must stay positive");
    }

    FieldSeries gs{0.0, cfg.dt, {}};
    gs.frames.reserve(N + 1);
    Trajectory u{cfg, {}};
    u.snapshots.reserve(N + 1);
    std::vector<ScalarField> p;
    p.reserve(N + 1);
    std::vector<double> fv(N + 1), phiv(N + 1);
    for (std::size_t n = 0; n <= N; ++n) {
        const double t = cfg.time(n);
        gs.frames.push_back(sample_forcing(c, g, t));
        u.snapshots.push_back(sample_velocity(c, g, t));
        p.push_back(sample_pressure(c, g, t));
        fv[n] = c.f(t);
        if (!(fv[n] > 0.0)) throw DomainError("manufactured source amplitude must stay positive");
        phiv[n] = c.measurement(t);
    }
    VectorField omega = sample_vector(
        g, [&c](double x, double y) { return c.weight(x, y)[0]; }, [&c](double x, double y) { return c.weight(x, y)[1]; });

    TimeSeries phi(0.0, cfg.dt, std::move(phiv));
    const double g0 = 0.5 * min_abs_g1(gs, omega);
    InverseProblemData data(u.snapshots.front(), std::move(gs), std::move(omega), std::move(phi), cfg, g0);
    return {std::move(c), std::move(data), TimeSeries(0.0, cfg.dt, std::move(fv)), std::move(u), std::move(p)};
}

struct DirectError {
    double max_l2 = 0.0;    ///< max_n ||u_n - u(t_n)||_H
    double final_l2 = 0.0;  ///< error at the final time
    double max_h1 = 0.0;    ///< max_n of the discrete seminorm of the error
};

inline DirectError direct_error(const Trajectory& traj, const ManufacturedProblem& mp) {
    if (traj.size() != mp.u_exact.size()) throw DimensionError("trajectory and exact solution differ in length");
    DirectError e;
    for (std::size_t n = 0; n < traj.size(); ++n) {
        const VectorField d = traj[n] - mp.u_exact[n];
        const double l2 = l2_norm(d);
        e.max_l2 = std::max(e.max_l2, l2);
        e.max_h1 = std::max(e.max_h1, h1_seminorm(d));
        e.final_l2 = l2;
    }
    return e;
}

/// Relative L2(0,T) distance between a recovered amplitude and the exact one.
inline double inverse_error(const TimeSeries& f_rec, const ManufacturedProblem& mp) {
    return l2_time_norm(f_rec - mp.f_exact) / l2_time_norm(mp.f_exact);
}

}  // namespace cbf
