#pragma once

// Time integration of the convective Brinkman-Forchheimer system
//   u_t - mu lap u + (u.grad)u + alpha u + beta |u|^{r-1} u + grad p = f(t) g,  div u = 0
// with no-slip walls, by IMEX Euler (implicit viscosity and damping, explicit
// convection and Forchheimer term) followed by a Chorin projection.

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cbf/errors.hpp"
#include "cbf/fields.hpp"
#include "cbf/spectral.hpp"

namespace cbf {

struct PhysicalParams {
    double mu = 1.0;     ///< Brinkman viscosity
    double alpha = 1.0;  ///< Darcy coefficient
    double beta = 1.0;   ///< Forchheimer coefficient
    double r = 2.0;      ///< absorption exponent in [1, 3]

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw DomainError(std::string(name) + " must be finite and positive");
        };
        positive(mu, "mu");
        positive(alpha, "alpha");
        positive(beta, "beta");
        if (!(r >= 1.0 && r <= 3.0)) throw DomainError("absorption exponent r must lie in [1, 3]");
    }
};

struct SolverConfig {
    Grid grid;
    double dt;
    double T;
    PhysicalParams params;

    /// Number of steps N with N*dt = T; the quotient must be integral to 1e-9 relative.
    std::size_t steps() const {
        const double q = T / dt;
        const double n = std::round(q);
        if (!(n >= 1.0) || std::abs(q - n) > 1e-9 * n) {
            std::ostringstream os;
            os << "final time " << T << " is not an integer multiple of dt = " << dt;
            throw DomainError(os.str());
        }
        return std::size_t(n);
    }

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be finite and positive");
        if (!(T >= dt) || !std::isfinite(T)) throw DomainError("T must be finite and at least dt");
        steps();
        params.validate();
    }

    double time(std::size_t n) const { return double(n) * dt; }
};

struct Trajectory {
    SolverConfig config;
    std::vector<VelocityField> snapshots;  ///< u at t_n = n*dt, n = 0..N

    std::size_t size() const noexcept { return snapshots.size(); }
    double time(std::size_t n) const { return config.time(n); }
    const VelocityField& operator[](std::size_t n) const { return snapshots[n]; }
};

/// Facewise |v|^{r-1} v with the magnitude interpolated to each face.
inline VectorField forchheimer(const VectorField& v, double r) {
    if (!(r >= 1.0 && r <= 3.0)) throw DomainError("absorption exponent r must lie in [1, 3]");
    if (r == 1.0) return v;
    const Grid& g = v.grid();
    VectorField out(g);
    const double e = r - 1.0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i <= g.nx(); ++i) {
            const double c = v.ux(i, j);
            if (c != 0.0) out.ux(i, j) = std::pow(std::hypot(c, detail::uy_at_xface(v, i, j)), e) * c;
        }
    for (int j = 0; j <= g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const double c = v.uy(i, j);
            if (c != 0.0) out.uy(i, j) = std::pow(std::hypot(c, detail::ux_at_yface(v, i, j)), e) * c;
        }
    return out;
}

/// Second-order divergence form div(u (x) u) on interior faces. For discretely
/// solenoidal v with zero wall flux, <convection(v), v> vanishes to rounding.
inline VectorField convection(const VectorField& v) {
    const Grid& g = v.grid();
    const int nx = g.nx(), ny = g.ny();
    const double hx = g.hx(), hy = g.hy();
    VectorField out(g);

    auto uc = [&](int i, int j) { return 0.5 * (v.ux(i, j) + v.ux(i + 1, j)); };
    auto vc = [&](int i, int j) { return 0.5 * (v.uy(i, j) + v.uy(i, j + 1)); };
    // momentum fluxes through the node (i, j); zero on walls
    auto fyx = [&](int i, int j) {
        if (j == 0 || j == ny) return 0.0;
        return 0.25 * (v.uy(i - 1, j) + v.uy(i, j)) * (v.ux(i, j - 1) + v.ux(i, j));
    };
    auto fxy = [&](int i, int j) {
        if (i == 0 || i == nx) return 0.0;
        return 0.25 * (v.ux(i, j - 1) + v.ux(i, j)) * (v.uy(i - 1, j) + v.uy(i, j));
    };

    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            const double a = uc(i, j), b = uc(i - 1, j);
            out.ux(i, j) = (a * a - b * b) / hx + (fyx(i, j + 1) - fyx(i, j)) / hy;
        }
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double a = vc(i, j), b = vc(i, j - 1);
            out.uy(i, j) = (a * a - b * b) / hy + (fxy(i + 1, j) - fxy(i, j)) / hx;
        }
    return out;
}

/// Vorticity duy/dx - dux/dy on wall nodes, one-sided second order against the
/// zero wall velocity; corners are zero. Returned as (bottom, top, left, right)
/// arrays indexed along the wall by node number.
struct WallVorticity {
    std::vector<double> bottom, top, left, right;
};

inline WallVorticity wall_vorticity(const VectorField& v) {
    const Grid& g = v.grid();
    const int nx = g.nx(), ny = g.ny();
    WallVorticity w{std::vector<double>(nx + 1, 0.0), std::vector<double>(nx + 1, 0.0),
                    std::vector<double>(ny + 1, 0.0), std::vector<double>(ny + 1, 0.0)};
    for (int i = 1; i < nx; ++i) {
        w.bottom[i] = -(9.0 * v.ux(i, 0) - v.ux(i, 1)) / (3.0 * g.hy());
        w.top[i] = (9.0 * v.ux(i, ny - 1) - v.ux(i, ny - 2)) / (3.0 * g.hy());
    }
    for (int j = 1; j < ny; ++j) {
        w.left[j] = (9.0 * v.uy(0, j) - v.uy(1, j)) / (3.0 * g.hx());
        w.right[j] = -(9.0 * v.uy(nx - 1, j) - v.uy(nx - 2, j)) / (3.0 * g.hx());
    }
    return w;
}

struct StepDetail {
    VelocityField next;          ///< u_{n+1}, solenoidal
    VelocityField intermediate;  ///< u*, before projection
    ScalarField potential;       ///< phi with u_{n+1} = u* - grad phi
};

/// Reusable single-step integrator; holds the factorized linear operators.
class Stepper {
public:
    explicit Stepper(const SolverConfig& cfg)
        : cfg_(cfg),
          helmholtz_(cfg.grid, 1.0 + cfg.dt * cfg.params.alpha, cfg.dt * cfg.params.mu),
          poisson_(cfg.grid) {
        cfg_.validate();
    }

    const SolverConfig& config() const noexcept { return cfg_; }
    const VelocityHelmholtz& helmholtz() const noexcept { return helmholtz_; }
    const NeumannPoisson& poisson() const noexcept { return poisson_; }

    /// Explicit part u_n - dt (convection + beta h)(u_n); checks the step restrictions.
    VectorField explicit_update(const VelocityField& u_n, double t_n) const {
        check_restrictions(u_n, t_n);
        const auto& p = cfg_.params;
        VectorField rhs = u_n;
        rhs.axpy(-cfg_.dt, convection(u_n));
        rhs.axpy(-cfg_.dt * p.beta, forchheimer(u_n, p.r));
        return rhs;
    }

    StepDetail advance(const VelocityField& u_n, double f_n1, const VectorField& g_n1, double t_n1) const {
        u_n.check_grid(g_n1);
        VectorField rhs = explicit_update(u_n, t_n1 - cfg_.dt);
        rhs.axpy(cfg_.dt * f_n1, g_n1);
        rhs.clear_boundary_normal();
        VectorField star = helmholtz_.solve(rhs);
        Projection proj = leray_decompose(star, poisson_);
        if (!proj.field.is_finite()) {
            std::ostringstream os;
            os << "non-finite velocity at t = " << t_n1;
            throw BlowUpError(os.str(), t_n1);
        }
        return {std::move(proj.field), std::move(star), std::move(proj.potential)};
    }

private:
    void check_restrictions(const VelocityField& u, double t) const {
        if (!u.is_finite()) {
            std::ostringstream os;
            os << "non-finite velocity at t = " << t;
            throw BlowUpError(os.str(), t);
        }
        const double umax = u.max_abs();
        const double h = std::min(cfg_.grid.hx(), cfg_.grid.hy());
        const double cfl = cfg_.dt * umax / h;
        if (cfl > 0.5) {
            std::ostringstream os;
            os << "convective CFL number " << cfl << " exceeds 0.5 at t = " << t;
            throw StabilityError(os.str(), cfl);
        }
        const auto& p = cfg_.params;
        const double fb = cfg_.dt * p.beta * std::pow(umax, p.r - 1.0);
        if (fb > 0.5) {
            std::ostringstream os;
            os << "explicit Forchheimer number " << fb << " exceeds 0.5 at t = " << t;
            throw StabilityError(os.str(), fb);
        }
    }

    SolverConfig cfg_;
    VelocityHelmholtz helmholtz_;
    NeumannPoisson poisson_;
};

inline StepDetail step_detailed(const VelocityField& u_n, double f_n1, const VectorField& g_n1,
                                const SolverConfig& cfg) {
    return Stepper(cfg).advance(u_n, f_n1, g_n1, cfg.dt);
}

inline VelocityField step(const VelocityField& u_n, double f_n1, const VectorField& g_n1,
                          const SolverConfig& cfg) {
    return step_detailed(u_n, f_n1, g_n1, cfg).next;
}

/// Called after every step with (n, u_n, detail of the step to t_{n+1}).
using StepObserver = std::function<void(std::size_t, const VelocityField&, const StepDetail&)>;

inline void check_source_sampling(const TimeSeries& f, const FieldSeries& g, const SolverConfig& cfg) {
    const std::size_t count = cfg.steps() + 1;
    auto same = [&](double dt) { return std::abs(dt - cfg.dt) <= 1e-12 * cfg.dt; };
    if (f.size() != count || !same(f.dt()))
        throw DimensionError("source amplitude must be sampled at the solver steps");
    if (g.size() != count || !same(g.dt))
        throw DimensionError("forcing field must be sampled at the solver steps");
    for (const auto& frame : g.frames)
        if (!(frame.grid() == cfg.grid)) throw DimensionError("forcing field on a different grid");
}

inline Trajectory solve_direct(const VelocityField& u0, const TimeSeries& f, const FieldSeries& g,
                               const SolverConfig& cfg, const StepObserver& observer = {}) {
    Stepper stepper(cfg);
    check_source_sampling(f, g, cfg);
    if (!(u0.grid() == cfg.grid)) throw DimensionError("initial velocity on a different grid");
    if (!u0.is_finite()) throw BlowUpError("non-finite initial velocity", 0.0);
    const std::size_t N = cfg.steps();
    Trajectory traj{cfg, {}};
    traj.snapshots.reserve(N + 1);
    traj.snapshots.push_back(leray_decompose(u0, stepper.poisson()).field);
    for (std::size_t n = 0; n < N; ++n) {
        StepDetail d = stepper.advance(traj.snapshots[n], f[n + 1], g[n + 1], cfg.time(n + 1));
        if (observer) observer(n, traj.snapshots[n], d);
        traj.snapshots.push_back(std::move(d.next));
    }
    return traj;
}

/// Pressure at the time of u_n1 from the pressure Poisson equation
///   lap p = div(f g - (u.grad)u - beta h(u)),  dp/dn = n.(f g + mu lap u).
/// Interior faces hold the forcing flux; the wall faces hold the viscous part
/// -n.(mu lap u) evaluated through the vorticity, which together encode the
/// Neumann data. u_n enters only through the time derivative, which is
/// solenoidal with zero wall flux.
inline ScalarField recover_pressure(const VelocityField& u_n, const VelocityField& u_n1, double f_n1,
                                    const VectorField& g_n1, const SolverConfig& cfg,
                                    const NeumannPoisson* poisson = nullptr) {
    u_n.check_grid(u_n1);
    u_n1.check_grid(g_n1);
    const Grid& g = cfg.grid;
    const int nx = g.nx(), ny = g.ny();
    const double mu = cfg.params.mu;

    VectorField F = f_n1 * g_n1;
    F -= convection(u_n1);
    F.axpy(-cfg.params.beta, forchheimer(u_n1, cfg.params.r));

    // Wall-normal faces carry -n.(mu lap u) = mu n.curl(zeta), replacing the forcing flux
    const WallVorticity z = wall_vorticity(u_n1);
    for (int j = 0; j < ny; ++j) {
        F.ux(0, j) = mu * (z.left[j + 1] - z.left[j]) / g.hy();
        F.ux(nx, j) = mu * (z.right[j + 1] - z.right[j]) / g.hy();
    }
    for (int i = 0; i < nx; ++i) {
        F.uy(i, 0) = -mu * (z.bottom[i + 1] - z.bottom[i]) / g.hx();
        F.uy(i, ny) = -mu * (z.top[i + 1] - z.top[i]) / g.hx();
    }

    const ScalarField rhs = divergence(F);
    ScalarField p = poisson ? poisson->solve(rhs) : NeumannPoisson(g).solve(rhs);
    p.remove_mean();
    return p;
}

/// Pressures for every snapshot n = 1..N of a run (entry 0 uses u_0 alone).
inline std::vector<ScalarField> recover_pressures(const Trajectory& traj, const TimeSeries& f,
                                                  const FieldSeries& g) {
    check_source_sampling(f, g, traj.config);
    NeumannPoisson poisson(traj.config.grid);
    std::vector<ScalarField> out;
    out.reserve(traj.size());
    for (std::size_t n = 0; n < traj.size(); ++n) {
        const auto& prev = traj[n == 0 ? 0 : n - 1];
        out.push_back(recover_pressure(prev, traj[n], f[n], g[n], traj.config, &poisson));
    }
    return out;
}

}  // namespace cbf
