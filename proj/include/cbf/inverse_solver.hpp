#pragma once

// Recovery of the source amplitude f(t) from the integral measurement
// phi(t) = <u(t), omega> by fixed-point iteration on f = A f, with a
// sequential-in-time reconstruction as an independent cross-check.
//
// The discrete operator is obtained by testing one time step against omega:
//   g1_{n+1} (A f)_{n+1} = (phi_{n+1} - phi_n)/dt + mu <grad u*_{n+1}, grad omega>
//                          + alpha <u*_{n+1}, omega> + <(u_n.grad)u_n, omega>
//                          + beta <h(u_n), omega>
// where u* is the pre-projection velocity of the run driven by f. Its fixed
// points drive flows that reproduce the measurement exactly at every step.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cbf/direct_solver.hpp"
#include "cbf/errors.hpp"
#include "cbf/fields.hpp"
#include "cbf/spectral.hpp"

namespace cbf {

inline double observe(const VelocityField& u, const VelocityField& omega) { return inner_product(u, omega); }

inline double min_abs_g1(const FieldSeries& g, const VelocityField& omega) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& frame : g.frames) m = std::min(m, std::abs(inner_product(frame, omega)));
    return m;
}

/// Centered differences inside, one-sided second order at both ends.
inline TimeSeries phi_derivative(const TimeSeries& phi) {
    const std::size_t n = phi.size();
    if (n < 3) throw DomainError("derivative of a measurement needs at least 3 samples");
    const double inv = 1.0 / (2.0 * phi.dt());
    std::vector<double> d(n);
    d[0] = (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) * inv;
    for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (phi[k + 1] - phi[k - 1]) * inv;
    d[n - 1] = (3.0 * phi[n - 1] - 4.0 * phi[n - 2] + phi[n - 3]) * inv;
    return TimeSeries(phi.t0(), phi.dt(), std::move(d));
}

/// Validated input bundle of the inverse problem.
class InverseProblemData {
public:
    /// comp_tol < 0 selects the default 1e-8 (1 + |phi(0)|).
    InverseProblemData(VelocityField u0, FieldSeries g, VelocityField omega, TimeSeries phi,
                       SolverConfig cfg, double g0_min, double comp_tol = -1.0)
        : u0_(std::move(u0)), g_(std::move(g)), omega_(std::move(omega)), phi_(std::move(phi)),
          cfg_(std::move(cfg)), g0_min_(g0_min), g1_(0.0, 1.0, 0) {
        cfg_.validate();
        const std::size_t count = cfg_.steps() + 1;
        if (!(u0_.grid() == cfg_.grid) || !(omega_.grid() == cfg_.grid))
            throw DimensionError("inverse problem fields on a different grid");
        check_source_sampling(TimeSeries(0.0, cfg_.dt, count), g_, cfg_);
        if (phi_.size() != count || std::abs(phi_.dt() - cfg_.dt) > 1e-12 * cfg_.dt)
            throw DimensionError("measurement must be sampled at the solver steps");
        if (!u0_.is_finite() || !omega_.is_finite()) throw DomainError("inverse problem fields must be finite");
        if (!(g0_min_ > 0.0)) throw DomainError("g0_min must be positive");

        const double div = divergence(omega_).max_abs();
        if (div > 1e-10) throw DomainError("measurement weight is not divergence-free");
        if (omega_.max_boundary_normal() > 1e-12)
            throw DomainError("measurement weight must vanish normally on the boundary");
        if (!std::isfinite(gradient_max_abs(omega_))) throw DomainError("measurement weight gradient unbounded");

        std::vector<double> g1(count);
        for (std::size_t n = 0; n < count; ++n) {
            g1[n] = inner_product(g_[n], omega_);
            if (!(std::abs(g1[n]) >= g0_min_)) {
                std::ostringstream os;
                os << "|<g, omega>| = " << std::abs(g1[n]) << " falls below g0_min = " << g0_min_
                   << " at t = " << g_.time(n);
                throw AdmissibilityError(os.str(), g_.time(n));
            }
        }
        g1_ = TimeSeries(0.0, cfg_.dt, std::move(g1));

        comp_tol_ = comp_tol >= 0.0 ? comp_tol : 1e-8 * (1.0 + std::abs(phi_[0]));
        const double gap = std::abs(inner_product(u0_, omega_) - phi_[0]);
        if (gap > comp_tol_) {
            std::ostringstream os;
            os << "incompatible data: |<u0, omega> - phi(0)| = " << gap << " exceeds " << comp_tol_;
            throw AdmissibilityError(os.str(), 0.0);
        }
    }

    const VelocityField& u0() const noexcept { return u0_; }
    const FieldSeries& g() const noexcept { return g_; }
    const VelocityField& omega() const noexcept { return omega_; }
    const TimeSeries& phi() const noexcept { return phi_; }
    const SolverConfig& cfg() const noexcept { return cfg_; }
    const PhysicalParams& params() const noexcept { return cfg_.params; }
    double g0_min() const noexcept { return g0_min_; }
    double comp_tol() const noexcept { return comp_tol_; }
    const TimeSeries& g1() const noexcept { return g1_; }

private:
    VelocityField u0_;
    FieldSeries g_;
    VelocityField omega_;
    TimeSeries phi_;
    SolverConfig cfg_;
    double g0_min_;
    double comp_tol_ = 0.0;
    TimeSeries g1_;
};

/// g1(t_n) = <g(t_n), omega>; throws if any sample violates the g0 bound.
inline TimeSeries g1_series(const InverseProblemData& data) { return data.g1(); }

/// phi' / g1, the center of the admissible ball.
inline TimeSeries ball_center(const InverseProblemData& data) {
    TimeSeries c = phi_derivative(data.phi());
    for (std::size_t n = 0; n < c.size(); ++n) c[n] /= data.g1()[n];
    return c;
}

namespace detail {

// Value of A at t = 0, where only u0 is known.
inline double initial_amplitude(const InverseProblemData& data, const VelocityField& u0,
                                const VectorField& lap_omega, double dphi0) {
    const auto& p = data.params();
    const VectorField& w = data.omega();
    const double num = -p.mu * inner_product(u0, lap_omega) + inner_product(convection(u0), w) +
                       p.alpha * inner_product(u0, w) + p.beta * inner_product(forchheimer(u0, p.r), w) + dphi0;
    return num / data.g1()[0];
}

}  // namespace detail

inline TimeSeries apply_A(const TimeSeries& f, const InverseProblemData& data) {
    const auto& cfg = data.cfg();
    const auto& p = cfg.params;
    const VelocityField& w = data.omega();
    const VectorField lap_w = laplacian_velocity(w);
    const TimeSeries& phi = data.phi();
    std::vector<double> out(f.size(), 0.0);
    const double dphi0 = phi_derivative(phi)[0];
    auto observer = [&](std::size_t n, const VelocityField& u_n, const StepDetail& d) {
        if (n == 0) out[0] = detail::initial_amplitude(data, u_n, lap_w, dphi0);
        const double num = (phi[n + 1] - phi[n]) / cfg.dt - p.mu * inner_product(d.intermediate, lap_w) +
                           p.alpha * inner_product(d.intermediate, w) + inner_product(convection(u_n), w) +
                           p.beta * inner_product(forchheimer(u_n, p.r), w);
        out[n + 1] = num / data.g1()[n + 1];
    };
    solve_direct(data.u0(), f, data.g(), cfg, observer);
    return TimeSeries(f.t0(), f.dt(), std::move(out));
}

struct PicardOptions {
    double tol = 1e-8;
    std::size_t max_iter = 100;
    double radius = 1.0;              ///< ball radius a (reported only)
    std::optional<TimeSeries> start;  ///< defaults to the ball center
};

struct IterationReport {
    std::vector<TimeSeries> iterates;        ///< f_0, f_1, ..., f_K
    std::vector<double> residuals;           ///< ||f_{k+1} - f_k||_{L2(0,T)}
    std::vector<double> relative_residuals;  ///< residuals / ||f_{k+1}||, the stopping quantity
    std::vector<double> contraction_ratios;  ///< residuals[k] / residuals[k-1]
    bool converged = false;
    bool diverged = false;
    double tol = 0.0;
    TimeSeries ball_center;
    double ball_radius_used = 1.0;
    double start_distance = 0.0;  ///< ||f_0 - center||, within the ball iff <= radius

    std::size_t iterations() const noexcept { return residuals.size(); }
    /// Largest contraction ratio after the first iterate (0 if fewer than two ratios).
    double worst_ratio_after_first() const {
        double m = 0.0;
        for (std::size_t k = 1; k < contraction_ratios.size(); ++k) m = std::max(m, contraction_ratios[k]);
        return m;
    }
};

inline std::pair<TimeSeries, IterationReport> solve_inverse_picard(const InverseProblemData& data,
                                                                    const PicardOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw DomainError("Picard tolerance must be positive");
    IterationReport rep{{}, {}, {}, {}, false, false, opt.tol, ball_center(data), opt.radius, 0.0};
    TimeSeries f = opt.start ? *opt.start : rep.ball_center;
    f.check_compatible(rep.ball_center);
    rep.start_distance = l2_time_norm(f - rep.ball_center);
    rep.iterates.push_back(f);
    int growth = 0;
    for (std::size_t k = 0; k < opt.max_iter; ++k) {
        TimeSeries next = apply_A(f, data);
        const double res = l2_time_norm(next - f);
        const double scale = l2_time_norm(next);
        const double rel = scale > 0.0 ? res / scale : res;
        if (!rep.residuals.empty()) {
            const double prev = rep.residuals.back();
            rep.contraction_ratios.push_back(prev > 0.0 ? res / prev : 0.0);
            growth = res > prev ? growth + 1 : 0;
        }
        rep.residuals.push_back(res);
        rep.relative_residuals.push_back(rel);
        rep.iterates.push_back(next);
        f = std::move(next);
        if (rel <= opt.tol) {
            rep.converged = true;
            break;
        }
        if (growth >= 3) {
            rep.diverged = true;
            break;
        }
    }
    return {std::move(f), std::move(rep)};
}

/// Chooses f_{n+1} step by step so that <u_{n+1}, omega> = phi(t_{n+1}).
inline TimeSeries solve_inverse_marching(const InverseProblemData& data) {
    const auto& cfg = data.cfg();
    const std::size_t N = cfg.steps();
    const Stepper stepper(cfg);
    const VelocityField& w = data.omega();
    const VectorField lap_w = laplacian_velocity(w);
    std::vector<double> f(N + 1, 0.0);
    VelocityField u = leray_decompose(data.u0(), stepper.poisson()).field;
    f[0] = detail::initial_amplitude(data, u, lap_w, phi_derivative(data.phi())[0]);
    for (std::size_t n = 0; n < N; ++n) {
        const double t1 = cfg.time(n + 1);
        VectorField base = stepper.explicit_update(u, cfg.time(n));
        base.clear_boundary_normal();
        const VectorField star0 = stepper.helmholtz().solve(base);
        VectorField load = cfg.dt * data.g()[n + 1];
        load.clear_boundary_normal();
        const VectorField response = stepper.helmholtz().solve(load);
        const double denom = inner_product(response, w);
        if (!(std::abs(denom) >= 1e-12)) {
            std::ostringstream os;
            os << "step response orthogonal to the measurement weight at t = " << t1;
            throw MarchingBreakdown(os.str(), t1, denom);
        }
        f[n + 1] = (data.phi()[n + 1] - inner_product(star0, w)) / denom;
        VectorField star = star0;
        star.axpy(f[n + 1], response);
        u = leray_decompose(star, stepper.poisson()).field;
        if (!u.is_finite()) {
            std::ostringstream os;
            os << "non-finite velocity at t = " << t1;
            throw BlowUpError(os.str(), t1);
        }
    }
    return TimeSeries(0.0, cfg.dt, std::move(f));
}

// ---------------------------------------------------------------------------
// Admissibility diagnostics (generic constant C = 1 by default)

/// Data norms entering the self-map and contraction bounds.
struct DataNorms {
    double u0 = 0.0;          ///< ||u0||_H
    double g_sup = 0.0;       ///< sup_t ||g(t)||_{L2}
    double lap_omega = 0.0;   ///< ||lap omega||_H
    double omega = 0.0;       ///< ||omega||_H
    double grad_omega = 0.0;  ///< ||grad omega||_{L^inf}
    double omega_h2 = 0.0;    ///< ||omega||_{H2}
    double g0 = 1.0;
    double T = 1.0;
    double center = 0.0;      ///< ||phi'/g1||_{L2(0,T)}
};

inline DataNorms data_norms(const InverseProblemData& data) {
    DataNorms n;
    n.u0 = l2_norm(data.u0());
    for (const auto& frame : data.g().frames) n.g_sup = std::max(n.g_sup, l2_norm(frame));
    n.lap_omega = l2_norm(laplacian_velocity(data.omega()));
    n.omega = l2_norm(data.omega());
    n.grad_omega = gradient_max_abs(data.omega());
    n.omega_h2 = h2_norm(data.omega());
    n.g0 = data.g0_min();
    n.T = data.cfg().T;
    n.center = l2_time_norm(ball_center(data));
    return n;
}

struct AdmissibilityReport {
    static constexpr const char* label = "sufficient-condition surrogate";
    double r = 2.0;
    double C = 1.0;
    double T = 0.0;
    double a = 1.0;
    double a_tilde = 1.0;
    std::optional<double> m1;  ///< r in (2, 3]
    std::optional<double> m2;  ///< r in [1, 2]
    std::optional<double> m4;  ///< r in (2, 3]
    std::optional<double> m6;  ///< r in [1, 2]
    double m1_time_term = 0.0;       ///< T {...}^2 part of m1 (before the prefactor and root)
    double m1_nonlinear_term = 0.0;  ///< T^{(3-r)/(r-1)} part of m1
    double m1_nonlinear_time_power = 0.0;
    bool self_map_satisfied = false;
    double contraction_base = 0.0;   ///< m4 T^{3-r} or m6 T
    double one_step_factor = 0.0;    ///< sqrt(contraction_base)
    std::size_t contraction_k = 1;   ///< least k with (base^k / k!)^{1/2} < 1
    bool contraction_satisfied = false;  ///< one_step_factor < 1

    double self_map_bound() const { return m1 ? *m1 : m2.value_or(0.0); }
};

/// Least k >= 1 with base^k / k! < 1.
inline std::size_t contraction_power(double base) {
    if (!(base > 0.0)) return 1;
    const double lb = std::log(base);
    for (std::size_t k = 1; k < 100000000; ++k)
        if (double(k) * lb - std::lgamma(double(k) + 1.0) < 0.0) return k;
    return std::numeric_limits<std::size_t>::max();
}

inline AdmissibilityReport admissibility(const DataNorms& d, double r, double a, double C = 1.0) {
    if (!(a > 0.0)) throw DomainError("ball radius must be positive");
    if (!(r >= 1.0 && r <= 3.0)) throw DomainError("absorption exponent r must lie in [1, 3]");
    AdmissibilityReport rep;
    rep.r = r;
    rep.C = C;
    rep.T = d.T;
    rep.a = a;
    rep.a_tilde = a + d.center;
    const double T = d.T, at = rep.a_tilde, G = d.g_sup;
    const double lin = d.u0 + std::sqrt(T) * at * G;    // ||u0|| + T^{1/2} a~ G
    const double quad = d.u0 * d.u0 + at * at * G * G;  // ||u0||^2 + a~^2 G^2
    const double wsum = d.lap_omega + d.omega;
    const double expo = std::exp(quad);

    if (r > 2.0) {
        const double brace = wsum * lin + d.grad_omega * quad;
        rep.m1_time_term = T * brace * brace;
        rep.m1_nonlinear_time_power = (3.0 - r) / (r - 1.0);
        rep.m1_nonlinear_term = std::pow(T, rep.m1_nonlinear_time_power) * d.omega_h2 * d.omega_h2 *
                                std::pow(lin, 4.0 / (r - 1.0)) * std::pow(quad, 2.0 * (r - 2.0) / (r - 1.0));
        rep.m1 = (C / d.g0) * std::sqrt(rep.m1_time_term + rep.m1_nonlinear_term);
        const double inner = wsum + d.grad_omega * lin;
        rep.m4 = (C / (d.g0 * d.g0)) * G * G * expo *
                 (std::pow(T, r - 2.0) * inner * inner + d.omega_h2 * d.omega_h2 * std::pow(quad, r - 1.0));
        rep.contraction_base = *rep.m4 * std::pow(T, 3.0 - r);
    } else {
        rep.m2 = (C * std::sqrt(T) / d.g0) * (wsum * lin + d.grad_omega * quad + d.omega_h2 * std::pow(lin, r));
        const double inner = wsum + d.grad_omega * lin + d.omega_h2 * std::pow(lin, r - 1.0);
        rep.m6 = (C / (d.g0 * d.g0)) * G * G * expo * inner * inner;
        rep.contraction_base = *rep.m6 * T;
    }
    rep.self_map_satisfied = rep.self_map_bound() < a;
    rep.one_step_factor = std::sqrt(rep.contraction_base);
    rep.contraction_satisfied = rep.one_step_factor < 1.0;
    rep.contraction_k = contraction_power(rep.contraction_base);
    return rep;
}

inline AdmissibilityReport admissibility(const InverseProblemData& data, double a = 1.0, double C = 1.0) {
    return admissibility(data_norms(data), data.params().r, a, C);
}

}  // namespace cbf
