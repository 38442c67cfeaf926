#pragma once

// Fast direct solvers for the cell Neumann Poisson problem and the face
// Helmholtz problems, diagonalized by real-to-real trigonometric transforms.

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include "cbf/errors.hpp"
#include "cbf/fields.hpp"

namespace cbf {

namespace detail {

class PlanCache {
public:
    // Plans are created once per shape; execution through the new-array
    // interface is thread safe, creation is serialized here.
    static fftw_plan get(int n0, int n1, fftw_r2r_kind k0, fftw_r2r_kind k1) {
        static std::mutex mtx;
        static std::map<std::tuple<int, int, int, int>, std::unique_ptr<fftw_plan_s, PlanDeleter>> plans;
        std::lock_guard lock(mtx);
        auto key = std::make_tuple(n0, n1, int(k0), int(k1));
        auto it = plans.find(key);
        if (it != plans.end()) return it->second.get();
        std::vector<double> in(std::size_t(n0) * n1), out(in.size());
        fftw_plan p = fftw_plan_r2r_2d(n0, n1, in.data(), out.data(), k0, k1,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw NumericalError("failed to create transform plan", 0.0);
        plans.emplace(key, std::unique_ptr<fftw_plan_s, PlanDeleter>(p));
        return p;
    }

private:
    struct PlanDeleter {
        void operator()(fftw_plan p) const { fftw_destroy_plan(p); }
    };
};

inline void transform(int n0, int n1, fftw_r2r_kind k0, fftw_r2r_kind k1,
                      std::vector<double>& in, std::vector<double>& out) {
    fftw_execute_r2r(PlanCache::get(n0, n1, k0, k1), in.data(), out.data());
}

// 4/h^2 sin^2(pi k / (2n)) for k = first .. first+count-1
inline std::vector<double> sine_symbols(int n, double h, int first, int count) {
    std::vector<double> s(count);
    for (int k = 0; k < count; ++k) {
        const double v = std::sin(std::numbers::pi * (first + k) / (2.0 * n));
        s[k] = 4.0 * v * v / (h * h);
    }
    return s;
}

inline constexpr double solve_tolerance = 1e-10;

}  // namespace detail

/// Solves neumann_laplacian(x) = b - mean(b) for the mean-zero x.
class NeumannPoisson {
public:
    explicit NeumannPoisson(const Grid& g)
        : grid_(g),
          lx_(detail::sine_symbols(g.nx(), g.hx(), 0, g.nx())),
          ly_(detail::sine_symbols(g.ny(), g.hy(), 0, g.ny())) {}

    const Grid& grid() const noexcept { return grid_; }

    ScalarField solve(const ScalarField& rhs) const {
        if (!(rhs.grid() == grid_)) throw DimensionError("Poisson right-hand side on a different grid");
        const int nx = grid_.nx(), ny = grid_.ny();
        ScalarField b = rhs;
        b.remove_mean();
        std::vector<double> hat(b.data().size());
        detail::transform(ny, nx, FFTW_REDFT10, FFTW_REDFT10, b.data(), hat);
        const double scale = 1.0 / (4.0 * nx * ny);
        for (int l = 0; l < ny; ++l)
            for (int k = 0; k < nx; ++k) {
                const std::size_t idx = std::size_t(l) * nx + k;
                hat[idx] = (k == 0 && l == 0) ? 0.0 : -hat[idx] * scale / (lx_[k] + ly_[l]);
            }
        ScalarField x(grid_);
        detail::transform(ny, nx, FFTW_REDFT01, FFTW_REDFT01, hat, x.data());
        x.remove_mean();

        const ScalarField r = neumann_laplacian(x) - b;
        const double res = r.max_abs(), ref = b.max_abs();
        if (!(res <= detail::solve_tolerance * ref) && !(ref == 0.0 && res == 0.0))
            throw NumericalError("Poisson solve residual too large", ref > 0 ? res / ref : res);
        return x;
    }

private:
    Grid grid_;
    std::vector<double> lx_;
    std::vector<double> ly_;
};

/// Solves (shift - coeff * laplacian_velocity) u = b on interior faces with
/// homogeneous wall data; boundary-normal entries of b are ignored.
class VelocityHelmholtz {
public:
    VelocityHelmholtz(const Grid& g, double shift, double coeff)
        : grid_(g), shift_(shift), coeff_(coeff),
          dir_x_(detail::sine_symbols(g.nx(), g.hx(), 1, g.nx() - 1)),
          ref_x_(detail::sine_symbols(g.nx(), g.hx(), 1, g.nx())),
          dir_y_(detail::sine_symbols(g.ny(), g.hy(), 1, g.ny() - 1)),
          ref_y_(detail::sine_symbols(g.ny(), g.hy(), 1, g.ny())) {
        if (!(shift > 0.0) || !(coeff >= 0.0))
            throw DomainError("Helmholtz operator needs shift > 0 and coeff >= 0");
    }

    const Grid& grid() const noexcept { return grid_; }
    double shift() const noexcept { return shift_; }
    double coeff() const noexcept { return coeff_; }

    VectorField solve(const VectorField& b) const {
        if (!(b.grid() == grid_)) throw DimensionError("Helmholtz right-hand side on a different grid");
        const int nx = grid_.nx(), ny = grid_.ny();
        VectorField u(grid_);
        std::vector<double> buf, hat;

        // x-component: Dirichlet in x (interior i = 1..nx-1), reflected in y.
        buf.assign(std::size_t(nx - 1) * ny, 0.0);
        hat.resize(buf.size());
        for (int j = 0; j < ny; ++j)
            for (int i = 1; i < nx; ++i) buf[std::size_t(j) * (nx - 1) + (i - 1)] = b.ux(i, j);
        detail::transform(ny, nx - 1, FFTW_RODFT10, FFTW_RODFT00, buf, hat);
        const double sx = 1.0 / (4.0 * nx * ny);
        for (int l = 0; l < ny; ++l)
            for (int k = 0; k < nx - 1; ++k)
                hat[std::size_t(l) * (nx - 1) + k] *= sx / (shift_ + coeff_ * (dir_x_[k] + ref_y_[l]));
        detail::transform(ny, nx - 1, FFTW_RODFT01, FFTW_RODFT00, hat, buf);
        for (int j = 0; j < ny; ++j)
            for (int i = 1; i < nx; ++i) u.ux(i, j) = buf[std::size_t(j) * (nx - 1) + (i - 1)];

        // y-component: Dirichlet in y (interior j = 1..ny-1), reflected in x.
        buf.assign(std::size_t(ny - 1) * nx, 0.0);
        hat.resize(buf.size());
        for (int j = 1; j < ny; ++j)
            for (int i = 0; i < nx; ++i) buf[std::size_t(j - 1) * nx + i] = b.uy(i, j);
        detail::transform(ny - 1, nx, FFTW_RODFT00, FFTW_RODFT10, buf, hat);
        for (int l = 0; l < ny - 1; ++l)
            for (int k = 0; k < nx; ++k)
                hat[std::size_t(l) * nx + k] *= sx / (shift_ + coeff_ * (ref_x_[k] + dir_y_[l]));
        detail::transform(ny - 1, nx, FFTW_RODFT00, FFTW_RODFT01, hat, buf);
        for (int j = 1; j < ny; ++j)
            for (int i = 0; i < nx; ++i) u.uy(i, j) = buf[std::size_t(j - 1) * nx + i];

        check_residual(u, b);
        return u;
    }

    /// (shift - coeff * laplacian) u on interior faces.
    VectorField apply(const VectorField& u) const {
        VectorField out = laplacian_velocity(u);
        out *= -coeff_;
        out.axpy(shift_, u);
        out.clear_boundary_normal();
        return out;
    }

private:
    void check_residual(const VectorField& u, const VectorField& b) const {
        VectorField r = apply(u);
        VectorField bi = b;
        bi.clear_boundary_normal();
        const double ref = bi.max_abs();
        r -= bi;
        const double res = r.max_abs();
        if (!(res <= detail::solve_tolerance * ref) && !(ref == 0.0 && res == 0.0))
            throw NumericalError("Helmholtz solve residual too large", ref > 0 ? res / ref : res);
    }

    Grid grid_;
    double shift_;
    double coeff_;
    std::vector<double> dir_x_, ref_x_, dir_y_, ref_y_;
};

struct Projection {
    VectorField field;      ///< divergence-free part with zero boundary normals
    ScalarField potential;  ///< phi with field = v - gradient(phi)
};

/// Discrete Helmholtz-Hodge decomposition of v (boundary normals discarded).
inline Projection leray_decompose(const VectorField& v, const NeumannPoisson& poisson) {
    VectorField w = v;
    w.clear_boundary_normal();
    ScalarField phi = poisson.solve(divergence(w));
    w -= gradient(phi);
    return {std::move(w), std::move(phi)};
}

inline Projection leray_decompose(const VectorField& v) {
    return leray_decompose(v, NeumannPoisson(v.grid()));
}

inline VectorField leray_project(const VectorField& v) { return leray_decompose(v).field; }

}  // namespace cbf
