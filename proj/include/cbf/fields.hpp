#pragma once

// Staggered (MAC) grid on the unit square, discrete fields, stencils and norms.
//
// Layout: ux lives on vertical faces x = i*hx, y = (j+1/2)*hy with i in [0,nx],
// uy on horizontal faces x = (i+1/2)*hx, y = j*hy with j in [0,ny]. Boundary
// faces are stored so that forcing fields may carry normal components; velocity
// fields keep them at zero. Scalars live at cell centers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cbf/errors.hpp"

namespace cbf {

class Grid {
public:
    Grid(int nx, int ny) : nx_(nx), ny_(ny) {
        if (nx < 8 || ny < 8)
            throw DomainError("grid needs at least 8 cells per direction, got " +
                              std::to_string(nx) + "x" + std::to_string(ny));
        hx_ = 1.0 / nx;
        hy_ = 1.0 / ny;
    }

    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    double hx() const noexcept { return hx_; }
    double hy() const noexcept { return hy_; }
    double cell_area() const noexcept { return hx_ * hy_; }
    std::size_t x_faces() const noexcept { return std::size_t(nx_ + 1) * ny_; }
    std::size_t y_faces() const noexcept { return std::size_t(nx_) * (ny_ + 1); }
    std::size_t cells() const noexcept { return std::size_t(nx_) * ny_; }

    bool operator==(const Grid& o) const noexcept { return nx_ == o.nx_ && ny_ == o.ny_; }

private:
    int nx_;
    int ny_;
    double hx_;
    double hy_;
};

class VectorField {
public:
    explicit VectorField(const Grid& g)
        : grid_(g), ux_(g.x_faces(), 0.0), uy_(g.y_faces(), 0.0) {}

    const Grid& grid() const noexcept { return grid_; }

    double& ux(int i, int j) { return ux_[std::size_t(j) * (grid_.nx() + 1) + i]; }
    double ux(int i, int j) const { return ux_[std::size_t(j) * (grid_.nx() + 1) + i]; }
    double& uy(int i, int j) { return uy_[std::size_t(j) * grid_.nx() + i]; }
    double uy(int i, int j) const { return uy_[std::size_t(j) * grid_.nx() + i]; }

    std::vector<double>& ux_data() noexcept { return ux_; }
    const std::vector<double>& ux_data() const noexcept { return ux_; }
    std::vector<double>& uy_data() noexcept { return uy_; }
    const std::vector<double>& uy_data() const noexcept { return uy_; }

    bool is_finite() const {
        auto fin = [](double v) { return std::isfinite(v); };
        return std::all_of(ux_.begin(), ux_.end(), fin) && std::all_of(uy_.begin(), uy_.end(), fin);
    }

    double max_boundary_normal() const {
        double m = 0.0;
        for (int j = 0; j < grid_.ny(); ++j)
            m = std::max({m, std::abs(ux(0, j)), std::abs(ux(grid_.nx(), j))});
        for (int i = 0; i < grid_.nx(); ++i)
            m = std::max({m, std::abs(uy(i, 0)), std::abs(uy(i, grid_.ny()))});
        return m;
    }

    void clear_boundary_normal() {
        for (int j = 0; j < grid_.ny(); ++j) ux(0, j) = ux(grid_.nx(), j) = 0.0;
        for (int i = 0; i < grid_.nx(); ++i) uy(i, 0) = uy(i, grid_.ny()) = 0.0;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : ux_) m = std::max(m, std::abs(v));
        for (double v : uy_) m = std::max(m, std::abs(v));
        return m;
    }

    VectorField& axpy(double a, const VectorField& x) {
        check_grid(x);
        for (std::size_t k = 0; k < ux_.size(); ++k) ux_[k] += a * x.ux_[k];
        for (std::size_t k = 0; k < uy_.size(); ++k) uy_[k] += a * x.uy_[k];
        return *this;
    }
    VectorField& operator+=(const VectorField& o) { return axpy(1.0, o); }
    VectorField& operator-=(const VectorField& o) { return axpy(-1.0, o); }
    VectorField& operator*=(double s) {
        for (double& v : ux_) v *= s;
        for (double& v : uy_) v *= s;
        return *this;
    }

    friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
    friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
    friend VectorField operator*(double s, VectorField a) { return a *= s; }
    friend VectorField operator*(VectorField a, double s) { return a *= s; }

    void check_grid(const VectorField& o) const {
        if (!(grid_ == o.grid_)) throw DimensionError("vector fields live on different grids");
    }

private:
    Grid grid_;
    std::vector<double> ux_;
    std::vector<double> uy_;
};

using VelocityField = VectorField;

class ScalarField {
public:
    explicit ScalarField(const Grid& g) : grid_(g), values_(g.cells(), 0.0) {}

    const Grid& grid() const noexcept { return grid_; }
    double& operator()(int i, int j) { return values_[std::size_t(j) * grid_.nx() + i]; }
    double operator()(int i, int j) const { return values_[std::size_t(j) * grid_.nx() + i]; }
    std::vector<double>& data() noexcept { return values_; }
    const std::vector<double>& data() const noexcept { return values_; }

    double mean() const {
        double s = 0.0;
        for (double v : values_) s += v;
        return s / double(values_.size());
    }
    void remove_mean() {
        const double m = mean();
        for (double& v : values_) v -= m;
    }
    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    ScalarField& axpy(double a, const ScalarField& x) {
        check_grid(x);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += a * x.values_[k];
        return *this;
    }
    ScalarField& operator+=(const ScalarField& o) { return axpy(1.0, o); }
    ScalarField& operator-=(const ScalarField& o) { return axpy(-1.0, o); }
    ScalarField& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }
    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

    void check_grid(const ScalarField& o) const {
        if (!(grid_ == o.grid_)) throw DimensionError("scalar fields live on different grids");
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

/// Uniformly sampled scalar function of time, t_n = t0 + n*dt.
class TimeSeries {
public:
    TimeSeries(double t0, double dt, std::vector<double> samples)
        : t0_(t0), dt_(dt), samples_(std::move(samples)) {
        if (!(dt_ > 0.0) || !std::isfinite(dt_) || !std::isfinite(t0_))
            throw DomainError("time series needs a finite positive step");
        for (std::size_t n = 0; n < samples_.size(); ++n)
            if (!std::isfinite(samples_[n]))
                throw DomainError("time series sample " + std::to_string(n) + " is not finite");
    }
    TimeSeries(double t0, double dt, std::size_t count) : TimeSeries(t0, dt, std::vector<double>(count, 0.0)) {}

    double t0() const noexcept { return t0_; }
    double dt() const noexcept { return dt_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double time(std::size_t n) const noexcept { return t0_ + double(n) * dt_; }
    double operator[](std::size_t n) const { return samples_[n]; }
    double& operator[](std::size_t n) { return samples_[n]; }
    const std::vector<double>& samples() const noexcept { return samples_; }

    void check_compatible(const TimeSeries& o) const {
        if (o.size() != size() || o.dt_ != dt_ || o.t0_ != t0_)
            throw DimensionError("time series are sampled differently");
    }

    TimeSeries& operator+=(const TimeSeries& o) {
        check_compatible(o);
        for (std::size_t n = 0; n < size(); ++n) samples_[n] += o.samples_[n];
        return *this;
    }
    TimeSeries& operator-=(const TimeSeries& o) {
        check_compatible(o);
        for (std::size_t n = 0; n < size(); ++n) samples_[n] -= o.samples_[n];
        return *this;
    }
    TimeSeries& operator*=(double s) {
        for (double& v : samples_) v *= s;
        return *this;
    }
    friend TimeSeries operator+(TimeSeries a, const TimeSeries& b) { return a += b; }
    friend TimeSeries operator-(TimeSeries a, const TimeSeries& b) { return a -= b; }
    friend TimeSeries operator*(double s, TimeSeries a) { return a *= s; }

    template <class F>
    static TimeSeries sample(double t0, double dt, std::size_t count, F&& f) {
        std::vector<double> v(count);
        for (std::size_t n = 0; n < count; ++n) v[n] = f(t0 + double(n) * dt);
        return TimeSeries(t0, dt, std::move(v));
    }

private:
    double t0_;
    double dt_;
    std::vector<double> samples_;
};

/// Vector fields sampled at t_n = t0 + n*dt.
struct FieldSeries {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<VectorField> frames;

    std::size_t size() const noexcept { return frames.size(); }
    double time(std::size_t n) const noexcept { return t0 + double(n) * dt; }
    const VectorField& operator[](std::size_t n) const { return frames[n]; }
};

/// L2(0,T) norm of a series with the right-endpoint rectangle rule over n = 1..N.
inline double l2_time_norm(const TimeSeries& s) {
    double acc = 0.0;
    for (std::size_t n = 1; n < s.size(); ++n) acc += s[n] * s[n];
    return std::sqrt(s.dt() * acc);
}

// ---------------------------------------------------------------------------
// Sampling

template <class Fx, class Fy>
VectorField sample_vector(const Grid& g, Fx&& fx, Fy&& fy) {
    VectorField v(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i <= g.nx(); ++i) v.ux(i, j) = fx(i * g.hx(), (j + 0.5) * g.hy());
    for (int j = 0; j <= g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) v.uy(i, j) = fy((i + 0.5) * g.hx(), j * g.hy());
    return v;
}

template <class F>
ScalarField sample_scalar(const Grid& g, F&& f) {
    ScalarField s(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) s(i, j) = f((i + 0.5) * g.hx(), (j + 0.5) * g.hy());
    return s;
}

// ---------------------------------------------------------------------------
// Quadrature, inner products and norms

namespace detail {

// Trapezoid weight along the normal direction: boundary faces own half a cell.
inline double face_weight(int i, int n) { return (i == 0 || i == n) ? 0.5 : 1.0; }

inline double uy_at_xface(const VectorField& v, int i, int j) {
    const int nx = v.grid().nx();
    if (i == 0) return 0.5 * (v.uy(0, j) + v.uy(0, j + 1));
    if (i == nx) return 0.5 * (v.uy(nx - 1, j) + v.uy(nx - 1, j + 1));
    return 0.25 * (v.uy(i - 1, j) + v.uy(i, j) + v.uy(i - 1, j + 1) + v.uy(i, j + 1));
}

inline double ux_at_yface(const VectorField& v, int i, int j) {
    const int ny = v.grid().ny();
    if (j == 0) return 0.5 * (v.ux(i, 0) + v.ux(i + 1, 0));
    if (j == ny) return 0.5 * (v.ux(i, ny - 1) + v.ux(i + 1, ny - 1));
    return 0.25 * (v.ux(i, j - 1) + v.ux(i + 1, j - 1) + v.ux(i, j) + v.ux(i + 1, j));
}

}  // namespace detail

inline double inner_product(const VectorField& a, const VectorField& b) {
    a.check_grid(b);
    const Grid& g = a.grid();
    double sx = 0.0, sy = 0.0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i <= g.nx(); ++i) sx += detail::face_weight(i, g.nx()) * a.ux(i, j) * b.ux(i, j);
    for (int j = 0; j <= g.ny(); ++j) {
        const double w = detail::face_weight(j, g.ny());
        for (int i = 0; i < g.nx(); ++i) sy += w * a.uy(i, j) * b.uy(i, j);
    }
    return (sx + sy) * g.cell_area();
}

inline double l2_norm(const VectorField& a) { return std::sqrt(inner_product(a, a)); }

inline double inner_product(const ScalarField& a, const ScalarField& b) {
    a.check_grid(b);
    double s = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) s += a.data()[k] * b.data()[k];
    return s * a.grid().cell_area();
}

inline double l2_norm(const ScalarField& a) { return std::sqrt(inner_product(a, a)); }

constexpr double infinity_exponent = std::numeric_limits<double>::infinity();

/// (sum over faces |a|^{p-2} a_c^2 * weight)^{1/p}; |a| interpolates the
/// transverse component, so p = 2 reproduces inner_product(a, a) exactly.
inline double lp_norm(const VectorField& a, double p) {
    if (!(p >= 1.0)) throw DomainError("lp_norm exponent must be >= 1");
    const Grid& g = a.grid();
    const bool sup = std::isinf(p);
    double acc = 0.0;
    auto add = [&](double comp, double trans, double w) {
        if (comp == 0.0) return;
        const double mag = std::hypot(comp, trans);
        if (sup)
            acc = std::max(acc, mag);
        else
            acc += w * std::pow(mag, p - 2.0) * comp * comp;
    };
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i <= g.nx(); ++i)
            add(a.ux(i, j), detail::uy_at_xface(a, i, j), detail::face_weight(i, g.nx()));
    for (int j = 0; j <= g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            add(a.uy(i, j), detail::ux_at_yface(a, i, j), detail::face_weight(j, g.ny()));
    if (sup) return acc;
    return std::pow(acc * g.cell_area(), 1.0 / p);
}

// ---------------------------------------------------------------------------
// Stencils

/// Face gradient of a cell-centered scalar; boundary-normal faces are zero.
inline VectorField gradient(const ScalarField& s) {
    const Grid& g = s.grid();
    VectorField v(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 1; i < g.nx(); ++i) v.ux(i, j) = (s(i, j) - s(i - 1, j)) / g.hx();
    for (int j = 1; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) v.uy(i, j) = (s(i, j) - s(i, j - 1)) / g.hy();
    return v;
}

/// Cell divergence from all face fluxes, including boundary-normal ones.
inline ScalarField divergence(const VectorField& v) {
    const Grid& g = v.grid();
    ScalarField d(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            d(i, j) = (v.ux(i + 1, j) - v.ux(i, j)) / g.hx() + (v.uy(i, j + 1) - v.uy(i, j)) / g.hy();
    return d;
}

/// Five-point cell Laplacian with zero boundary flux.
inline ScalarField neumann_laplacian(const ScalarField& s) {
    const Grid& g = s.grid();
    const int nx = g.nx(), ny = g.ny();
    const double ax = 1.0 / (g.hx() * g.hx()), ay = 1.0 / (g.hy() * g.hy());
    ScalarField out(g);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double c = s(i, j);
            double acc = 0.0;
            if (i > 0) acc += (s(i - 1, j) - c) * ax;
            if (i < nx - 1) acc += (s(i + 1, j) - c) * ax;
            if (j > 0) acc += (s(i, j - 1) - c) * ay;
            if (j < ny - 1) acc += (s(i, j + 1) - c) * ay;
            out(i, j) = acc;
        }
    return out;
}

/// Componentwise five-point Laplacian on interior faces. Boundary-normal faces
/// act as Dirichlet data; tangential walls use the reflected ghost value -u.
inline VectorField laplacian_velocity(const VectorField& v) {
    const Grid& g = v.grid();
    const int nx = g.nx(), ny = g.ny();
    const double ax = 1.0 / (g.hx() * g.hx()), ay = 1.0 / (g.hy() * g.hy());
    VectorField out(g);
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            const double c = v.ux(i, j);
            const double dn = j > 0 ? v.ux(i, j - 1) : -c;
            const double up = j < ny - 1 ? v.ux(i, j + 1) : -c;
            out.ux(i, j) = (v.ux(i - 1, j) - 2.0 * c + v.ux(i + 1, j)) * ax + (dn - 2.0 * c + up) * ay;
        }
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double c = v.uy(i, j);
            const double lf = i > 0 ? v.uy(i - 1, j) : -c;
            const double rt = i < nx - 1 ? v.uy(i + 1, j) : -c;
            out.uy(i, j) = (lf - 2.0 * c + rt) * ax + (v.uy(i, j - 1) - 2.0 * c + v.uy(i, j + 1)) * ay;
        }
    return out;
}

namespace detail {

// Visits every difference quotient of the velocity stencil: fn(da, db) receives
// matching differences of a and b divided by the spacing, with wall terms
// carrying the reflected-ghost jump 2u/h.
template <class Fn>
void for_each_difference(const VectorField& a, const VectorField& b, Fn&& fn) {
    const Grid& g = a.grid();
    const int nx = g.nx(), ny = g.ny();
    const double hx = g.hx(), hy = g.hy();
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            fn((a.ux(i + 1, j) - a.ux(i, j)) / hx, (b.ux(i + 1, j) - b.ux(i, j)) / hx, 1.0);
    for (int i = 1; i < nx; ++i) {
        for (int j = 0; j + 1 < ny; ++j)
            fn((a.ux(i, j + 1) - a.ux(i, j)) / hy, (b.ux(i, j + 1) - b.ux(i, j)) / hy, 1.0);
        fn(2.0 * a.ux(i, 0) / hy, 2.0 * b.ux(i, 0) / hy, 0.5);
        fn(2.0 * a.ux(i, ny - 1) / hy, 2.0 * b.ux(i, ny - 1) / hy, 0.5);
    }
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            fn((a.uy(i, j + 1) - a.uy(i, j)) / hy, (b.uy(i, j + 1) - b.uy(i, j)) / hy, 1.0);
    for (int j = 1; j < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i)
            fn((a.uy(i + 1, j) - a.uy(i, j)) / hx, (b.uy(i + 1, j) - b.uy(i, j)) / hx, 1.0);
        fn(2.0 * a.uy(0, j) / hx, 2.0 * b.uy(0, j) / hx, 0.5);
        fn(2.0 * a.uy(nx - 1, j) / hx, 2.0 * b.uy(nx - 1, j) / hx, 0.5);
    }
}

}  // namespace detail

/// Discrete Dirichlet form; equals -<laplacian_velocity(a), b> when b has zero normals.
inline double h1_inner(const VectorField& a, const VectorField& b) {
    a.check_grid(b);
    double acc = 0.0;
    detail::for_each_difference(a, b, [&](double da, double db, double w) { acc += w * da * db; });
    return acc * a.grid().cell_area();
}

inline double h1_seminorm(const VectorField& v) { return std::sqrt(h1_inner(v, v)); }

/// Largest stencil difference quotient (discrete sup norm of the gradient).
inline double gradient_max_abs(const VectorField& v) {
    double m = 0.0;
    detail::for_each_difference(v, v, [&](double da, double, double) { m = std::max(m, std::abs(da)); });
    return m;
}

/// (||v||^2 + ||grad v||^2 + ||lap v||^2)^{1/2}
inline double h2_norm(const VectorField& v) {
    const double l = l2_norm(laplacian_velocity(v));
    return std::sqrt(inner_product(v, v) + h1_inner(v, v) + l * l);
}

}  // namespace cbf
