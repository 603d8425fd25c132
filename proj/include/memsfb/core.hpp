/** @file core.hpp

    @brief Model parameters, grids, quadrature, finite-difference derivatives
    and the mechanical energy of a clamped plate deflection.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace memsfb
{

/// Lower margin kept between the deflection and the ground plate at -1.
inline constexpr double kTouchdownFloor = 1e-6;

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument, shape mismatch or violated precondition.
class DomainError : public Error
{
public:
    using Error::Error;
};

/// The deflection comes within kTouchdownFloor of the ground plate.
class TouchdownError : public Error
{
public:
    using Error::Error;
};

/// A linear or nonlinear solver failed to meet its tolerance.
class SolverError : public Error
{
public:
    SolverError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), m_residual(residual)
    {
    }
    double residual() const { return m_residual; }

private:
    double m_residual;
};

struct ModelParams
{
    double beta    = 1.0; // bending stiffness
    double tau     = 0.0; // external stretching
    double a       = 0.0; // self-stretching coefficient
    double epsilon = 1.0; // aspect ratio

    void validate() const
    {
        if (!(beta > 0.0))
            throw DomainError("beta must be positive");
        if (!(tau >= 0.0))
            throw DomainError("tau must be nonnegative");
        if (!(a >= 0.0))
            throw DomainError("a must be nonnegative");
        if (!(epsilon > 0.0))
            throw DomainError("epsilon must be positive");
    }
};

/// Uniform grid on [-1, 1] with an odd number of nodes, so x = 0 is a node.
class Grid1D
{
public:
    explicit Grid1D(int n) : m_n(n)
    {
        if (n < 5 || n % 2 == 0)
            throw DomainError("Grid1D needs an odd node count >= 5, got " + std::to_string(n));
        m_h = 2.0 / (n - 1);
    }

    int size() const { return m_n; }
    double h() const { return m_h; }
    int center() const { return (m_n - 1) / 2; }
    int mirror(int i) const { return m_n - 1 - i; }

    // Written symmetrically so that x(mirror(i)) == -x(i) holds bitwise.
    double x(int i) const
    {
        return i <= center() ? -1.0 + i * m_h : 1.0 - (m_n - 1 - i) * m_h;
    }

    std::vector<double> nodes() const
    {
        std::vector<double> out(m_n);
        for (int i = 0; i < m_n; ++i)
            out[i] = x(i);
        return out;
    }

    bool operator==(const Grid1D& o) const { return m_n == o.m_n; }

private:
    int m_n;
    double m_h;
};

/// Tensor grid on the fixed rectangle [-1,1] x [0,1].
class Grid2D
{
public:
    Grid2D(int nx, int neta) : m_x(nx), m_neta(neta)
    {
        if (neta < 5 || neta % 2 == 0)
            throw DomainError("Grid2D needs an odd eta node count >= 5, got " + std::to_string(neta));
        m_heta = 1.0 / (neta - 1);
    }

    const Grid1D& xgrid() const { return m_x; }
    int nx() const { return m_x.size(); }
    int neta() const { return m_neta; }
    double hx() const { return m_x.h(); }
    double heta() const { return m_heta; }
    double x(int i) const { return m_x.x(i); }
    double eta(int j) const { return j == m_neta - 1 ? 1.0 : j * m_heta; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * m_neta + j; }
    std::size_t points() const { return static_cast<std::size_t>(nx()) * m_neta; }

    bool operator==(const Grid2D& o) const { return m_x == o.m_x && m_neta == o.m_neta; }

private:
    Grid1D m_x;
    int m_neta;
    double m_heta;
};

/// Nodal values on a Grid2D, x-major (eta varies fastest).
struct Field2D
{
    Grid2D grid;
    std::vector<double> values;

    explicit Field2D(const Grid2D& g, double fill = 0.0) : grid(g), values(g.points(), fill) {}

    double& operator()(int i, int j) { return values[grid.index(i, j)]; }
    double operator()(int i, int j) const { return values[grid.index(i, j)]; }
};

/// Plate deflection sampled on a Grid1D.
class DeflectionProfile
{
public:
    DeflectionProfile(const Grid1D& grid, std::vector<double> values)
        : m_grid(grid), m_values(std::move(values))
    {
        if (static_cast<int>(m_values.size()) != grid.size())
            throw DomainError("profile length does not match grid");
    }

    explicit DeflectionProfile(const Grid1D& grid) : m_grid(grid), m_values(grid.size(), 0.0) {}

    template <class F>
    static DeflectionProfile sample(const Grid1D& grid, F&& f)
    {
        std::vector<double> v(grid.size());
        for (int i = 0; i < grid.size(); ++i)
            v[i] = f(grid.x(i));
        return DeflectionProfile(grid, std::move(v));
    }

    const Grid1D& grid() const { return m_grid; }
    std::span<const double> values() const { return m_values; }
    std::vector<double>& mutable_values() { return m_values; }
    double operator[](int i) const { return m_values[i]; }
    int size() const { return m_grid.size(); }

    double min() const { return *std::min_element(m_values.begin(), m_values.end()); }
    double max() const { return *std::max_element(m_values.begin(), m_values.end()); }
    double sup_norm() const { return std::max(std::abs(min()), std::abs(max())); }

    bool is_clamped() const { return m_values.front() == 0.0 && m_values.back() == 0.0; }

    /// -1 < u <= 0 at every node.
    bool admissible() const { return min() > -1.0 && max() <= 0.0; }

    double asymmetry() const
    {
        double worst = 0.0;
        for (int i = 0; i < size(); ++i)
            worst = std::max(worst, std::abs(m_values[i] - m_values[m_grid.mirror(i)]));
        return worst;
    }

    DeflectionProfile scaled(double t) const
    {
        std::vector<double> v(m_values);
        for (auto& x : v)
            x *= t;
        return DeflectionProfile(m_grid, std::move(v));
    }

    /// Replace each value by the mean with its mirror image.
    void symmetrize()
    {
        for (int i = 0; i < m_grid.center(); ++i)
        {
            const int k  = m_grid.mirror(i);
            const double m = 0.5 * (m_values[i] + m_values[k]);
            m_values[i] = m_values[k] = m;
        }
    }

private:
    Grid1D m_grid;
    std::vector<double> m_values;
};

/// Throws TouchdownError unless min u > -1 + kTouchdownFloor.
inline void require_gap(const DeflectionProfile& u)
{
    if (!(u.min() > -1.0 + kTouchdownFloor))
        throw TouchdownError("deflection touches down: min u = " + std::to_string(u.min()));
}

inline void require_admissible(const DeflectionProfile& u)
{
    require_gap(u);
    if (u.max() > 0.0)
        throw DomainError("deflection must be nonpositive, max u = " + std::to_string(u.max()));
}

// ---------------------------------------------------------------------------
// quadrature

/// Composite Simpson weights for n (odd) nodes with spacing h.
inline std::vector<double> simpson_weights(int n, double h)
{
    if (n < 3 || n % 2 == 0)
        throw DomainError("Simpson rule needs an odd node count >= 3");
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i)
        w[i] = (i == 0 || i == n - 1) ? h / 3.0 : (i % 2 == 1 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
    return w;
}

inline double quad1d(const Grid1D& grid, std::span<const double> f)
{
    if (static_cast<int>(f.size()) != grid.size())
        throw DomainError("quad1d: sample count does not match grid");
    const auto w = simpson_weights(grid.size(), grid.h());
    double s = 0.0;
    for (int i = 0; i < grid.size(); ++i)
        s += w[i] * f[i];
    return s;
}

inline double quad2d(const Grid2D& grid, std::span<const double> f)
{
    if (f.size() != grid.points())
        throw DomainError("quad2d: sample count does not match grid");
    const auto wx = simpson_weights(grid.nx(), grid.hx());
    const auto we = simpson_weights(grid.neta(), grid.heta());
    double s = 0.0;
    for (int i = 0; i < grid.nx(); ++i)
    {
        double col = 0.0;
        for (int j = 0; j < grid.neta(); ++j)
            col += we[j] * f[grid.index(i, j)];
        s += wx[i] * col;
    }
    return s;
}

/// Simpson-weighted L2 inner product on the grid.
inline double inner(const Grid1D& grid, std::span<const double> f, std::span<const double> g)
{
    if (f.size() != g.size() || static_cast<int>(f.size()) != grid.size())
        throw DomainError("inner: length mismatch");
    const auto w = simpson_weights(grid.size(), grid.h());
    double s = 0.0;
    for (int i = 0; i < grid.size(); ++i)
        s += w[i] * f[i] * g[i];
    return s;
}

inline double norm_l2(const Grid1D& grid, std::span<const double> f)
{
    return std::sqrt(inner(grid, f, f));
}

inline double norm_inf(std::span<const double> f)
{
    double m = 0.0;
    for (double v : f)
        m = std::max(m, std::abs(v));
    return m;
}

// ---------------------------------------------------------------------------
// finite differences
//
// Clamped convention: the ghost value beyond each end is the reflection of the
// first interior value, u_{-1} = u_1 and u_n = u_{n-2}. This closes the centered
// stencils so that the discrete slope vanishes at x = +-1.

namespace detail
{
inline double ghost(std::span<const double> u, int i)
{
    const int n = static_cast<int>(u.size());
    if (i < 0)
        return u[-i];
    if (i >= n)
        return u[2 * (n - 1) - i];
    return u[i];
}
} // namespace detail

inline std::vector<double> d1(const DeflectionProfile& u)
{
    const auto v = u.values();
    const int n  = u.size();
    const double h = u.grid().h();
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = (detail::ghost(v, i + 1) - detail::ghost(v, i - 1)) / (2.0 * h);
    return out;
}

inline std::vector<double> d2(const DeflectionProfile& u)
{
    const auto v = u.values();
    const int n  = u.size();
    const double h2 = u.grid().h() * u.grid().h();
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = (detail::ghost(v, i + 1) - 2.0 * v[i] + detail::ghost(v, i - 1)) / h2;
    return out;
}

/// Fourth difference on interior nodes; the boundary rows are zero.
inline std::vector<double> d4(const DeflectionProfile& u)
{
    const auto v = u.values();
    const int n  = u.size();
    const double h  = u.grid().h();
    const double h4 = h * h * h * h;
    std::vector<double> out(n, 0.0);
    for (int i = 1; i < n - 1; ++i)
    {
        const double s = detail::ghost(v, i - 2) - 4.0 * v[i - 1] + 6.0 * v[i] - 4.0 * v[i + 1]
                       + detail::ghost(v, i + 2);
        out[i] = s / h4;
    }
    return out;
}

/// First derivative of a non-clamped nodal array: centered inside, one-sided
/// second order at the two ends.
inline std::vector<double> diff_open(std::span<const double> f, double h)
{
    const int n = static_cast<int>(f.size());
    std::vector<double> out(n);
    for (int i = 1; i < n - 1; ++i)
        out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    out[0]     = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return out;
}

// ---------------------------------------------------------------------------
// mechanical energy
//
// The bending and stretching integrals use the trapezoid pairing, for which
// summation by parts is exact on the clamped stencils:
//
//     trapz(d2(u)^2)  = <d4 u, u>_h,      h sum (forward difference)^2 = -<d2 u, u>_h.
//
// The discrete energy is then exactly the functional whose gradient in <.,.>_h
// is beta d4 u - (tau + a ||u'||^2) d2 u.

/// Trapezoid inner product h sum' f_i g_i (half weights at the two ends).
inline double pairing(const Grid1D& grid, std::span<const double> f, std::span<const double> g)
{
    if (f.size() != g.size() || static_cast<int>(f.size()) != grid.size())
        throw DomainError("pairing: length mismatch");
    const int n = grid.size();
    double s    = 0.5 * (f[0] * g[0] + f[n - 1] * g[n - 1]);
    for (int i = 1; i < n - 1; ++i)
        s += f[i] * g[i];
    return grid.h() * s;
}

inline double pairing_norm(const Grid1D& grid, std::span<const double> f)
{
    return std::sqrt(pairing(grid, f, f));
}

/// ||u''||^2 as the trapezoid sum of d2(u)^2.
inline double bending_norm(const DeflectionProfile& u)
{
    const auto dd = d2(u);
    return pairing(u.grid(), dd, dd);
}

/// ||u'||^2 as h times the sum of squared forward differences.
inline double stretch_norm(const DeflectionProfile& u)
{
    const auto v   = u.values();
    const double h = u.grid().h();
    double s       = 0.0;
    for (int i = 0; i + 1 < u.size(); ++i)
    {
        const double d = (v[i + 1] - v[i]) / h;
        s += d * d;
    }
    return h * s;
}

/// E_m without the admissibility check, e.g. for phi_1 which touches -1.
inline double mechanical_energy_unchecked(const DeflectionProfile& u, const ModelParams& p)
{
    const double s = stretch_norm(u);
    return 0.5 * p.beta * bending_norm(u) + 0.5 * (p.tau + 0.5 * p.a * s) * s;
}

/// beta/2 ||u''||^2 + 1/2 (tau + a/2 ||u'||^2) ||u'||^2
inline double mechanical_energy(const DeflectionProfile& u, const ModelParams& p)
{
    require_admissible(u);
    return mechanical_energy_unchecked(u, p);
}

} // namespace memsfb
