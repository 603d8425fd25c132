/** @file energy.hpp

    @brief Electrostatic energy, its two-sided bounds, the plate boundary
    identity, the shape derivative and radial rescaling onto an energy level.
*/

#pragma once

#include "memsfb/core.hpp"
#include "memsfb/elliptic.hpp"

#include <cmath>
#include <limits>
#include <tuple>
#include <utility>
#include <vector>

namespace memsfb
{

/** E_e(u) = int_{Omega(u)} eps^2 psi_x^2 + psi_z^2 evaluated on the fixed
    rectangle. With dz = (1+u) deta,

        psi_x = Phi_x - eta U (1 + Phi_eta),   psi_z = (1 + Phi_eta)/(1+u).
*/
inline double electrostatic_energy(const DeflectionProfile& u, const ModelParams& p,
                                   const TransformedPotential& pot)
{
    require_gap(u);
    const auto& g = pot.phi.grid;
    if (!(g.xgrid() == u.grid()))
        throw DomainError("electrostatic_energy: grid mismatch");
    const auto c    = coefficients(u);
    const double e2 = p.epsilon * p.epsilon;

    // Nodal derivatives of Phi: centered inside, one-sided on the edges.
    std::vector<double> col(g.neta()), row(g.nx());
    Field2D phix(g), phie(g);
    for (int i = 0; i < g.nx(); ++i)
    {
        for (int j = 0; j < g.neta(); ++j)
            col[j] = pot.phi(i, j);
        const auto d = diff_open(col, g.heta());
        for (int j = 0; j < g.neta(); ++j)
            phie(i, j) = d[j];
    }
    for (int j = 0; j < g.neta(); ++j)
    {
        for (int i = 0; i < g.nx(); ++i)
            row[i] = pot.phi(i, j);
        const auto d = diff_open(row, g.hx());
        for (int i = 0; i < g.nx(); ++i)
            phix(i, j) = d[i];
    }

    std::vector<double> integrand(g.points());
    for (int i = 0; i < g.nx(); ++i)
    {
        const double gap = 1.0 + u[i];
        for (int j = 0; j < g.neta(); ++j)
        {
            const double a  = 1.0 + phie(i, j);
            const double px = phix(i, j) - g.eta(j) * c.U[i] * a;
            const double pz = a / gap;
            integrand[g.index(i, j)] = (e2 * px * px + pz * pz) * gap;
        }
    }
    return quad2d(g, integrand);
}

/// Solved potential bundled with everything derived from it.
struct PotentialState
{
    TransformedPotential pot;
    std::vector<double> g; // traction on the plate
    double energy = 0.0;   // E_e
};

inline PotentialState solve_state(const DeflectionProfile& u, const ModelParams& p, const Grid2D& grid)
{
    PotentialState s{solve_transformed(u, p, grid), {}, 0.0};
    s.g      = traction(u, p, s.pot);
    s.energy = electrostatic_energy(u, p, s.pot);
    return s;
}

inline double electrostatic_energy(const DeflectionProfile& u, const ModelParams& p, const Grid2D& grid)
{
    return electrostatic_energy(u, p, solve_transformed(u, p, grid));
}

/// (int dx/(1+u), int (1 + eps^2 u'^2) dx/(1+u))
inline std::pair<double, double> energy_bounds(const DeflectionProfile& u, const ModelParams& p)
{
    require_admissible(u);
    const auto du   = d1(u);
    const double e2 = p.epsilon * p.epsilon;
    std::vector<double> lo(u.size()), hi(u.size());
    for (int i = 0; i < u.size(); ++i)
    {
        lo[i] = 1.0 / (1.0 + u[i]);
        hi[i] = (1.0 + e2 * du[i] * du[i]) * lo[i];
    }
    return {quad1d(u.grid(), lo), quad1d(u.grid(), hi)};
}

/// | -int u (1 + eps^2 u'^2) psi_z(x,u(x)) dx - (E_e - 2) |
inline double boundary_identity_residual(const DeflectionProfile& u, const ModelParams& p,
                                         const TransformedPotential& pot)
{
    const auto du   = d1(u);
    const auto dz   = dz_psi_on_plate(u, pot);
    const double e2 = p.epsilon * p.epsilon;
    std::vector<double> f(u.size());
    for (int i = 0; i < u.size(); ++i)
        f[i] = -u[i] * (1.0 + e2 * du[i] * du[i]) * dz[i];
    const double lhs = quad1d(u.grid(), f);
    return std::abs(lhs - (electrostatic_energy(u, p, pot) - 2.0));
}

struct EnergyReport
{
    double E_m               = 0.0;
    double E_e               = 0.0;
    double lower_bound       = 0.0;
    double upper_bound       = 0.0;
    double identity_residual = 0.0;
};

inline EnergyReport energy_report(const DeflectionProfile& u, const ModelParams& p, const Grid2D& grid)
{
    const auto pot = solve_transformed(u, p, grid);
    EnergyReport r;
    r.E_m                        = mechanical_energy(u, p);
    r.E_e                        = electrostatic_energy(u, p, pot);
    std::tie(r.lower_bound, r.upper_bound) = energy_bounds(u, p);
    r.identity_residual          = boundary_identity_residual(u, p, pot);
    return r;
}

struct ShapeDerivativeCheck
{
    double fd       = 0.0; // (E_e(u+sv) - E_e(u-sv)) / 2s
    double analytic = 0.0; // -int g(u) v dx
    double gap      = 0.0;
};

inline ShapeDerivativeCheck shape_derivative_check(const DeflectionProfile& u, const DeflectionProfile& v,
                                                   const ModelParams& p, const Grid2D& grid, double s)
{
    if (!(u.grid() == v.grid()))
        throw DomainError("shape_derivative_check: grid mismatch");
    if (!(s > 0.0))
        throw DomainError("shape_derivative_check: step must be positive");
    std::vector<double> plus(u.size()), minus(u.size());
    for (int i = 0; i < u.size(); ++i)
    {
        plus[i]  = u[i] + s * v[i];
        minus[i] = u[i] - s * v[i];
    }
    const DeflectionProfile up(u.grid(), std::move(plus)), um(u.grid(), std::move(minus));
    // Perturbations may leave u <= 0; E_e only needs 1 + u > 0.
    require_admissible(u);
    require_gap(up);
    require_gap(um);

    ShapeDerivativeCheck out;
    if (norm_inf(v.values()) == 0.0)
        return out;
    const auto state = solve_state(u, p, grid);
    out.fd       = (electrostatic_energy(up, p, grid) - electrostatic_energy(um, p, grid)) / (2.0 * s);
    out.analytic = -inner(u.grid(), state.g, v.values());
    out.gap      = std::abs(out.fd - out.analytic);
    return out;
}

/// A root t of E_e(t u) = target together with every evaluated sample.
struct RadialSolve
{
    double t = 0.0;
    double energy = 0.0;
    int solves = 0;
    std::vector<std::pair<double, double>> samples; // (t, E_e(t u)), in evaluation order
};

/** Find t in [0, t_max] with E_e(t u) = target for u <= 0. The map is
    continuous and non-decreasing with value 2 at t = 0, and its derivative is
    -int g(t u) u dx, which drives a safeguarded Newton step inside a shrinking
    bracket; the bisection midpoint is used whenever Newton leaves it.
    Iteration starts from t_start (defaults to t_max).
*/
inline RadialSolve radial_solve(const DeflectionProfile& u, const ModelParams& p, const Grid2D& grid,
                                double target, double t_max, double rel_tol = 1e-8, int max_iter = 60,
                                double t_start = -1.0)
{
    if (!(target > 2.0))
        throw DomainError("energy level must exceed 2");
    if (!(t_max > 0.0))
        throw DomainError("radial_solve: t_max must be positive");
    RadialSolve out;
    auto eval = [&](double t) {
        const auto ut = u.scaled(t);
        const auto st = solve_state(ut, p, grid);
        ++out.solves;
        out.samples.emplace_back(t, st.energy);
        return std::make_pair(st.energy - target, -inner(u.grid(), st.g, u.values()));
    };

    double lo = 0.0, hi = t_max;
    bool hi_checked = false;
    double t = (t_start > 0.0 && t_start < t_max) ? t_start : t_max;
    double f = 0.0, df = 0.0;
    for (int it = 0; it <= max_iter; ++it)
    {
        std::tie(f, df) = eval(t);
        if (std::abs(f) <= rel_tol * target)
        {
            out.t      = t;
            out.energy = f + target;
            return out;
        }
        if (f < 0.0)
        {
            if (t == t_max)
                throw SolverError("energy level out of bracket: E_e(t_max u) below target", f);
            lo = t;
        }
        else
        {
            hi         = t;
            hi_checked = true;
        }
        double next = (df > 0.0) ? t - f / df : std::numeric_limits<double>::quiet_NaN();
        if (!(next > lo && next < hi))
            next = hi_checked ? 0.5 * (lo + hi) : t_max;
        t = next;
    }
    throw SolverError("radial rescaling did not converge", f);
}

/// t in [0,1] with E_e(t u) = rho; requires E_e(u) >= rho.
inline RadialSolve rescale_to_energy(const DeflectionProfile& u, const ModelParams& p, const Grid2D& grid,
                                     double rho, double rel_tol = 1e-8)
{
    if (!(rho > 2.0))
        throw DomainError("rescale_to_energy: rho must exceed 2");
    require_admissible(u);
    return radial_solve(u, p, grid, rho, 1.0, rel_tol);
}

/// Pointwise-order slack for monotonicity_check.
inline constexpr double kOrderSlack = 1e-12;

/// For u1 <= u2 pointwise: E_e(u2) <= E_e(u1) + tol.
inline bool monotonicity_check(const DeflectionProfile& u1, const DeflectionProfile& u2, const ModelParams& p,
                               const Grid2D& grid, double tol = 1e-10)
{
    if (!(u1.grid() == u2.grid()))
        throw DomainError("monotonicity_check: grid mismatch");
    for (int i = 0; i < u1.size(); ++i)
        if (u1[i] > u2[i] + kOrderSlack)
            throw DomainError("monotonicity_check: profiles are not ordered");
    require_admissible(u1);
    require_admissible(u2);
    return electrostatic_energy(u2, p, grid) <= electrostatic_energy(u1, p, grid) + tol;
}

} // namespace memsfb
