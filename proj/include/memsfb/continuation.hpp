/** @file continuation.hpp

    @brief The small-voltage branch lambda -> U_lambda from (0, 0), traced by
    Newton's method in the natural parameter, and its comparison with the
    constrained minimizers.

    Unknowns are the interior nodes of one half of the beam (centre included);
    the other half is the mirror image. The mechanical part of the Jacobian is
    exact, including the rank-one term of the nonlocal stretch. The traction
    part is a forward difference per column: the perturbed potential is the
    base potential corrected by one back-substitution against the base
    factorization, Phi + A(u)^{-1} (f(u+de) - A(u+de) Phi).
*/

#pragma once

#include "memsfb/core.hpp"
#include "memsfb/elliptic.hpp"
#include "memsfb/energy.hpp"
#include "memsfb/optimizer.hpp"
#include "memsfb/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace memsfb
{

struct BranchPoint
{
    double lambda = 0.0;
    DeflectionProfile u;
    double E_e             = 2.0;
    double sup_norm        = 0.0;
    double newton_residual = 0.0;
    int newton_iterations  = 0;
};

struct NewtonOptions
{
    double tol          = 1e-8; // on ||F||_inf
    int max_iterations  = 30;
    double fd_rel_step  = 1e-6; // times 1 + ||u||_inf
    int max_halvings    = 6;
};

/// F(u, lambda) = beta d4 u - (tau + a ||u'||^2) d2 u + lambda g(u) on interior
/// nodes, zero on the boundary.
inline std::vector<double> residual(const DeflectionProfile& u, double lambda, const ModelParams& p,
                                    std::span<const double> g)
{
    auto F = em_gradient(u, p);
    for (int i = 1; i < u.size() - 1; ++i)
        F[i] += lambda * g[i];
    return F;
}

inline std::vector<double> residual(const DeflectionProfile& u, double lambda, const ModelParams& p,
                                    const TransformedPotential& pot)
{
    return residual(u, lambda, p, traction(u, p, pot));
}

namespace detail
{

/// Half-beam unknowns: nodes centre .. n-2.
struct HalfIndex
{
    int c, m;
    explicit HalfIndex(const Grid1D& g) : c(g.center()), m(g.size() - 1 - g.center()) {}
    int node(int k) const { return c + k; }
};

inline double half_sup(const HalfIndex& hi, std::span<const double> F)
{
    double s = 0.0;
    for (int k = 0; k < hi.m; ++k)
        s = std::max(s, std::abs(F[hi.node(k)]));
    return s;
}

/// A u Phi - f_u on interior unknowns.
inline Eigen::VectorXd operator_defect(const DeflectionProfile& u, const ModelParams& p, const Grid2D& grid,
                                       const Eigen::VectorXd& phi)
{
    return assemble(u, p, grid) * phi - gather_interior(rhs(u, p, grid));
}

/// Even-reduced Jacobian of F at (u, lambda).
inline Eigen::MatrixXd reduced_jacobian(const DeflectionProfile& u, double lambda, const ModelParams& p,
                                        const Grid2D& grid, const TransformedOperator& op,
                                        const TransformedPotential& pot, std::span<const double> g,
                                        double delta)
{
    const Grid1D& gx = u.grid();
    const HalfIndex hi(gx);

    const double N       = stretch_norm(u);
    const Eigen::MatrixXd K = Eigen::MatrixXd(clamped_operator(gx, p.beta, p.tau + p.a * N));
    const auto q2        = d2(u);

    Eigen::MatrixXd J(hi.m, hi.m);
    for (int col = 0; col < hi.m; ++col)
    {
        const int i  = hi.node(col);
        const int im = gx.mirror(i);
        for (int row = 0; row < hi.m; ++row)
        {
            const int r = hi.node(row);
            double v    = K(r - 1, i - 1);
            if (im != i)
                v += K(r - 1, im - 1);
            // d/du_k of -a N d2u = 2 a h (d2u)_r (d2u)_k.
            double rank1 = 2.0 * p.a * gx.h() * q2[r] * q2[i];
            if (im != i)
                rank1 *= 2.0;
            J(row, col) = v + rank1;
        }
    }
    if (lambda == 0.0)
        return J;

    const Eigen::VectorXd phi0 = gather_interior(pot.phi);
    const Eigen::VectorXd base = operator_defect(u, p, grid, phi0);
    for (int col = 0; col < hi.m; ++col)
    {
        const int i  = hi.node(col);
        const int im = gx.mirror(i);
        std::vector<double> v(u.values().begin(), u.values().end());
        v[i] += delta;
        if (im != i)
            v[im] += delta;
        const DeflectionProfile up(gx, std::move(v));
        const Eigen::VectorXd r = operator_defect(up, p, grid, phi0) - base;
        auto [dphi, rel] = op.solve(-r);
        (void)rel;
        const TransformedPotential pp{scatter_interior(grid, phi0 + dphi)};
        const auto gp = traction(up, p, pp);
        for (int row = 0; row < hi.m; ++row)
        {
            const int rnode = hi.node(row);
            J(row, col) += lambda * (gp[rnode] - g[rnode]) / delta;
        }
    }
    return J;
}

} // namespace detail

/// Solve F(u, lambda) = 0 from u0. Throws SolverError on divergence and
/// TouchdownError if an iterate cannot be kept off the ground plate.
inline BranchPoint newton_solve(double lambda, const DeflectionProfile& u0, const ModelParams& p,
                                const Grid2D& grid, const NewtonOptions& opts = {})
{
    if (!(lambda >= 0.0))
        throw DomainError("newton_solve: lambda must be nonnegative");
    p.validate();
    if (!(u0.grid() == grid.xgrid()))
        throw DomainError("newton_solve: grid mismatch");
    require_gap(u0);
    const Grid1D& gx = grid.xgrid();
    const detail::HalfIndex hi(gx);

    DeflectionProfile u = u0;
    u.symmetrize();
    auto pot = solve_transformed(u, p, grid);
    auto g   = traction(u, p, pot);
    auto F   = residual(u, lambda, p, g);
    double fn = detail::half_sup(hi, F);

    for (int it = 0;; ++it)
    {
        if (fn <= opts.tol)
        {
            BranchPoint bp{lambda, u, electrostatic_energy(u, p, pot), u.sup_norm(), fn, it};
            return bp;
        }
        if (it >= opts.max_iterations)
            throw SolverError("newton did not converge at lambda = " + std::to_string(lambda), fn);

        const TransformedOperator op(u, p, grid);
        const double delta = opts.fd_rel_step * (1.0 + u.sup_norm());
        const Eigen::MatrixXd J = detail::reduced_jacobian(u, lambda, p, grid, op, pot, g, delta);
        Eigen::VectorXd rhsv(hi.m);
        for (int k = 0; k < hi.m; ++k)
            rhsv[k] = -F[hi.node(k)];
        const Eigen::VectorXd du = J.partialPivLu().solve(rhsv);
        if (!du.allFinite())
            throw SolverError("newton step is not finite", fn);

        bool accepted = false;
        double s      = 1.0;
        for (int h = 0; h <= opts.max_halvings; ++h, s *= 0.5)
        {
            std::vector<double> v(u.values().begin(), u.values().end());
            for (int k = 0; k < hi.m; ++k)
            {
                const int i = hi.node(k);
                v[i] += s * du[k];
                v[gx.mirror(i)] = v[i];
            }
            DeflectionProfile trial(gx, std::move(v));
            if (!(trial.min() > -1.0 + kTouchdownFloor))
                continue;
            auto tpot      = solve_transformed(trial, p, grid);
            auto tg        = traction(trial, p, tpot);
            auto tF        = residual(trial, lambda, p, tg);
            const double t = detail::half_sup(hi, tF);
            if (t < fn)
            {
                u        = std::move(trial);
                pot      = std::move(tpot);
                g        = std::move(tg);
                F        = std::move(tF);
                fn       = t;
                accepted = true;
                break;
            }
        }
        if (!accepted)
        {
            if (s < 1.0 && u.min() < -0.9)
                throw TouchdownError("newton iterate approached the ground plate at lambda = "
                                     + std::to_string(lambda));
            throw SolverError("newton diverged at lambda = " + std::to_string(lambda), fn);
        }
    }
}

struct BranchResult
{
    std::vector<BranchPoint> points;
    bool complete = false;
    double failed_lambda = 0.0; // first lambda that was not reached
    std::string failure;
};

/// Natural-parameter continuation on lambda_j = j lambda_max / steps.
inline BranchResult continue_branch(double lambda_max, int steps, const ModelParams& p, const Grid2D& grid,
                                    const NewtonOptions& opts = {})
{
    if (steps < 2)
        throw DomainError("continue_branch: steps must be at least 2");
    if (!(lambda_max > 0.0))
        throw DomainError("continue_branch: lambda_max must be positive");
    p.validate();
    BranchResult out;
    const Grid1D& gx = grid.xgrid();
    out.points.push_back(BranchPoint{0.0, DeflectionProfile(gx), 2.0, 0.0, 0.0, 0});
    for (int j = 1; j <= steps; ++j)
    {
        const double lambda = lambda_max * j / steps;
        try
        {
            out.points.push_back(newton_solve(lambda, out.points.back().u, p, grid, opts));
        }
        catch (const Error& e)
        {
            out.failed_lambda = lambda;
            out.failure       = e.what();
            return out;
        }
    }
    out.complete = true;
    return out;
}

/// w with beta d4 w - tau d2 w = 1; U_lambda = -lambda w + O(lambda^2).
inline DeflectionProfile first_order_profile(const ModelParams& p, const Grid1D& grid)
{
    const std::vector<double> one(grid.size(), 1.0);
    return solve_clamped(grid, p.beta, p.tau, one);
}

/// ||U_lambda + lambda w||_inf / lambda^2.
inline double first_order_ratio(double lambda, const ModelParams& p, const Grid2D& grid,
                                const NewtonOptions& opts = {})
{
    if (!(lambda > 0.0))
        throw DomainError("first_order_ratio: lambda must be positive");
    const auto w = first_order_profile(p, grid.xgrid());
    const auto U = newton_solve(lambda, w.scaled(-lambda), p, grid, opts);
    std::vector<double> d(w.size());
    for (int i = 0; i < w.size(); ++i)
        d[i] = U.u[i] + lambda * w[i];
    return norm_inf(d) / (lambda * lambda);
}

struct MultiplicityReport
{
    double rho        = 0.0;
    double lambda_rho = 0.0;
    DeflectionProfile u_rho;
    DeflectionProfile U_branch;
    double E_e_minimizer = 0.0;
    double E_e_branch    = 0.0;
    double energy_gap    = 0.0; // rho - E_e(U_lambda_rho)
    double sup_difference = 0.0;
    double tolerance     = 0.0;
    bool reached         = false;
    bool demonstrated    = false;
    bool minimizer_converged = false;
    std::string note;
};

/** Minimize at rho, continue the branch to lambda_rho and compare. The
    numerical tolerance of an energy value is taken as the largest of the
    constraint defect of u_rho and the boundary-identity residuals of both
    profiles.
*/
inline MultiplicityReport multiplicity_report(double rho, const ModelParams& p, const Grid2D& grid,
                                              int steps = 8, const OptimizerOptions& oopts = {},
                                              const NewtonOptions& nopts = {})
{
    if (!(rho > 2.0))
        throw DomainError("multiplicity_report: rho must exceed 2");
    const auto m = minimize_mechanical(rho, p, grid, oopts);
    MultiplicityReport r{.rho = rho, .lambda_rho = m.lambda_rho, .u_rho = m.u_rho, .U_branch = DeflectionProfile(grid.xgrid())};
    r.E_e_minimizer       = m.E_e;
    r.minimizer_converged = m.converged;

    const auto branch = continue_branch(m.lambda_rho, steps, p, grid, nopts);
    if (!branch.complete)
    {
        r.note = "branch did not reach lambda_rho: " + branch.failure;
        r.U_branch = branch.points.back().u;
        return r;
    }
    const auto& end = branch.points.back();
    r.reached       = true;
    r.U_branch      = end.u;
    r.E_e_branch    = end.E_e;
    r.energy_gap    = rho - end.E_e;

    std::vector<double> d(r.u_rho.size());
    for (int i = 0; i < r.u_rho.size(); ++i)
        d[i] = r.u_rho[i] - end.u[i];
    r.sup_difference = norm_inf(d);

    const auto pm = solve_transformed(r.u_rho, p, grid);
    const auto pb = solve_transformed(end.u, p, grid);
    r.tolerance   = std::max({std::abs(m.E_e - rho), std::abs(boundary_identity_residual(r.u_rho, p, pm)),
                              std::abs(boundary_identity_residual(end.u, p, pb))});
    r.demonstrated = r.energy_gap > 10.0 * r.tolerance;
    return r;
}

} // namespace memsfb
