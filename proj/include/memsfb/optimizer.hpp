/** @file optimizer.hpp

    @brief Minimization of the mechanical energy over even admissible
    deflections with prescribed electrostatic energy rho, and extraction of the
    Lagrange multiplier lambda_rho.

    The loop is a projected gradient method preconditioned by the clamped
    operator P = beta d4 - (tau + a ||u'||^2) d2. Since the gradient of E_m is
    exactly P u, the preconditioned gradient is u itself and the preconditioned
    constraint gradient is q = P^{-1} g(u). A step moves toward the tangent
    point c q, with c chosen so that int g (u - c q) = 0, and the energy level is
    then restored by radial rescaling t u, which is monotone in t. Fixed points
    satisfy P u + lambda g(u) = 0 with lambda = -c.
*/

#pragma once

#include "memsfb/core.hpp"
#include "memsfb/energy.hpp"
#include "memsfb/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace memsfb
{

/// L2 gradient of E_m on interior nodes: beta d4 u - (tau + a ||u'||^2) d2 u.
inline std::vector<double> em_gradient(const DeflectionProfile& u, const ModelParams& p)
{
    return apply_clamped(u, p.beta, p.tau + p.a * stretch_norm(u));
}

/// lambda from testing the Euler-Lagrange equation with u itself:
/// (beta ||u''||^2 + tau ||u'||^2 + a ||u'||^4) / (-int u g).
inline double extract_multiplier(const DeflectionProfile& u, const ModelParams& p, std::span<const double> g)
{
    if (norm_inf(u.values()) == 0.0)
        throw DomainError("multiplier undefined for the zero deflection");
    const double num = pairing(u.grid(), em_gradient(u, p), u.values());
    const double den = -pairing(u.grid(), g, u.values());
    if (!(den > 0.0))
        throw DomainError("multiplier undefined: int u g(u) is not negative");
    return num / den;
}

inline double extract_multiplier(const DeflectionProfile& u, const ModelParams& p, const TransformedPotential& pot)
{
    return extract_multiplier(u, p, traction(u, p, pot));
}

/// ||grad E_m(u) + lambda g(u)|| over interior nodes in the pairing norm.
inline double kkt_residual(const DeflectionProfile& u, double lambda, const ModelParams& p, std::span<const double> g)
{
    auto r = em_gradient(u, p);
    for (int i = 1; i < u.size() - 1; ++i)
        r[i] += lambda * g[i];
    r.front() = r.back() = 0.0;
    return pairing_norm(u.grid(), r);
}

/// Multiplier minimizing ||grad E_m + lambda g|| over interior nodes.
inline double least_squares_multiplier(const DeflectionProfile& u, const ModelParams& p, std::span<const double> g)
{
    std::vector<double> gi(g.begin(), g.end());
    gi.front() = gi.back() = 0.0;
    return -pairing(u.grid(), em_gradient(u, p), gi) / pairing(u.grid(), gi, gi);
}

struct OptimizerOptions
{
    double kkt_tol        = 1e-5;
    int max_iterations    = 500;
    double energy_rel_tol = 1e-9;   // radial restoration
    double descent_slack  = 1e-12;  // relative, on E_m
    double min_step       = 1.0 / 1024.0;
};

struct IterationRecord
{
    double E_m            = 0.0;
    double constraint_gap = 0.0; // |E_e - rho|
    double step           = 0.0; // accepted step length (0 for the seed)
    double kkt            = 0.0;
    double lambda         = 0.0;
};

struct MinimizerResult
{
    double rho = 0.0;
    DeflectionProfile u_rho;
    double lambda_rho   = 0.0;
    double E_m          = 0.0;
    double E_e          = 0.0;
    double kkt_residual = 0.0;
    int iterations      = 0;
    bool converged      = false;
    std::string stop_reason;
    int elliptic_solves = 0;
    double seed_eta     = 0.0;
    double seed_E_m     = 0.0;
    double phi1_E_m     = 0.0;
    std::vector<double> g; // traction at u_rho
    std::vector<IterationRecord> history;
};

inline MinimizerResult minimize_mechanical(double rho, const ModelParams& p, const Grid2D& grid,
                                           const OptimizerOptions& opts = {})
{
    if (!(rho > 2.0))
        throw DomainError("minimize_mechanical: rho must exceed 2");
    p.validate();
    const Grid1D& gx = grid.xgrid();

    const auto eig  = clamped_eigenpair(p, gx);
    const auto seed = feasible_seed(rho, p, grid, eig, opts.energy_rel_tol);

    MinimizerResult res{.rho = rho, .u_rho = seed.profile};
    res.seed_eta        = seed.eta;
    res.seed_E_m        = mechanical_energy(seed.profile, p);
    res.phi1_E_m        = mechanical_energy_unchecked(eig.phi1, p);
    res.elliptic_solves = seed.solve.solves;

    DeflectionProfile u = seed.profile;
    u.symmetrize();
    auto state = solve_state(u, p, grid);
    ++res.elliptic_solves;
    double Em    = mechanical_energy(u, p);
    double alpha = 1.0;
    double step  = 0.0;

    for (int it = 0;; ++it)
    {
        const double lambda = extract_multiplier(u, p, state.g);
        const double kkt    = kkt_residual(u, lambda, p, state.g);
        res.history.push_back({Em, std::abs(state.energy - rho), step, kkt, lambda});
        res.iterations = it;
        if (kkt <= opts.kkt_tol)
        {
            res.converged   = true;
            res.stop_reason = "kkt tolerance reached";
            break;
        }
        if (it >= opts.max_iterations)
        {
            res.stop_reason = "iteration cap";
            break;
        }

        const double stretch = p.tau + p.a * stretch_norm(u);
        auto q               = solve_clamped(gx, p.beta, stretch, state.g);
        q.symmetrize();
        const double c = inner(gx, state.g, u.values()) / inner(gx, state.g, q.values());

        bool accepted = false;
        alpha         = std::min(1.0, 2.0 * alpha);
        for (; alpha >= opts.min_step; alpha *= 0.5)
        {
            std::vector<double> v(u.size());
            for (int i = 0; i < u.size(); ++i)
                v[i] = std::min(0.0, (1.0 - alpha) * u[i] + alpha * c * q[i]);
            DeflectionProfile trial(gx, std::move(v));
            trial.symmetrize();
            if (!(trial.min() > -1.0 + kTouchdownFloor) || trial.min() == 0.0)
                continue;

            const double t_max = std::min(4.0, (1.0 - 1e-3) / -trial.min());
            RadialSolve rs;
            try
            {
                rs = radial_solve(trial, p, grid, rho, t_max, opts.energy_rel_tol, 60, 1.0);
            }
            catch (const SolverError&)
            {
                continue;
            }
            res.elliptic_solves += rs.solves;
            DeflectionProfile next = trial.scaled(rs.t);
            const double Em_next   = mechanical_energy(next, p);
            if (Em_next <= Em + opts.descent_slack * Em)
            {
                u     = std::move(next);
                Em    = Em_next;
                state = solve_state(u, p, grid);
                ++res.elliptic_solves;
                step     = alpha;
                accepted = true;
                break;
            }
        }
        if (!accepted)
        {
            res.stop_reason = "line search failed";
            break;
        }
    }

    res.u_rho        = u;
    res.E_m          = Em;
    res.E_e          = state.energy;
    res.lambda_rho   = extract_multiplier(u, p, state.g);
    res.kkt_residual = kkt_residual(u, res.lambda_rho, p, state.g);
    res.g            = state.g;
    return res;
}

/// Right-hand side of 4 E_m >= lambda sqrt(beta) (rho-2)^2 / (2 (sqrt(beta) + eps^2 sqrt(E_m))).
inline double multiplier_bound_rhs(const MinimizerResult& r, const ModelParams& p, double rho)
{
    const double sb = std::sqrt(p.beta);
    return r.lambda_rho * sb * (rho - 2.0) * (rho - 2.0)
         / (2.0 * (sb + p.epsilon * p.epsilon * std::sqrt(r.E_m)));
}

inline constexpr double kBoundSlack = 0.05;

inline bool verify_multiplier_bound(const MinimizerResult& r, const ModelParams& p, double rho)
{
    return 4.0 * r.E_m * (1.0 + kBoundSlack) >= multiplier_bound_rhs(r, p, rho);
}

/// 1/(rho^3 K^2) - 1 with K = max(2/rho, ||u''||).
inline double pointwise_lower_bound(const DeflectionProfile& u, double rho)
{
    const double K = std::max(2.0 / rho, std::sqrt(bending_norm(u)));
    return 1.0 / (rho * rho * rho * K * K) - 1.0;
}

inline bool verify_pointwise_bound(const MinimizerResult& r, double rho)
{
    return r.u_rho.min() >= pointwise_lower_bound(r.u_rho, rho);
}

} // namespace memsfb
