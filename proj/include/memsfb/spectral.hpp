/** @file spectral.hpp

    @brief Clamped beam operator beta d^4 - c d^2, its first eigenpair and the
    feasible seed eta * phi_1 on a prescribed electrostatic energy level.
*/

#pragma once

#include "memsfb/core.hpp"
#include "memsfb/energy.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <vector>

namespace memsfb
{

/** beta D4 - stretch D2 on the n-2 interior nodes with the reflected ghost
    closure. The matrix is symmetric pentadiagonal; row 1 of D4 reads
    (7, -4, 1)/h^4.
*/
inline SparseMatrix clamped_operator(const Grid1D& grid, double beta, double stretch)
{
    const int m     = grid.size() - 2;
    const double h  = grid.h();
    const double h2 = h * h, h4 = h2 * h2;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * m);
    for (int r = 0; r < m; ++r)
    {
        const bool edge = (r == 0 || r == m - 1);
        trip.emplace_back(r, r, beta * (edge ? 7.0 : 6.0) / h4 + 2.0 * stretch / h2);
        if (r + 1 < m)
        {
            trip.emplace_back(r, r + 1, -4.0 * beta / h4 - stretch / h2);
            trip.emplace_back(r + 1, r, -4.0 * beta / h4 - stretch / h2);
        }
        if (r + 2 < m)
        {
            trip.emplace_back(r, r + 2, beta / h4);
            trip.emplace_back(r + 2, r, beta / h4);
        }
    }
    SparseMatrix A(m, m);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

/// Interior slice of a nodal array and its inverse (zero boundary values).
inline Eigen::VectorXd interior(std::span<const double> f)
{
    const int m = static_cast<int>(f.size()) - 2;
    Eigen::VectorXd v(m);
    for (int r = 0; r < m; ++r)
        v[r] = f[r + 1];
    return v;
}

inline std::vector<double> with_boundary(const Eigen::VectorXd& v)
{
    std::vector<double> f(v.size() + 2, 0.0);
    for (int r = 0; r < v.size(); ++r)
        f[r + 1] = v[r];
    return f;
}

/// beta d4(u) - stretch d2(u) on interior nodes, zero on the boundary.
inline std::vector<double> apply_clamped(const DeflectionProfile& u, double beta, double stretch)
{
    const auto q4 = d4(u);
    const auto q2 = d2(u);
    std::vector<double> out(u.size(), 0.0);
    for (int i = 1; i < u.size() - 1; ++i)
        out[i] = beta * q4[i] - stretch * q2[i];
    return out;
}

struct EigenPair
{
    double mu1 = 0.0;
    DeflectionProfile phi1;
    double residual   = 0.0; // ||beta d4 phi - tau d2 phi - mu phi||
    int iterations    = 0;
};

/// || beta d4 phi - tau d2 phi - mu phi || in the Simpson norm, accumulated in
/// extended precision since the fourth difference cancels heavily.
inline double eigen_residual(const DeflectionProfile& phi, const ModelParams& p, double mu)
{
    const auto v   = phi.values();
    const int n    = phi.size();
    const long double h  = phi.grid().h();
    const long double h2 = h * h, h4 = h2 * h2;
    auto at = [&](int i) -> long double { return detail::ghost(v, i); };
    std::vector<double> r(n, 0.0);
    for (int i = 1; i < n - 1; ++i)
    {
        const long double q4 = (at(i - 2) - 4.0L * at(i - 1) + 6.0L * at(i) - 4.0L * at(i + 1) + at(i + 2)) / h4;
        const long double q2 = (at(i - 1) - 2.0L * at(i) + at(i + 1)) / h2;
        r[i] = static_cast<double>(p.beta * q4 - p.tau * q2 - mu * at(i));
    }
    return norm_l2(phi.grid(), r);
}

/// Smallest eigenpair of the clamped operator by inverse iteration. phi_1 is
/// sign-fixed to be nonpositive and scaled to min -1.
inline EigenPair clamped_eigenpair(const ModelParams& p, const Grid1D& grid, double tol = 1e-10,
                                   int max_iter = 200)
{
    p.validate();
    const SparseMatrix A = clamped_operator(grid, p.beta, p.tau);
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw SolverError("clamped operator factorization failed", 1.0);

    const int m = A.rows();
    Eigen::VectorXd v(m);
    for (int r = 0; r < m; ++r)
    {
        const double x = grid.x(r + 1);
        v[r]           = -(1.0 - x * x) * (1.0 - x * x);
    }
    v.normalize();

    // The eigen-residual of a double-precision vector stalls at the round-off
    // level of the fourth difference (~ eps / h^4), so convergence is judged on
    // the iterates themselves and the residual is reported afterwards.
    double mu = 0.0, step = 0.0;
    for (int it = 1; it <= max_iter; ++it)
    {
        Eigen::VectorXd w = ldlt.solve(v);
        // Symmetrize against round-off drift toward odd modes.
        for (int r = 0; r < m / 2; ++r)
        {
            const double s = 0.5 * (w[r] + w[m - 1 - r]);
            w[r] = w[m - 1 - r] = s;
        }
        w.normalize();
        if (w.dot(v) < 0.0)
            w = -w;
        step = (w - v).norm();
        v    = w;
        if (step <= tol)
        {
            mu = v.dot(A * v);
            if (v.sum() > 0.0)
                v = -v;
            v /= -v.minCoeff();
            DeflectionProfile phi(grid, with_boundary(v));
            return EigenPair{mu, phi, eigen_residual(phi, p, mu), it};
        }
    }
    throw SolverError("inverse iteration did not converge", step);
}

/// Linear clamped solve beta d4 w - stretch d2 w = f on interior nodes.
inline DeflectionProfile solve_clamped(const Grid1D& grid, double beta, double stretch, std::span<const double> f)
{
    const SparseMatrix A = clamped_operator(grid, beta, stretch);
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw SolverError("clamped operator factorization failed", 1.0);
    const Eigen::VectorXd w = ldlt.solve(interior(f));
    return DeflectionProfile(grid, with_boundary(w));
}

struct FeasibleSeed
{
    double eta = 0.0;
    DeflectionProfile profile;
    double energy = 0.0;
    RadialSolve solve;
};

inline constexpr double kSeedBracketTop = 0.999;

/// eta_rho phi_1 with E_e = rho, eta_rho in (0, 1).
inline FeasibleSeed feasible_seed(double rho, const ModelParams& p, const Grid2D& grid, const EigenPair& eig,
                                  double rel_tol = 1e-8)
{
    if (!(rho > 2.0))
        throw DomainError("feasible_seed: rho must exceed 2");
    RadialSolve rs;
    try
    {
        rs = radial_solve(eig.phi1, p, grid, rho, kSeedBracketTop, rel_tol);
    }
    catch (const SolverError&)
    {
        const double top = electrostatic_energy(eig.phi1.scaled(kSeedBracketTop), p, grid);
        throw SolverError("feasible seed bracket failure: J ranges over [2, " + std::to_string(top)
                              + "] on [0, " + std::to_string(kSeedBracketTop) + "]",
                          rho - top);
    }
    return FeasibleSeed{rs.t, eig.phi1.scaled(rs.t), rs.energy, std::move(rs)};
}

} // namespace memsfb
