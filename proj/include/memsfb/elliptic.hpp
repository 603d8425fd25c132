/** @file elliptic.hpp

    @brief Electrostatic potential on the fixed rectangle.

    The free domain {-1 < z < u(x)} is mapped onto [-1,1] x [0,1] through
    eta = (1+z)/(1+u(x)). The shifted potential Phi = psi - eta vanishes on the
    whole boundary and solves a non-divergence elliptic problem L_u Phi = f_u
    whose coefficients depend on u, u' and U = u'/(1+u).
*/

#pragma once

#include "memsfb/core.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace memsfb
{

struct CoefficientField
{
    std::vector<double> du;     // u'
    std::vector<double> U;      // u'/(1+u)
    std::vector<double> dU;     // (U)'
    std::vector<double> inv1pu; // 1/(1+u)
};

inline CoefficientField coefficients(const DeflectionProfile& u)
{
    require_gap(u);
    CoefficientField c;
    c.du = d1(u);
    const int n = u.size();
    c.U.resize(n);
    c.inv1pu.resize(n);
    for (int i = 0; i < n; ++i)
    {
        c.inv1pu[i] = 1.0 / (1.0 + u[i]);
        c.U[i]      = c.du[i] * c.inv1pu[i];
    }
    c.dU = diff_open(c.U, u.grid().h());
    return c;
}

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Interior unknowns of a Grid2D, numbered x-major.
struct InteriorIndex
{
    int mx, me;
    explicit InteriorIndex(const Grid2D& g) : mx(g.nx() - 2), me(g.neta() - 2) {}
    int operator()(int i, int j) const { return (i - 1) * me + (j - 1); }
    int size() const { return mx * me; }
};

/** Discretization of

        L_u w = eps^2 w_xx - 2 eps^2 eta U w_xeta
              + (1 + eps^2 eta^2 u'^2)/(1+u)^2 w_etaeta
              + eps^2 eta (U^2 - U') w_eta

    with centered differences and the four-point cross stencil for w_xeta.
    Boundary values are zero and do not appear. The first-order coefficient
    uses 2U^2 - u''/(1+u) = U^2 - U', written in terms of U so that
    L_u eta = -f_u holds exactly on the grid.
*/
inline SparseMatrix assemble(const DeflectionProfile& u, const ModelParams& p, const Grid2D& grid)
{
    if (!(u.grid() == grid.xgrid()))
        throw DomainError("assemble: deflection grid does not match potential grid");
    const auto c = coefficients(u);
    const double e2 = p.epsilon * p.epsilon;
    const double hx = grid.hx(), he = grid.heta();
    const InteriorIndex idx(grid);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(idx.size()) * 9);
    for (int i = 1; i < grid.nx() - 1; ++i)
    {
        for (int j = 1; j < grid.neta() - 1; ++j)
        {
            const double eta = grid.eta(j);
            const double axx = e2;
            const double axe = -2.0 * e2 * eta * c.U[i];
            const double aee = (1.0 + e2 * eta * eta * c.du[i] * c.du[i]) * c.inv1pu[i] * c.inv1pu[i];
            const double be  = e2 * eta * (c.U[i] * c.U[i] - c.dU[i]);

            const int row = idx(i, j);
            auto add = [&](int ii, int jj, double v) {
                if (ii < 1 || ii > grid.nx() - 2 || jj < 1 || jj > grid.neta() - 2)
                    return;
                trip.emplace_back(row, idx(ii, jj), v);
            };
            const double cx = axx / (hx * hx);
            const double ce = aee / (he * he);
            const double cm = axe / (4.0 * hx * he);
            const double cb = be / (2.0 * he);
            add(i, j, -2.0 * cx - 2.0 * ce);
            add(i - 1, j, cx);
            add(i + 1, j, cx);
            add(i, j - 1, ce - cb);
            add(i, j + 1, ce + cb);
            add(i + 1, j + 1, cm);
            add(i - 1, j - 1, cm);
            add(i + 1, j - 1, -cm);
            add(i - 1, j + 1, -cm);
        }
    }
    SparseMatrix A(idx.size(), idx.size());
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

/// f_u = eps^2 eta (U' - U^2) on all nodes of the grid.
inline Field2D rhs(const DeflectionProfile& u, const ModelParams& p, const Grid2D& grid)
{
    if (!(u.grid() == grid.xgrid()))
        throw DomainError("rhs: deflection grid does not match potential grid");
    const auto c = coefficients(u);
    const double e2 = p.epsilon * p.epsilon;
    Field2D f(grid);
    for (int i = 0; i < grid.nx(); ++i)
        for (int j = 0; j < grid.neta(); ++j)
            f(i, j) = e2 * grid.eta(j) * (c.dU[i] - c.U[i] * c.U[i]);
    return f;
}

/// Phi on the fixed rectangle; zero on the boundary.
struct TransformedPotential
{
    Field2D phi;
    double relative_residual = 0.0;
};

inline constexpr double kLinearSolveTolerance = 1e-10;

/// Interior values of a nodal field as a vector, and back.
inline Eigen::VectorXd gather_interior(const Field2D& f)
{
    const auto& g = f.grid;
    const InteriorIndex idx(g);
    Eigen::VectorXd b(idx.size());
    for (int i = 1; i < g.nx() - 1; ++i)
        for (int j = 1; j < g.neta() - 1; ++j)
            b[idx(i, j)] = f(i, j);
    return b;
}

inline Field2D scatter_interior(const Grid2D& g, const Eigen::VectorXd& x)
{
    const InteriorIndex idx(g);
    Field2D f(g);
    for (int i = 1; i < g.nx() - 1; ++i)
        for (int j = 1; j < g.neta() - 1; ++j)
            f(i, j) = x[idx(i, j)];
    return f;
}

/// Assembled and factorized L_u for one deflection; solves any number of
/// right-hand sides against the same factorization.
class TransformedOperator
{
public:
    TransformedOperator(const DeflectionProfile& u, const ModelParams& p, const Grid2D& grid)
        : m_grid(grid), m_A(assemble(u, p, grid))
    {
        m_lu.analyzePattern(m_A);
        m_lu.factorize(m_A);
        if (m_lu.info() != Eigen::Success)
            throw SolverError("sparse LU factorization failed: " + m_lu.lastErrorMessage(), 1.0);
    }

    const SparseMatrix& matrix() const { return m_A; }
    const Grid2D& grid() const { return m_grid; }

    /// Solution of A x = b and its relative residual.
    std::pair<Eigen::VectorXd, double> solve(const Eigen::VectorXd& b) const
    {
        const double bnorm = b.norm();
        if (bnorm == 0.0)
            return {Eigen::VectorXd::Zero(b.size()), 0.0};
        Eigen::VectorXd x = m_lu.solve(b);
        double rel        = (m_A * x - b).norm() / bnorm;
        // One step of iterative refinement if the direct solve fell short.
        if (rel > kLinearSolveTolerance)
        {
            x += m_lu.solve(b - m_A * x);
            rel = (m_A * x - b).norm() / bnorm;
        }
        if (!(rel <= kLinearSolveTolerance))
            throw SolverError("transformed potential solve did not converge", rel);
        return {std::move(x), rel};
    }

private:
    Grid2D m_grid;
    SparseMatrix m_A;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> m_lu;
};

/// Solve L_u Phi = forcing with homogeneous Dirichlet data. Only interior
/// values of the forcing are read.
inline TransformedPotential solve_with_forcing(const DeflectionProfile& u, const ModelParams& p,
                                               const Grid2D& grid, const Field2D& forcing)
{
    p.validate();
    if (!(forcing.grid == grid))
        throw DomainError("forcing grid does not match");
    const Eigen::VectorXd b = gather_interior(forcing);
    if (b.norm() == 0.0)
    {
        require_gap(u);
        return TransformedPotential{Field2D(grid)};
    }
    const TransformedOperator op(u, p, grid);
    auto [x, rel] = op.solve(b);
    return TransformedPotential{scatter_interior(grid, x), rel};
}

inline TransformedPotential solve_transformed(const DeflectionProfile& u, const ModelParams& p,
                                              const Grid2D& grid)
{
    return solve_with_forcing(u, p, grid, rhs(u, p, grid));
}

/// d Phi / d eta at eta = 1 by the one-sided three-point stencil.
inline std::vector<double> trace_deta_top(const TransformedPotential& pot)
{
    const auto& g = pot.phi.grid;
    const int N   = g.neta() - 1;
    std::vector<double> out(g.nx());
    for (int i = 0; i < g.nx(); ++i)
        out[i] = (3.0 * pot.phi(i, N) - 4.0 * pot.phi(i, N - 1) + pot.phi(i, N - 2)) / (2.0 * g.heta());
    return out;
}

/// d psi / d z on the plate, (1 + Phi_eta(x,1)) / (1+u).
inline std::vector<double> dz_psi_on_plate(const DeflectionProfile& u, const TransformedPotential& pot)
{
    const auto t = trace_deta_top(pot);
    std::vector<double> out(u.size());
    for (int i = 0; i < u.size(); ++i)
        out[i] = (1.0 + t[i]) / (1.0 + u[i]);
    return out;
}

/// g(u) = eps^2 |psi_x|^2 + |psi_z|^2 on the plate, using psi_x = -psi_z u'.
inline std::vector<double> traction(const DeflectionProfile& u, const ModelParams& p,
                                    const TransformedPotential& pot)
{
    require_gap(u);
    if (!(pot.phi.grid.xgrid() == u.grid()))
        throw DomainError("traction: grid mismatch");
    const auto du = d1(u);
    const auto dz = dz_psi_on_plate(u, pot);
    const double e2 = p.epsilon * p.epsilon;
    std::vector<double> g(u.size());
    for (int i = 0; i < u.size(); ++i)
        g[i] = (1.0 + e2 * du[i] * du[i]) * dz[i] * dz[i];
    return g;
}

/// Tolerance used to decide whether a query point lies in the free domain.
inline constexpr double kDomainSlack = 1e-12;

/// psi(x,z) = Phi(x,eta) + eta with eta = (1+z)/(1+u(x)); u and Phi are
/// interpolated (bi)linearly.
inline double recover_physical(const DeflectionProfile& u, const TransformedPotential& pot, double x, double z)
{
    const auto& g = pot.phi.grid;
    if (!(pot.phi.grid.xgrid() == u.grid()))
        throw DomainError("recover_physical: grid mismatch");
    if (x < -1.0 - kDomainSlack || x > 1.0 + kDomainSlack)
        throw DomainError("query x outside [-1,1]");
    x = std::clamp(x, -1.0, 1.0);

    const double s = (x + 1.0) / g.hx();
    int i          = std::min(static_cast<int>(std::floor(s)), g.nx() - 2);
    const double tx = s - i;
    const double ux = (1.0 - tx) * u[i] + tx * u[i + 1];
    if (z < -1.0 - kDomainSlack || z > ux + kDomainSlack)
        throw DomainError("query point outside the free domain");

    const double eta = std::clamp((1.0 + z) / (1.0 + ux), 0.0, 1.0);
    const double r   = eta / g.heta();
    int j            = std::min(static_cast<int>(std::floor(r)), g.neta() - 2);
    const double te  = r - j;
    const double phi = (1.0 - tx) * ((1.0 - te) * pot.phi(i, j) + te * pot.phi(i, j + 1))
                     + tx * ((1.0 - te) * pot.phi(i + 1, j) + te * pot.phi(i + 1, j + 1));
    return phi + eta;
}

} // namespace memsfb
