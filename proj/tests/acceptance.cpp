// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "memsfb/cli.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>

using namespace memsfb;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok)
        {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("violated: ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string num(double v)
{
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ModelParams eps(double e, double tau = 0.0, double a = 0.0)
{
    ModelParams p;
    p.epsilon = e;
    p.tau     = tau;
    p.a       = a;
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("memsfb_acceptance_" + std::to_string(::getpid())) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Outcome flat_gap()
{
    Outcome o;
    RunConfig c;
    c.mode    = "solve-potential";
    c.profile = "zero";
    c.out_dir = scratch("c1").string();
    const auto t0 = std::chrono::steady_clock::now();
    const int rc  = run(c);
    const double t = seconds_since(t0);
    o.require(rc == kExitOk, "exit code 0");
    const auto s = Json::parse(slurp(fs::path(c.out_dir) / "summary.json"));
    const double e = s["E_e"].get<double>();
    const double g = std::max(std::abs(s["g_min"].get<double>() - 1), std::abs(s["g_max"].get<double>() - 1));
    o.require(std::abs(e - 2) <= 1e-6, "|E_e - 2| <= 1e-6");
    o.require(g <= 1e-6, "|g - 1| <= 1e-6");
    o.require(t < 1.0, "runtime < 1 s");
    o.note("|E_e-2|=" + num(std::abs(e - 2)) + " |g-1|=" + num(g) + " t=" + num(t) + "s");
    return o;
}

Outcome constant_gap()
{
    Outcome o;
    const Grid2D grid(129, 65);
    const DeflectionProfile u(grid.xgrid(), std::vector<double>(grid.nx(), -0.5));
    const auto s = solve_state(u, eps(1.0), grid);
    double g     = 0;
    for (double v : s.g)
        g = std::max(g, std::abs(v - 4));
    o.require(std::abs(s.energy - 4) <= 1e-6, "|E_e - 4| <= 1e-6");
    o.require(g <= 1e-6, "|g - 4| <= 1e-6");
    o.note("|E_e-4|=" + num(std::abs(s.energy - 4)) + " |g-4|=" + num(g));
    return o;
}

Outcome manufactured()
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    for (double e : {0.3, 1.0})
    {
        const oracle::Manufactured m{0.3, e};
        std::vector<double> err;
        for (int n : {33, 65, 129})
        {
            const Grid2D grid(n, n);
            const auto u = DeflectionProfile::sample(grid.xgrid(), [&](double x) { return m.u(x); });
            Field2D f(grid);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    f(i, j) = m.forcing(grid.x(i), grid.eta(j));
            const auto pot = solve_with_forcing(u, eps(e), grid, f);
            double mx      = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    mx = std::max(mx, std::abs(pot.phi(i, j) - m.phi(grid.x(i), grid.eta(j))));
            err.push_back(mx);
        }
        for (int k = 1; k < 3; ++k)
        {
            const double order = std::log2(err[k - 1] / err[k]);
            o.require(order >= 1.8, "order >= 1.8 at eps=" + num(e));
            o.note("eps=" + num(e) + " order" + std::to_string(k) + "=" + num(order));
        }
    }
    const double t = seconds_since(t0);
    o.require(t < 30, "runtime < 30 s");
    o.note("t=" + num(t) + "s");
    return o;
}

Outcome bound_chain()
{
    Outcome o;
    const auto t0       = std::chrono::steady_clock::now();
    const ModelParams p = eps(0.5);
    const Grid2D grid(129, 65);
    const double h2 = grid.hx() * grid.hx();
    double worst    = -1e300;
    for (const auto& u : random_corpus(p, grid.xgrid(), 50, 2024))
    {
        const auto [lo, up] = energy_bounds(u, p);
        const double e      = electrostatic_energy(u, p, grid);
        worst = std::max({worst, (2 - 10 * h2) - lo, lo - (e + 10 * h2), (e + 10 * h2) - (up + 20 * h2)});
    }
    const double t = seconds_since(t0);
    o.require(worst <= 0, "2-10h^2 <= lower <= E_e+10h^2 <= upper+20h^2");
    o.require(t < 120, "runtime < 2 min");
    o.note("max violation=" + num(worst) + " t=" + num(t) + "s");
    return o;
}

Outcome shape_derivative()
{
    Outcome o;
    const ModelParams p = eps(0.5);
    const Grid2D grid(257, 129);
    const auto corpus = random_corpus(p, grid.xgrid(), 10, 77);
    double worst      = 0;
    for (int k = 0; k < 5; ++k)
    {
        const auto c = shape_derivative_check(corpus[k], corpus[k + 5], p, grid, 1e-3);
        worst        = std::max(worst, c.gap / std::abs(c.analytic));
    }
    o.require(worst <= 1e-3, "relative gap <= 1e-3");
    o.note("max relative gap=" + num(worst));
    return o;
}

Outcome boundary_identity()
{
    Outcome o;
    const ModelParams p = eps(0.5);
    const Grid2D fine(257, 129), coarse(129, 65);
    const auto cf = random_corpus(p, fine.xgrid(), 10, 31);
    const auto cc = random_corpus(p, coarse.xgrid(), 10, 31);
    double worst = 0, worst_ratio = 0;
    for (int k = 0; k < 10; ++k)
    {
        const double rf = std::abs(boundary_identity_residual(cf[k], p, solve_transformed(cf[k], p, fine)));
        const double rc = std::abs(boundary_identity_residual(cc[k], p, solve_transformed(cc[k], p, coarse)));
        worst           = std::max(worst, rf);
        worst_ratio     = std::max(worst_ratio, rf / rc);
        o.require(rf < rc, "decrease under refinement (profile " + std::to_string(k) + ")");
    }
    o.require(worst <= 1e-2, "residual <= 1e-2 at 257x129");
    o.note("max residual=" + num(worst) + " max fine/coarse=" + num(worst_ratio));
    return o;
}

Outcome monotonicity()
{
    Outcome o;
    const ModelParams p = eps(0.5);
    const Grid2D grid(129, 65);
    const auto phi = clamped_eigenpair(p, grid.xgrid()).phi1;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(0.0, 0.9);
    int held = 0;
    for (int k = 0; k < 20; ++k)
    {
        double s = d(rng), t = d(rng);
        if (s > t)
            std::swap(s, t);
        if (s == t)
            t = std::min(0.9, s + 1e-3);
        held += monotonicity_check(phi.scaled(t), phi.scaled(s), p, grid) ? 1 : 0;
    }
    o.require(held == 20, "E_e(s phi) <= E_e(t phi) on all pairs");
    o.note(std::to_string(held) + "/20 pairs");
    return o;
}

Outcome eigenpair()
{
    Outcome o;
    const double mu = std::pow(oracle::clamped_k(), 4);
    const auto e    = clamped_eigenpair(eps(0.5), Grid1D(257));
    const double rel = std::abs(e.mu1 - mu) / mu;
    o.require(rel <= 1e-3, "mu_1 within 0.1% of k^4");
    o.require(e.phi1.asymmetry() <= 1e-10, "phi_1 even");
    o.require(e.phi1.max() <= 1e-12, "phi_1 <= 0");
    o.require(e.phi1.min() == -1.0, "min phi_1 = -1");
    o.note("mu_1=" + num(e.mu1) + " k^4=" + num(mu) + " rel=" + num(rel));
    return o;
}

const double kRhos[] = {3.0, 5.0, 10.0, 20.0};

std::vector<MinimizerResult> sweep(const ModelParams& p)
{
    std::vector<MinimizerResult> out;
    const Grid2D grid(129, 65);
    for (double rho : kRhos)
        out.push_back(minimize_mechanical(rho, p, grid));
    return out;
}

void basic_minimizer_checks(Outcome& o, const std::vector<MinimizerResult>& rs)
{
    for (const auto& r : rs)
    {
        const std::string at = " at rho=" + num(r.rho);
        o.require(r.converged, "converged" + at + " (" + r.stop_reason + ")");
        o.require(r.kkt_residual <= 1e-5, "KKT <= 1e-5" + at);
        o.require(std::abs(r.E_e - r.rho) <= 1e-6 * r.rho, "|E_e - rho| <= 1e-6 rho" + at);
        o.require(r.lambda_rho > 0, "lambda > 0" + at);
        o.require(r.u_rho.admissible() && r.u_rho.asymmetry() <= 1e-10, "admissible and even" + at);
    }
}

std::string lambdas(const std::vector<MinimizerResult>& rs)
{
    std::string s = "lambda=";
    for (const auto& r : rs)
        s += num(r.lambda_rho) + (&r == &rs.back() ? "" : ",");
    return s;
}

std::vector<MinimizerResult> g_sweep;

Outcome minimization()
{
    Outcome o;
    const ModelParams p = eps(0.5);
    const auto t0       = std::chrono::steady_clock::now();
    g_sweep             = sweep(p);
    const double t      = seconds_since(t0);
    basic_minimizer_checks(o, g_sweep);
    for (std::size_t k = 1; k < g_sweep.size(); ++k)
    {
        o.require(g_sweep[k].lambda_rho < g_sweep[k - 1].lambda_rho, "lambda strictly decreasing");
        o.require(g_sweep[k].E_m >= g_sweep[k - 1].E_m, "mu non-decreasing");
    }
    for (const auto& r : g_sweep)
    {
        o.require(verify_pointwise_bound(r, r.rho), "pointwise bound at rho=" + num(r.rho));
        o.require(verify_multiplier_bound(r, p, r.rho), "multiplier bound at rho=" + num(r.rho));
    }
    o.require(t < 600, "runtime < 10 min");
    o.note(lambdas(g_sweep) + " t=" + num(t) + "s");
    return o;
}

Outcome branch_and_multiplicity()
{
    Outcome o;
    const ModelParams p = eps(0.5);
    const Grid2D grid(129, 65);
    // Reuse the rho = 10 minimizer of the sweep when it ran.
    std::optional<MinimizerResult> own;
    const MinimizerResult* m10 = nullptr;
    for (const auto& r : g_sweep)
        if (r.rho == 10.0)
            m10 = &r;
    if (!m10)
        m10 = &own.emplace(minimize_mechanical(10.0, p, grid));

    const auto br = continue_branch(m10->lambda_rho, 8, p, grid);
    o.require(br.complete, "branch reaches lambda_10");
    const double Eb  = br.points.back().E_e;
    const double gap = m10->E_e - Eb;
    o.require(std::abs(Eb - 2) < 1, "|E_e(U) - 2| < 1");
    o.require(std::abs(m10->E_e - 10) <= 1e-5, "E_e(u_rho) = 10");
    o.require(gap > 5, "multiplicity gap > 5");

    const double r1  = first_order_ratio(1e-3, p, grid);
    const double r05 = first_order_ratio(5e-4, p, grid);
    o.require(std::abs(r05 - r1) <= 0.5 * std::max(r1, r05), "first-order ratio stable within 50%");
    o.note("lambda_10=" + num(m10->lambda_rho) + " E_e(U)=" + num(Eb) + " gap=" + num(gap) + " ratios=" + num(r1)
           + "," + num(r05));
    return o;
}

Outcome stretching()
{
    Outcome o;
    const auto rs = sweep(eps(0.5, 1.0, 1.0));
    basic_minimizer_checks(o, rs);
    o.note(lambdas(rs));
    return o;
}

Outcome determinism()
{
    Outcome o;
    RunConfig c;
    c.params.epsilon = 0.5;
    c.out_dir        = scratch("c12").string();
    std::map<std::string, std::string> first;
    const int rc1 = run(c);
    for (const auto& e : fs::directory_iterator(c.out_dir))
        first[e.path().filename().string()] = slurp(e.path());
    const int rc2 = run(c);
    o.require(rc1 == rc2, "same exit code");
    o.require(first.count("verify.json") == 1, "verify.json written");
    for (const auto& [name, bytes] : first)
        o.require(slurp(fs::path(c.out_dir) / name) == bytes, name + " identical");
    o.note("verify exit=" + std::to_string(rc1) + " files=" + std::to_string(first.size()));
    return o;
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"flat-gap exactness", flat_gap},
        {"constant gap", constant_gap},
        {"manufactured-solution order", manufactured},
        {"energy bound chain", bound_chain},
        {"shape derivative", shape_derivative},
        {"boundary identity", boundary_identity},
        {"monotonicity", monotonicity},
        {"clamped eigenpair", eigenpair},
        {"constrained minimization", minimization},
        {"branch and multiplicity", branch_and_multiplicity},
        {"stretching regression", stretching},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k)
    {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try
        {
            o = criteria[k].second();
        }
        catch (const std::exception& e)
        {
            o.pass   = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += o.pass ? 0 : 1;
        std::printf("criterion %2zu %s  %-28s  (%.1fs)  %s\n", k + 1, o.pass ? "PASS" : "FAIL",
                    criteria[k].first.c_str(), seconds_since(t0), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
