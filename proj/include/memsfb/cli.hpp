/** @file cli.hpp

    @brief Run configuration, named test profiles, file outputs and the
    invariant verification suite behind the memsfb command-line tool.

    A run is fully determined by its RunConfig. Files are written to a
    temporary name and renamed into place; no timing or host information
    enters any output, so identical configurations give identical bytes.
*/

#pragma once

#include "memsfb/continuation.hpp"
#include "memsfb/core.hpp"
#include "memsfb/elliptic.hpp"
#include "memsfb/energy.hpp"
#include "memsfb/optimizer.hpp"
#include "memsfb/spectral.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace memsfb
{

using Json = nlohmann::ordered_json;

/// Invalid configuration; key() names the offending entry.
class ConfigError : public Error
{
public:
    ConfigError(std::string key, const std::string& what)
        : Error("invalid config key '" + key + "': " + what), m_key(std::move(key))
    {
    }
    const std::string& key() const { return m_key; }

private:
    std::string m_key;
};

enum ExitCode : int
{
    kExitOk           = 0,
    kExitConfigError  = 2,
    kExitSolverError  = 3,
    kExitVerifyFailed = 4,
};

inline const std::vector<std::string>& run_modes()
{
    static const std::vector<std::string> m{"solve-potential", "energy", "minimize", "branch", "bifurcation",
                                            "verify"};
    return m;
}

struct RunConfig
{
    ModelParams params;
    int n    = 129; // deflection nodes, equal to nx
    int nx   = 0;   // 0: follow n
    int neta = 65;
    std::string mode = "verify";
    double rho       = 5.0;
    std::vector<double> rho_list{3.0, 5.0, 10.0, 20.0};
    double lambda_max = 0.2;
    int steps         = 8;
    double kkt_tol    = 1e-5;
    std::string out_dir = "out";
    std::uint64_t seed  = 1;
    std::string profile = "quartic";
    double amplitude    = 0.5;
    int corpus          = 10;

    int potential_nx() const { return nx == 0 ? n : nx; }

    void validate() const
    {
        auto positive = [](const char* key, double v) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw ConfigError(key, "must be positive and finite");
        };
        positive("beta", params.beta);
        positive("epsilon", params.epsilon);
        if (!(params.tau >= 0.0))
            throw ConfigError("tau", "must be nonnegative");
        if (!(params.a >= 0.0))
            throw ConfigError("a", "must be nonnegative");
        if (n < 5 || n % 2 == 0)
            throw ConfigError("n", "must be odd and at least 5");
        if (nx != 0 && nx != n)
            throw ConfigError("nx", "must equal n (the deflection and potential share x nodes)");
        if (neta < 5 || neta % 2 == 0)
            throw ConfigError("neta", "must be odd and at least 5");
        if (std::find(run_modes().begin(), run_modes().end(), mode) == run_modes().end())
            throw ConfigError("mode", "unknown mode '" + mode + "'");
        if ((mode == "minimize" || mode == "verify") && !(rho > 2.0))
            throw ConfigError("rho", "must exceed 2");
        if (mode == "bifurcation")
        {
            if (rho_list.empty())
                throw ConfigError("rho_list", "must not be empty");
            for (double r : rho_list)
                if (!(r > 2.0))
                    throw ConfigError("rho_list", "every entry must exceed 2");
        }
        positive("lambda_max", lambda_max);
        if (steps < 2)
            throw ConfigError("steps", "must be at least 2");
        positive("kkt_tol", kkt_tol);
        if (out_dir.empty())
            throw ConfigError("out_dir", "must not be empty");
        static const std::vector<std::string> profiles{"zero", "quartic", "sextic", "eigen", "constant"};
        if (std::find(profiles.begin(), profiles.end(), profile) == profiles.end())
            throw ConfigError("profile", "unknown profile '" + profile + "'");
        if (!(amplitude >= 0.0))
            throw ConfigError("amplitude", "must be nonnegative");
        if (profile != "zero" && !(amplitude < 1.0))
            throw ConfigError("amplitude", "must be below 1 (touchdown)");
        if (corpus < 2)
            throw ConfigError("corpus", "must be at least 2");
    }

    Json to_json() const
    {
        return Json{{"beta", params.beta},       {"tau", params.tau},   {"a", params.a},
                    {"epsilon", params.epsilon}, {"n", n},              {"nx", potential_nx()},
                    {"neta", neta},              {"mode", mode},        {"rho", rho},
                    {"rho_list", rho_list},      {"lambda_max", lambda_max}, {"steps", steps},
                    {"kkt_tol", kkt_tol},        {"out_dir", out_dir},  {"seed", seed},
                    {"profile", profile},        {"amplitude", amplitude}, {"corpus", corpus}};
    }
};

/// 64-bit FNV-1a of the canonical config text, as 16 hex digits.
inline std::string config_hash(const RunConfig& cfg)
{
    const std::string text = cfg.to_json().dump();
    std::uint64_t h         = 14695981039346656037ull;
    for (unsigned char c : text)
    {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Register every config key as a flag; --config reads a key=value file and
/// flags given on the command line take precedence over it.
inline void bind_options(CLI::App& app, RunConfig& cfg)
{
    app.add_option("--beta", cfg.params.beta, "bending stiffness");
    app.add_option("--tau", cfg.params.tau, "stretching coefficient");
    app.add_option("--a", cfg.params.a, "self-stretching coefficient");
    app.add_option("--epsilon", cfg.params.epsilon, "aspect ratio");
    app.add_option("--n", cfg.n, "deflection nodes (odd)");
    app.add_option("--nx", cfg.nx, "potential x nodes (must equal n)");
    app.add_option("--neta", cfg.neta, "potential eta nodes (odd)");
    app.add_option("--mode", cfg.mode, "solve-potential | energy | minimize | branch | bifurcation | verify");
    app.add_option("--rho", cfg.rho, "electrostatic energy level");
    app.add_option("--rho_list,--rho-list", cfg.rho_list, "comma separated energy levels")->delimiter(',');
    app.add_option("--lambda_max,--lambda-max", cfg.lambda_max, "branch end point");
    app.add_option("--steps", cfg.steps, "branch steps");
    app.add_option("--kkt_tol,--kkt-tol", cfg.kkt_tol, "optimizer stopping tolerance");
    app.add_option("--out_dir,--out-dir", cfg.out_dir, "output directory");
    app.add_option("--seed", cfg.seed, "seed for the random profile corpus");
    app.add_option("--profile", cfg.profile, "zero | quartic | sextic | eigen | constant");
    app.add_option("--amplitude", cfg.amplitude, "profile amplitude");
    app.add_option("--corpus", cfg.corpus, "random profiles used by verify");
    app.set_config("--config", "", "key=value configuration file");
    app.allow_config_extras(CLI::config_extras_mode::error);
}

/// Named test profiles, all even. "constant" is -c everywhere and is not
/// clamped; it exists for the constant-gap check of the potential solver.
inline DeflectionProfile profile_catalog(const std::string& name, double amplitude, const ModelParams& p,
                                         const Grid1D& grid)
{
    if (!(amplitude >= 0.0))
        throw DomainError("profile amplitude must be nonnegative");
    if (name == "zero")
        return DeflectionProfile(grid);
    if (amplitude >= 1.0)
        throw TouchdownError("profile '" + name + "' with amplitude >= 1 touches down");
    if (name == "quartic")
        return DeflectionProfile::sample(grid, [&](double x) { return -amplitude * (1 - x * x) * (1 - x * x); });
    if (name == "sextic")
        return DeflectionProfile::sample(grid, [&](double x) {
            const double s = 1 - x * x;
            return -amplitude * s * s * s;
        });
    if (name == "eigen")
        return clamped_eigenpair(p, grid).phi1.scaled(amplitude);
    if (name == "constant")
    {
        std::vector<double> v(grid.size(), -amplitude);
        return DeflectionProfile(grid, std::move(v));
    }
    throw DomainError("unknown profile '" + name + "'");
}

/// Random even admissible profiles: random amplitudes of the catalog shapes
/// and of quartic/sextic blends.
inline std::vector<DeflectionProfile> random_corpus(const ModelParams& p, const Grid1D& grid, int count,
                                                    std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.05, 0.9), unit(0.0, 1.0);
    std::uniform_int_distribution<int> kind(0, 3);
    const auto phi1 = clamped_eigenpair(p, grid).phi1;
    std::vector<DeflectionProfile> out;
    for (int k = 0; k < count; ++k)
    {
        const double c = amp(rng);
        switch (kind(rng))
        {
        case 0: out.push_back(profile_catalog("quartic", c, p, grid)); break;
        case 1: out.push_back(profile_catalog("sextic", c, p, grid)); break;
        case 2: out.push_back(phi1.scaled(c)); break;
        default:
        {
            const double w = unit(rng);
            out.push_back(DeflectionProfile::sample(grid, [&](double x) {
                const double s = 1 - x * x;
                return -c * (w * s * s + (1 - w) * s * s * s);
            }));
        }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// output

inline std::string fmt17(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Write to a temporary sibling and rename into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& text)
{
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw Error("cannot write " + tmp.string());
        f << text;
    }
    std::filesystem::rename(tmp, path);
}

class CsvTable
{
public:
    explicit CsvTable(std::vector<std::string> header) : m_width(header.size())
    {
        row_text(header);
    }

    void row(std::initializer_list<double> values)
    {
        if (values.size() != m_width)
            throw Error("csv row width mismatch");
        std::vector<std::string> cells;
        for (double v : values)
            cells.push_back(fmt17(v));
        row_text(cells);
    }

    const std::string& text() const { return m_text; }

private:
    void row_text(const std::vector<std::string>& cells)
    {
        for (std::size_t k = 0; k < cells.size(); ++k)
            m_text += (k ? "," : "") + cells[k];
        m_text += '\n';
    }

    std::size_t m_width;
    std::string m_text;
};

inline void write_json(const std::filesystem::path& path, const Json& j)
{
    write_atomic(path, j.dump(2) + "\n");
}

inline Json tolerances_json(const RunConfig& cfg)
{
    const OptimizerOptions o;
    const NewtonOptions nw;
    return Json{{"linear_solve_relative_residual", kLinearSolveTolerance},
                {"touchdown_floor", kTouchdownFloor},
                {"domain_slack", kDomainSlack},
                {"kkt_tol", cfg.kkt_tol},
                {"optimizer_max_iterations", o.max_iterations},
                {"radial_energy_rel_tol", o.energy_rel_tol},
                {"descent_slack", o.descent_slack},
                {"min_step", o.min_step},
                {"eigen_step_tol", 1e-10},
                {"seed_bracket_top", kSeedBracketTop},
                {"newton_tol", nw.tol},
                {"newton_max_iterations", nw.max_iterations},
                {"newton_fd_rel_step", nw.fd_rel_step},
                {"order_slack", kOrderSlack},
                {"bound_slack", kBoundSlack}};
}

inline void write_manifest(const RunConfig& cfg)
{
    Json m{{"config_hash", config_hash(cfg)},
           {"config", cfg.to_json()},
           {"grid", {{"n", cfg.n}, {"nx", cfg.potential_nx()}, {"neta", cfg.neta}}},
           {"tolerances", tolerances_json(cfg)}};
    write_json(std::filesystem::path(cfg.out_dir) / "manifest.json", m);
}

inline std::string deflection_csv(const DeflectionProfile& u)
{
    CsvTable t({"x", "u"});
    for (int i = 0; i < u.size(); ++i)
        t.row({u.grid().x(i), u[i]});
    return t.text();
}

inline void write_plot_stub(const RunConfig& cfg, const std::string& csv, const std::string& xcol,
                            const std::string& ycol)
{
    std::ostringstream s;
    s << "# Plot " << ycol << " against " << xcol << " from " << csv << ".\n"
      << "import pandas as pd\nimport matplotlib.pyplot as plt\n\n"
      << "df = pd.read_csv(\"" << csv << "\")\n"
      << "df.plot(x=\"" << xcol << "\", y=\"" << ycol << "\", marker=\".\")\n"
      << "plt.savefig(\"" << csv.substr(0, csv.size() - 4) << ".png\", dpi=150)\n";
    write_atomic(std::filesystem::path(cfg.out_dir) / "plot.py", s.str());
}

// ---------------------------------------------------------------------------
// modes

namespace detail
{

inline Grid2D config_grid(const RunConfig& cfg) { return Grid2D(cfg.potential_nx(), cfg.neta); }

inline double sup_diff(std::span<const double> g, double c)
{
    double s = 0.0;
    for (double v : g)
        s = std::max(s, std::abs(v - c));
    return s;
}

inline void run_solve_potential(const RunConfig& cfg)
{
    const Grid2D grid = config_grid(cfg);
    const auto u      = profile_catalog(cfg.profile, cfg.amplitude, cfg.params, grid.xgrid());
    const auto state  = solve_state(u, cfg.params, grid);

    CsvTable phi({"x", "eta", "phi"});
    CsvTable psi({"x", "z", "psi"});
    for (int i = 0; i < grid.nx(); ++i)
        for (int j = 0; j < grid.neta(); ++j)
        {
            const double x = grid.xgrid().x(i), eta = grid.eta(j);
            phi.row({x, eta, state.pot.phi(i, j)});
            psi.row({x, -1.0 + eta * (1.0 + u[i]), state.pot.phi(i, j) + eta});
        }
    CsvTable tr({"x", "g"});
    for (int i = 0; i < u.size(); ++i)
        tr.row({grid.xgrid().x(i), state.g[i]});
    const std::filesystem::path out(cfg.out_dir);
    write_atomic(out / "potential.csv", phi.text());
    write_atomic(out / "psi.csv", psi.text());
    write_atomic(out / "traction.csv", tr.text());
    write_json(out / "summary.json", Json{{"profile", cfg.profile},
                                          {"amplitude", cfg.amplitude},
                                          {"E_e", state.energy},
                                          {"g_min", *std::min_element(state.g.begin(), state.g.end())},
                                          {"g_max", *std::max_element(state.g.begin(), state.g.end())},
                                          {"relative_residual", state.pot.relative_residual}});
    write_plot_stub(cfg, "traction.csv", "x", "g");
}

inline void run_energy(const RunConfig& cfg)
{
    const Grid2D grid = config_grid(cfg);
    const auto u      = profile_catalog(cfg.profile, cfg.amplitude, cfg.params, grid.xgrid());
    const auto r      = energy_report(u, cfg.params, grid);
    const std::filesystem::path out(cfg.out_dir);
    write_atomic(out / "deflection.csv", deflection_csv(u));
    write_json(out / "summary.json", Json{{"profile", cfg.profile},
                                          {"amplitude", cfg.amplitude},
                                          {"E_m", r.E_m},
                                          {"E_e", r.E_e},
                                          {"lower_bound", r.lower_bound},
                                          {"upper_bound", r.upper_bound},
                                          {"identity_residual", r.identity_residual}});
    write_plot_stub(cfg, "deflection.csv", "x", "u");
}

inline OptimizerOptions optimizer_options(const RunConfig& cfg)
{
    OptimizerOptions o;
    o.kkt_tol = cfg.kkt_tol;
    return o;
}

inline Json minimizer_json(const MinimizerResult& m, const ModelParams& p)
{
    return Json{{"rho", m.rho},
                {"lambda_rho", m.lambda_rho},
                {"E_m", m.E_m},
                {"E_e", m.E_e},
                {"min_u", m.u_rho.min()},
                {"kkt_residual", m.kkt_residual},
                {"converged", m.converged},
                {"stop_reason", m.stop_reason},
                {"iterations", m.iterations},
                {"elliptic_solves", m.elliptic_solves},
                {"seed_eta", m.seed_eta},
                {"seed_E_m", m.seed_E_m},
                {"multiplier_bound_holds", verify_multiplier_bound(m, p, m.rho)},
                {"pointwise_bound_holds", verify_pointwise_bound(m, m.rho)}};
}

inline void run_minimize(const RunConfig& cfg)
{
    const Grid2D grid = config_grid(cfg);
    const auto m      = minimize_mechanical(cfg.rho, cfg.params, grid, optimizer_options(cfg));
    CsvTable h({"iteration", "E_m", "constraint_gap", "step", "kkt", "lambda"});
    for (std::size_t k = 0; k < m.history.size(); ++k)
    {
        const auto& r = m.history[k];
        h.row({static_cast<double>(k), r.E_m, r.constraint_gap, r.step, r.kkt, r.lambda});
    }
    const std::filesystem::path out(cfg.out_dir);
    write_atomic(out / "deflection.csv", deflection_csv(m.u_rho));
    write_atomic(out / "history.csv", h.text());
    write_json(out / "summary.json", minimizer_json(m, cfg.params));
    write_plot_stub(cfg, "deflection.csv", "x", "u");
    if (!m.converged)
        throw SolverError("minimization stopped without convergence: " + m.stop_reason, m.kkt_residual);
}

inline std::string branch_csv(const BranchResult& b)
{
    CsvTable t({"lambda", "sup_norm", "E_e", "residual"});
    for (const auto& q : b.points)
        t.row({q.lambda, q.sup_norm, q.E_e, q.newton_residual});
    return t.text();
}

inline void run_branch(const RunConfig& cfg)
{
    const Grid2D grid = config_grid(cfg);
    const auto b      = continue_branch(cfg.lambda_max, cfg.steps, cfg.params, grid);
    const std::filesystem::path out(cfg.out_dir);
    write_atomic(out / "branch.csv", branch_csv(b));
    write_atomic(out / "deflection.csv", deflection_csv(b.points.back().u));
    Json s{{"lambda_max", cfg.lambda_max}, {"steps", cfg.steps}, {"complete", b.complete},
           {"points", b.points.size()},   {"last_lambda", b.points.back().lambda}};
    if (!b.complete)
    {
        s["failed_lambda"] = b.failed_lambda;
        s["failure"]       = b.failure;
    }
    write_json(out / "summary.json", s);
    write_plot_stub(cfg, "branch.csv", "lambda", "sup_norm");
}

inline Json multiplicity_json(const MultiplicityReport& r)
{
    Json j{{"rho", r.rho},
           {"lambda_rho", r.lambda_rho},
           {"reached", r.reached},
           {"E_e_minimizer", r.E_e_minimizer},
           {"E_e_branch", r.E_e_branch},
           {"energy_gap", r.energy_gap},
           {"sup_difference", r.sup_difference},
           {"tolerance", r.tolerance},
           {"demonstrated", r.demonstrated},
           {"u_rho", std::vector<double>(r.u_rho.values().begin(), r.u_rho.values().end())},
           {"U_branch", std::vector<double>(r.U_branch.values().begin(), r.U_branch.values().end())}};
    if (!r.note.empty())
        j["note"] = r.note;
    return j;
}

inline void run_bifurcation(const RunConfig& cfg)
{
    const Grid2D grid = config_grid(cfg);
    CsvTable t({"rho", "lambda_rho", "E_m", "E_e", "min_u"});
    Json reports = Json::array();
    Json rows    = Json::array();
    double prev  = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    for (double rho : cfg.rho_list)
    {
        const auto r = multiplicity_report(rho, cfg.params, grid, cfg.steps, optimizer_options(cfg));
        t.row({rho, r.lambda_rho, mechanical_energy(r.u_rho, cfg.params), r.E_e_minimizer, r.u_rho.min()});
        decreasing = decreasing && r.lambda_rho < prev;
        prev       = r.lambda_rho;
        reports.push_back(multiplicity_json(r));
        if (!r.minimizer_converged)
            throw SolverError("minimization at rho = " + fmt17(rho) + " did not converge", rho);
    }
    const std::filesystem::path out(cfg.out_dir);
    write_atomic(out / "bifurcation.csv", t.text());
    write_json(out / "multiplicity.json", reports);
    write_json(out / "summary.json", Json{{"rho_list", cfg.rho_list}, {"lambda_strictly_decreasing", decreasing}});
    write_plot_stub(cfg, "bifurcation.csv", "rho", "lambda_rho");
}

} // namespace detail

// ---------------------------------------------------------------------------
// verification suite

struct InvariantResult
{
    std::string name;
    double measured = 0.0;
    double bound    = 0.0;
    std::string relation; // "<=", ">=" or ">"
    bool pass = false;
};

/// Root of cos(2k) cosh(2k) = 1 near 2.365; the first clamped-clamped mode on
/// an interval of length 2 has eigenvalue beta k^4.
inline double clamped_frequency_root()
{
    double k = 2.365;
    for (int it = 0; it < 50; ++it)
    {
        const double f  = std::cos(2 * k) * std::cosh(2 * k) - 1.0;
        const double df = -2 * std::sin(2 * k) * std::cosh(2 * k) + 2 * std::cos(2 * k) * std::sinh(2 * k);
        const double dk = f / df;
        k -= dk;
        if (std::abs(dk) < 1e-15)
            break;
    }
    return k;
}

inline std::vector<InvariantResult> verify_suite(const RunConfig& cfg)
{
    const ModelParams& p = cfg.params;
    const Grid2D grid(cfg.potential_nx(), cfg.neta);
    const Grid1D& gx = grid.xgrid();
    const double h   = gx.h();
    std::vector<InvariantResult> out;
    auto at_most = [&](std::string name, double v, double b) { out.push_back({std::move(name), v, b, "<=", v <= b}); };
    auto at_least = [&](std::string name, double v, double b) { out.push_back({std::move(name), v, b, ">=", v >= b}); };
    auto above    = [&](std::string name, double v, double b) { out.push_back({std::move(name), v, b, ">", v > b}); };

    {
        const auto s = solve_state(DeflectionProfile(gx), p, grid);
        at_most("flat_gap_energy_error", std::abs(s.energy - 2.0), 1e-6);
        at_most("flat_gap_traction_error", detail::sup_diff(s.g, 1.0), 1e-6);
    }
    {
        const auto s = solve_state(profile_catalog("constant", 0.5, p, gx), p, grid);
        at_most("constant_gap_energy_error", std::abs(s.energy - 4.0), 1e-6);
        at_most("constant_gap_traction_error", detail::sup_diff(s.g, 4.0), 1e-6);
    }

    const auto corpus = random_corpus(p, gx, cfg.corpus, cfg.seed);
    double chain = -std::numeric_limits<double>::infinity(), identity = 0.0;
    for (const auto& u : corpus)
    {
        const auto r = energy_report(u, p, grid);
        chain        = std::max({chain, 2.0 - 10 * h * h - r.lower_bound, r.lower_bound - r.E_e - 10 * h * h,
                                 r.E_e + 10 * h * h - r.upper_bound - 20 * h * h});
        identity     = std::max(identity, std::abs(r.identity_residual));
    }
    at_most("energy_bound_chain_violation", chain, 0.0);
    at_most("boundary_identity_residual", identity, 1e-2);

    {
        const auto c = shape_derivative_check(corpus[0], corpus[1].scaled(0.1), p, grid, 1e-3);
        at_most("shape_derivative_relative_gap", c.gap, 1e-3);
    }

    const auto eig = clamped_eigenpair(p, gx);
    {
        double worst = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < 5; ++k)
        {
            const double s = 0.15 * k, t = s + 0.1;
            worst = std::max(worst, electrostatic_energy(eig.phi1.scaled(s), p, grid)
                                        - electrostatic_energy(eig.phi1.scaled(t), p, grid));
        }
        at_most("monotonicity_violation", worst, kOrderSlack);
    }
    if (p.tau == 0.0)
    {
        const double k = clamped_frequency_root();
        at_most("eigenvalue_relative_error", std::abs(eig.mu1 - p.beta * std::pow(k, 4)) / (p.beta * std::pow(k, 4)),
                1e-3);
    }
    at_most("eigenfunction_asymmetry", eig.phi1.asymmetry(), 1e-12);
    at_most("eigenfunction_max", eig.phi1.max(), 0.0);
    at_most("eigenfunction_min_offset", std::abs(eig.phi1.min() + 1.0), 1e-12);

    OptimizerOptions oo;
    oo.kkt_tol   = cfg.kkt_tol;
    const auto m = minimize_mechanical(cfg.rho, p, grid, oo);
    at_most("minimizer_kkt_residual", m.kkt_residual, cfg.kkt_tol);
    at_most("minimizer_constraint_error", std::abs(m.E_e - cfg.rho), 1e-6 * cfg.rho);
    above("minimizer_lambda", m.lambda_rho, 0.0);
    at_least("multiplier_bound_margin", 4.0 * m.E_m * (1.0 + kBoundSlack), multiplier_bound_rhs(m, p, cfg.rho));
    at_least("pointwise_bound_margin", m.u_rho.min(), pointwise_lower_bound(m.u_rho, cfg.rho));

    const auto b = continue_branch(m.lambda_rho, cfg.steps, p, grid);
    at_least("branch_reached_lambda_rho", b.complete ? 1.0 : 0.0, 1.0);
    double res = 0.0, dsup = std::numeric_limits<double>::infinity(), dee = dsup;
    for (std::size_t k = 1; k < b.points.size(); ++k)
    {
        res  = std::max(res, b.points[k].newton_residual);
        dsup = std::min(dsup, b.points[k].sup_norm - b.points[k - 1].sup_norm);
        dee  = std::min(dee, b.points[k].E_e - b.points[k - 1].E_e);
    }
    at_most("branch_newton_residual", res, 1e-8);
    above("branch_sup_norm_increment", dsup, 0.0);
    above("branch_energy_increment", dee, 0.0);
    if (b.complete)
    {
        const auto& U   = b.points.back();
        const auto pm   = solve_transformed(m.u_rho, p, grid);
        const auto pb   = solve_transformed(U.u, p, grid);
        const double tol = std::max({std::abs(m.E_e - cfg.rho), std::abs(boundary_identity_residual(m.u_rho, p, pm)),
                                     std::abs(boundary_identity_residual(U.u, p, pb))});
        at_least("multiplicity_energy_gap", cfg.rho - U.E_e, 10.0 * tol);
    }
    return out;
}

inline Json verify_json(const std::vector<InvariantResult>& rs)
{
    Json list  = Json::array();
    int failed = 0;
    for (const auto& r : rs)
    {
        list.push_back(Json{{"name", r.name}, {"measured", r.measured}, {"relation", r.relation},
                            {"bound", r.bound}, {"pass", r.pass}});
        failed += r.pass ? 0 : 1;
    }
    return Json{{"invariants", list}, {"total", rs.size()}, {"failed", failed}, {"passed", failed == 0}};
}

/// Dispatch on cfg.mode and return a process exit code. Diagnostics go to err.
inline int run(const RunConfig& cfg, std::ostream& err = std::cerr)
{
    try
    {
        cfg.validate();
    }
    catch (const ConfigError& e)
    {
        err << e.what() << '\n';
        return kExitConfigError;
    }
    try
    {
        write_manifest(cfg);
        if (cfg.mode == "solve-potential")
            detail::run_solve_potential(cfg);
        else if (cfg.mode == "energy")
            detail::run_energy(cfg);
        else if (cfg.mode == "minimize")
            detail::run_minimize(cfg);
        else if (cfg.mode == "branch")
            detail::run_branch(cfg);
        else if (cfg.mode == "bifurcation")
            detail::run_bifurcation(cfg);
        else
        {
            const auto rs = verify_suite(cfg);
            const Json j  = verify_json(rs);
            write_json(std::filesystem::path(cfg.out_dir) / "verify.json", j);
            for (const auto& r : rs)
                if (!r.pass)
                    err << "invariant failed: " << r.name << " measured " << fmt17(r.measured) << ' ' << r.relation
                        << ' ' << fmt17(r.bound) << '\n';
            return j["passed"].get<bool>() ? kExitOk : kExitVerifyFailed;
        }
    }
    catch (const SolverError& e)
    {
        err << "solver failure: " << e.what() << " (residual " << fmt17(e.residual()) << ")\n";
        return kExitSolverError;
    }
    catch (const Error& e)
    {
        err << "solver failure: " << e.what() << '\n';
        return kExitSolverError;
    }
    catch (const std::filesystem::filesystem_error& e)
    {
        err << "output failure: " << e.what() << '\n';
        return kExitSolverError;
    }
    return kExitOk;
}

/// Parse argv into a RunConfig. Returns an exit code when the process should
/// stop (help or a parse error), otherwise nothing.
inline std::optional<int> parse_args(int argc, const char* const* argv, RunConfig& cfg, std::ostream& out = std::cout,
                                     std::ostream& err = std::cerr)
{
    CLI::App app{"Electrostatic MEMS free boundary solver"};
    bind_options(app, cfg);
    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp&)
    {
        out << app.help();
        return kExitOk;
    }
    catch (const CLI::ParseError& e)
    {
        err << "invalid config: " << e.what() << '\n';
        return kExitConfigError;
    }
    return std::nullopt;
}

} // namespace memsfb
