// Traces the small-voltage branch and compares it with the energy minimizer
// at the same multiplier. Usage: branch_vs_minimizer [rho] [n]

#include "memsfb/continuation.hpp"

#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv)
{
    using namespace memsfb;
    const double rho = argc > 1 ? std::atof(argv[1]) : 10.0;
    const int n      = argc > 2 ? std::atoi(argv[2]) : 65;

    ModelParams p;
    p.epsilon = 0.5;
    const Grid2D grid(n, (n + 1) / 2);

    try
    {
        const auto m = minimize_mechanical(rho, p, grid);
        std::printf("minimizer: rho=%g lambda=%.6g E_m=%.6g min u=%.4f (%d iterations)\n", rho, m.lambda_rho, m.E_m,
                    m.u_rho.min(), m.iterations);

        const auto br = continue_branch(m.lambda_rho, 8, p, grid);
        std::printf("%10s %12s %12s %10s\n", "lambda", "sup|U|", "E_e(U)", "residual");
        for (const auto& q : br.points)
            std::printf("%10.5f %12.6f %12.8f %10.2e\n", q.lambda, q.sup_norm, q.E_e, q.newton_residual);
        if (!br.complete)
        {
            std::printf("branch stopped at lambda=%g: %s\n", br.failed_lambda, br.failure.c_str());
            return 1;
        }
        std::printf("same lambda, two solutions: E_e %.4f vs %.4f\n", m.E_e, br.points.back().E_e);
    }
    catch (const Error& e)
    {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 0;
}
