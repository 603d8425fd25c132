// Steps the voltage up until Newton loses the branch, a numerical proxy for
// pull-in. Usage: pull_in [lambda_max] [steps] [epsilon]

#include "memsfb/continuation.hpp"

#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv)
{
    using namespace memsfb;
    const double lambda_max = argc > 1 ? std::atof(argv[1]) : 8.0;
    const int steps         = argc > 2 ? std::atoi(argv[2]) : 16;
    ModelParams p;
    p.epsilon = argc > 3 ? std::atof(argv[3]) : 0.5;
    const Grid2D grid(65, 33);

    try
    {
        const auto br = continue_branch(lambda_max, steps, p, grid);
        for (const auto& q : br.points)
            std::printf("lambda=%8.4f  sup|U|=%.5f  E_e=%.6f  newton=%d\n", q.lambda, q.sup_norm, q.E_e,
                        q.newton_iterations);
        if (br.complete)
            std::printf("no pull-in below lambda=%g\n", lambda_max);
        else
            std::printf("lost the branch at lambda=%g (%s)\n", br.failed_lambda, br.failure.c_str());
    }
    catch (const Error& e)
    {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 0;
}
